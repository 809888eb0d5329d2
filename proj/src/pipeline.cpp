#include "procams/pipeline.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>
#include <sstream>

#include "procams/color.hpp"
#include "procams/graycode.hpp"
#include "procams/resample.hpp"

namespace procams {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

// Camera-frame flow re-expressed on the crop frame.
FlowField crop_flow(const FlowField& f, const PixelRect& r) {
  FlowField out(r.w, r.h, f.source_width(), f.source_height());
  for (int y = 0; y < r.h; ++y)
    for (int x = 0; x < r.w; ++x) {
      if (!f.valid(r.x + x, r.y + y)) {
        out.invalidate(x, y);
        continue;
      }
      out.set(x, y, f.at(r.x + x, r.y + y) + Eigen::Vector2d(r.x, r.y));
    }
  return out;
}

// Monotone remap of `src` (over `mask`) so its value distribution matches `ref`.
Raster match_histogram(const Raster& src, const Mask& mask, const Raster& ref) {
  std::vector<float> s, r(ref.samples().begin(), ref.samples().end());
  for (int y = 0; y < src.height(); ++y)
    for (int x = 0; x < src.width(); ++x)
      if (mask(x, y)) s.push_back(src(x, y));
  if (s.empty()) return src;
  std::sort(s.begin(), s.end());
  std::sort(r.begin(), r.end());
  Raster out = src;
  for (auto& v : out.samples()) {
    const double rank = static_cast<double>(std::lower_bound(s.begin(), s.end(), v) - s.begin()) / s.size();
    const std::size_t idx = std::min(r.size() - 1, static_cast<std::size_t>(rank * r.size()));
    v = r[idx];
  }
  return out;
}

Raster warp_filled(const Raster& img, const FlowField& flow) {
  return warp(img, flow).image;
}

}  // namespace

std::string to_string(CalibrationMethod m) { return m == CalibrationMethod::Graycode ? "graycode" : "flow"; }

CalibrationMethod parse_method(const std::string& s) {
  if (s == "graycode") return CalibrationMethod::Graycode;
  if (s == "flow") return CalibrationMethod::Flow;
  throw std::invalid_argument("unknown calibration method '" + s + "' (expected graycode|flow)");
}

void CalibrationBundle::validate() const {
  auto fail = [](const std::string& m) { throw std::invalid_argument("inconsistent calibration bundle: " + m); };
  if (camera_mask.width() != camera.width || camera_mask.height() != camera.height) fail("camera mask frame");
  if (crop_mask.width() != crop.w || crop_mask.height() != crop.h) fail("crop mask frame");
  if (flow.width() != projector.width || flow.height() != projector.height || flow.source_width() != crop.w ||
      flow.source_height() != crop.h)
    fail("flow frames");
  if (flow_back.width() != crop.w || flow_back.height() != crop.h || flow_back.source_width() != projector.width ||
      flow_back.source_height() != projector.height)
    fail("inverse flow frames");
  if (model.width() != projector.width || model.height() != projector.height) fail("photometric model frame");
  for (const auto& p : surface_priors.priors)
    if (p.width() != projector.width || p.height() != projector.height) fail("surface prior frame");
  if (inscribed.x < 0 || inscribed.y < 0 || inscribed.x + inscribed.w > crop.w || inscribed.y + inscribed.h > crop.h)
    fail("inscribed rectangle outside the crop");
}

CalibrationBundle identity_bundle(int width, int height) {
  CalibrationBundle b;
  b.projector = b.camera = {width, height};
  b.crop = {0, 0, width, height};
  b.camera_mask = b.crop_mask = make_mask(width, height, true);
  b.flow = b.flow_back = FlowField::zero(width, height);
  for (int level : kPriorLevels) {
    b.surface_priors.levels.push_back(level);
    b.surface_priors.priors.emplace_back(width, height, 3, static_cast<float>(level / 255.0));
  }
  b.k = 5;
  b.model = fit_from_priors(b.surface_priors);
  b.inscribed = b.crop;
  b.affine = AffineMap();
  return b;
}

CalibrationBundle with_prior_count(const CalibrationBundle& bundle, int k) {
  CalibrationBundle b = bundle;
  const auto t0 = Clock::now();
  b.k = k;
  auto mixing = bundle.model.mixing();
  b.model = fit_from_priors(bundle.surface_priors.select(k));
  if (mixing) b.model.set_mixing(*mixing, bundle.model.mixing_gamma());
  b.timing.fit_ms = ms_since(t0);
  return b;
}

Raster calibration_texture(FrameSize size, std::uint64_t seed) {
  std::mt19937_64 rng(seed * 7919 + 17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Raster acc(size.width, size.height, 1, 0.0f);
  double total = 0;
  for (int cell : {16, 8, 4}) {
    const int gw = size.width / cell + 2, gh = size.height / cell + 2;
    Raster grid(gw, gh, 1);
    for (auto& v : grid.samples()) v = static_cast<float>(u(rng));
    const double weight = cell / 4.0;
    for (int y = 0; y < size.height; ++y)
      for (int x = 0; x < size.width; ++x)
        acc(x, y) += static_cast<float>(weight * sample_bilinear(grid, static_cast<double>(x) / cell, static_cast<double>(y) / cell, 0));
    total += weight;
  }
  float lo = 1e9f, hi = -1e9f;
  for (auto& v : acc.samples()) {
    v = static_cast<float>(v / total);
    lo = std::min(lo, v), hi = std::max(hi, v);
  }
  Raster out(size.width, size.height, 3);
  for (int y = 0; y < size.height; ++y)
    for (int x = 0; x < size.width; ++x) {
      const float v = 0.05f + 0.9f * (acc(x, y) - lo) / std::max(1e-6f, hi - lo);
      for (int c = 0; c < 3; ++c) out(x, y, c) = v;
    }
  return out;
}

CalibrationBundle calibrate(const CaptureFn<float>& capture, FrameSize projector, const CalibrationOptions& opt) {
  const auto t0 = Clock::now();
  CalibrationBundle b;
  b.projector = projector;
  b.k = opt.k;
  b.provenance = opt.method;
  prior_levels_for(opt.k);  // validates K early

  const Raster white = capture(uniform_image(projector, 1.0f));
  const Raster black = capture(uniform_image(projector, 0.0f));
  const FovMasks masks = fov_masks_from_captures(white, black, projector);
  if (masks.degenerate) throw std::runtime_error("calibration failed: projector field of view is empty");
  b.camera = {white.width(), white.height()};
  b.camera_mask = masks.camera;
  b.crop = mask_bbox(masks.camera);
  b.crop_mask = crop(masks.camera, b.crop);

  std::vector<Raster> priors_crop;
  for (int level : kPriorLevels)
    priors_crop.push_back(level == 0 ? crop(black, b.crop)
                          : level == 255 ? crop(white, b.crop)
                                         : crop(capture(uniform_image(projector, static_cast<float>(level / 255.0))), b.crop));

  const auto tf = Clock::now();
  if (opt.method == CalibrationMethod::Graycode) {
    std::vector<Raster> caps;
    for (const auto& p : graycode_patterns(projector.width, projector.height)) caps.push_back(capture(p));
    const FlowField decoded = graycode_decode(caps, masks.camera, projector.width, projector.height);
    b.flow_back = crop_flow(decoded, b.crop);
    b.flow = fill_invalid_nearest(invert_flow(b.flow_back, opt.inversion_radius));
  } else {
    // Photometrically normalised reference projection.
    const Raster reference = calibration_texture(projector, opt.reference_seed);
    const Raster cap = crop(capture(reference), b.crop);
    const Raster& mid = priors_crop[2];
    Raster normalized(cap.width(), cap.height(), 3);
    for (int y = 0; y < cap.height(); ++y)
      for (int x = 0; x < cap.width(); ++x)
        for (int c = 0; c < 3; ++c) normalized(x, y, c) = cap(x, y, c) / (mid(x, y, c) + 1e-3f);
    const Raster matched = match_histogram(to_luma(normalized), b.crop_mask, to_luma(reference));

    FlowField init(projector.width, projector.height, b.crop.w, b.crop.h);
    const double sx = static_cast<double>(b.crop.w) / projector.width;
    const double sy = static_cast<double>(b.crop.h) / projector.height;
    for (int y = 0; y < projector.height; ++y)
      for (int x = 0; x < projector.width; ++x)
        init.set(x, y, Eigen::Vector2d((x + 0.5) * sx - 0.5 - x, (y + 0.5) * sy - 0.5 - y));
    const FlowEstimate est = estimate_flow(matched, to_luma(reference), opt.flow, &init, &b.crop_mask);
    if (est.degenerate || est.flow.valid_fraction() < 0.5)
      throw std::runtime_error("calibration failed: flow estimation diverged");
    b.flow = fill_invalid_nearest(est.flow);
    b.flow_back = invert_flow(b.flow, opt.inversion_radius);
  }
  b.flow_back = fill_invalid_nearest(b.flow_back, &b.crop_mask);
  b.timing.flow_ms = ms_since(tf);

  const auto tm = Clock::now();
  for (std::size_t i = 0; i < priors_crop.size(); ++i) {
    b.surface_priors.levels.push_back(kPriorLevels[i]);
    b.surface_priors.priors.push_back(warp_filled(priors_crop[i], b.flow));
  }
  b.model = fit_from_priors(b.surface_priors.select(opt.k));

  if (opt.chromatic) {
    const Eigen::Vector3d probes[] = {{1, 0, 0},   {0, 1, 0},   {0, 0, 1},   {0, 1, 1},   {1, 0, 1},   {1, 1, 0},
                                      {0.5, 0, 0}, {0, 0.5, 0}, {0, 0, 0.5}, {1, 0.5, 0}, {0, 1, 0.5}, {0.5, 0, 1}};
    std::vector<std::pair<Eigen::Vector3d, Eigen::Vector3d>> pairs;
    for (const auto& p : probes) {
      Raster img(projector.width, projector.height, 3);
      for (int y = 0; y < projector.height; ++y)
        for (int x = 0; x < projector.width; ++x)
          for (int c = 0; c < 3; ++c) img(x, y, c) = static_cast<float>(p[c]);
      const Raster warped = warp_filled(crop(capture(img), b.crop), b.flow);
      // Gray-equivalent drive per channel, median over the frame.
      const Raster z = apply_pseudo_inverse(b.model, warped).drive;
      Eigen::Vector3d med;
      for (int c = 0; c < 3; ++c) {
        std::vector<float> v;
        v.reserve(z.pixel_count());
        for (int y = 0; y < z.height(); ++y)
          for (int x = 0; x < z.width(); ++x) v.push_back(z(x, y, c));
        std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
        med[c] = v[v.size() / 2];
      }
      pairs.emplace_back(p, med);
    }
    const GammaMixingFit fit = fit_gamma_mixing(pairs);
    b.model.set_mixing(fit.matrix, fit.gamma);
  }

  b.inscribed = max_inscribed_rect(b.crop_mask);
  b.affine = fit_optimal_affine(b.inscribed, projector, opt.preserve_aspect);
  b.timing.fit_ms = ms_since(tm);
  b.timing.total_ms = ms_since(t0);
  b.validate();
  return b;
}

CalibrationBundle calibrate(const SetupConfig& setup, const CalibrationOptions& options) {
  const ProCamsSimulator sim(setup);
  std::uint64_t key = 0;
  const bool noisy = setup.noise_sigma > 0;
  return calibrate([&](const Raster& x) { return sim.render(x, noisy, ++key); }, setup.projector_size, options);
}

CompensationResult compensate(const Raster& x, const CalibrationBundle& bundle) {
  const auto t0 = Clock::now();
  if (x.width() != bundle.projector.width || x.height() != bundle.projector.height || x.channels() != 3)
    throw std::invalid_argument("compensate: input must be a 3-channel projector-frame image");
  CompensationResult r;
  Desired d = render_desired(x, bundle.affine, bundle.crop_size());
  for (int y = 0; y < d.content.height(); ++y)
    for (int xx = 0; xx < d.content.width(); ++xx)
      d.content(xx, y) = d.content(xx, y) && bundle.crop_mask(xx, y);
  r.desired = std::move(d.image);
  r.desired_mask = std::move(d.content);

  const Raster target = warp(r.desired, bundle.flow).image;
  const Mask region = mask_from_raster(warp(mask_to_raster(r.desired_mask), bundle.flow).image);
  InverseResult inv = apply_pseudo_inverse(bundle.model, target, &region);
  r.drive = clamp01(std::move(inv.drive));
  r.clip_fraction = inv.clip.fraction;
  r.predicted_capture = warp(apply_forward(bundle.model, r.drive), bundle.flow_back).image;
  r.metrics = compute_metrics(r.predicted_capture, r.desired, &r.desired_mask);
  r.wall_ms = ms_since(t0);
  return r;
}

EvaluationResult evaluate_real(const Raster& x, const CalibrationBundle& bundle, const SetupConfig& setup,
                               std::uint64_t noise_key) {
  if (setup.projector_size != bundle.projector || setup.camera_size != bundle.camera)
    throw std::invalid_argument("evaluate_real: bundle was calibrated for different frames");
  const ProCamsSimulator sim(setup);
  const bool noisy = setup.noise_sigma > 0;
  EvaluationResult e{compensate(x, bundle), {}, {}, {}, {}};
  e.compensated_capture = crop(sim.render(e.compensation.drive, noisy, 2 * noise_key + 1'000'001), bundle.crop);
  e.uncompensated_capture = crop(sim.render(x, noisy, 2 * noise_key + 1'000'002), bundle.crop);
  e.compensated = compute_metrics(e.compensated_capture, e.compensation.desired, &e.compensation.desired_mask);
  e.uncompensated = compute_metrics(e.uncompensated_capture, e.compensation.desired, &e.compensation.desired_mask);
  return e;
}

Raster surrogate_recover(const Raster& captured, const CalibrationBundle& bundle) {
  Raster crop_img;
  if (captured.width() == bundle.crop.w && captured.height() == bundle.crop.h) crop_img = captured;
  else if (captured.width() == bundle.camera.width && captured.height() == bundle.camera.height)
    crop_img = crop(captured, bundle.crop);
  else
    throw std::invalid_argument("surrogate_recover: capture matches neither the camera nor the crop frame");
  return clamp01(apply_pseudo_inverse(bundle.model, warp(crop_img, bundle.flow).image).drive);
}

SurrogateLoss surrogate_loss(const Raster& x_hat, const Raster& x) {
  require_same_shape(x_hat, x, "surrogate_loss");
  SurrogateLoss l;
  double sum = 0;
  const auto a = x_hat.samples();
  const auto b = x.samples();
  for (std::size_t i = 0; i < a.size(); ++i) sum += std::abs(static_cast<double>(a[i]) - b[i]);
  l.l1 = sum / static_cast<double>(a.size());
  l.ssim = ssim(x_hat, x);
  l.total = l.l1 + (1.0 - l.ssim);
  return l;
}

bool AblationTable::ordering_holds() const {
  for (std::size_t i = 1; i < summary.size(); ++i)
    if (!(summary[i].psnr > summary[i - 1].psnr)) return false;
  return !summary.empty();
}

AblationTable ablate_priors(const std::vector<AblationSetup>& setups, const std::vector<int>& k_values,
                            const std::vector<Raster>& test_images, const CalibrationOptions& options) {
  if (setups.empty()) throw std::invalid_argument("ablate_priors needs at least one setup");
  for (const auto& s : setups)
    if (s.images.empty() && test_images.empty())
      throw std::invalid_argument("ablate_priors needs at least one test image for setup " + s.id);
  std::vector<int> ks = k_values;
  std::sort(ks.begin(), ks.end());
  AblationTable table;
  std::map<int, AblationSummary> sums;
  for (const auto& s : setups) {
    CalibrationOptions opt = options;
    opt.k = 5;
    const CalibrationBundle base = calibrate(s.setup, opt);
    for (int k : ks) {
      const CalibrationBundle bundle = with_prior_count(base, k);
      const auto& images = s.images.empty() ? test_images : s.images;
      for (std::size_t i = 0; i < images.size(); ++i) {
        const Raster x = resample_bilinear(images[i], s.setup.projector_size.width, s.setup.projector_size.height);
        const EvaluationResult e = evaluate_real(x, bundle, s.setup, i);
        char image_id[16];
        std::snprintf(image_id, sizeof image_id, "%03zu", i);
        table.rows.push_back({s.id, image_id, k, to_string(options.method), e.compensated,
                              e.compensation.clip_fraction, e.compensation.wall_ms});
        auto& agg = sums[k];
        agg.k = k;
        agg.psnr += e.compensated.psnr;
        agg.rmse += e.compensated.rmse;
        agg.ssim += e.compensated.ssim;
        agg.de00 += e.compensated.de00;
        ++agg.rows;
        if (k == ks.front())
          table.rows.push_back({s.id, image_id, k, "uncompensated", e.uncompensated, 0.0, 0.0});
      }
    }
  }
  for (auto& [k, agg] : sums) {
    const double n = static_cast<double>(agg.rows);
    agg.psnr /= n, agg.rmse /= n, agg.ssim /= n, agg.de00 /= n;
    table.summary.push_back(agg);
  }
  return table;
}

std::string metrics_csv_header() {
  return "setup_id,image_id,K,method,psnr,rmse,ssim,de00,clip_frac,ms";
}

std::string to_csv_row(const AblationRow& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, ",%d,%s,%.6f,%.6f,%.6f,%.6f,%.6f,%.3f", r.k, r.method.c_str(), r.metrics.psnr,
                r.metrics.rmse, r.metrics.ssim, r.metrics.de00, r.clip_fraction, r.ms);
  return r.setup_id + "," + r.image_id + buf;
}

}  // namespace procams
