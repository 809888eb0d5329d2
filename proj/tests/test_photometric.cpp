#include <doctest.h>

#include <filesystem>
#include <random>

#include "procams/dataset.hpp"
#include "procams/photometric.hpp"
#include "procams/serialize.hpp"
#include "procams/sim.hpp"

using namespace procams;

namespace {

SurfacePriorSet priors_of(const SetupConfig& st) {
  SurfacePriorSet p;
  for (int level : kPriorLevels) {
    p.levels.push_back(level);
    p.priors.push_back(capture_surface_prior(level, st));
  }
  return p;
}

// RMSE of the model against noiseless captures of uniform drives at every non-knot 8-bit level.
double held_out_rmse(const PhotometricModel& m, const SetupConfig& st, const Mask& fov) {
  double sum = 0;
  std::size_t n = 0;
  for (int level = 1; level < 255; level += 3) {
    if (is_prior_level(level)) continue;
    const double d = level / 255.0;
    const Raster cap = render_capture(uniform_image(st.projector_size, static_cast<float>(d)), st, false);
    for (int y = 0; y < cap.height(); ++y)
      for (int x = 0; x < cap.width(); ++x) {
        if (!fov(x, y)) continue;
        for (int c = 0; c < 3; ++c) {
          const double e = m.evaluate(x, y, c, d) - cap(x, y, c);
          sum += e * e;
          ++n;
        }
      }
  }
  return std::sqrt(sum / n);
}

}  // namespace

TEST_CASE("prior level sets") {
  CHECK(prior_levels_for(1) == std::vector<int>{64});
  CHECK(prior_levels_for(3) == std::vector<int>{0, 128, 255});
  CHECK(prior_levels_for(5) == std::vector<int>{0, 64, 128, 191, 255});
  CHECK_THROWS_AS(prior_levels_for(2), std::invalid_argument);
  SurfacePriorSet bad{{0, 128}, {Raster(4, 4, 3), Raster(4, 4, 3)}};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  SurfacePriorSet misaligned{{64}, {Raster(4, 4, 3)}};
  misaligned.levels = {0, 128, 255};
  misaligned.priors = {Raster(4, 4, 3), Raster(5, 4, 3), Raster(4, 4, 3)};
  CHECK_THROWS_AS(fit_from_priors(misaligned), std::invalid_argument);
}

TEST_CASE("isotonic projection") {
  CHECK(isotonic_fit({1, 3, 2, 4}) == std::vector<double>{1, 2.5, 2.5, 4});
  CHECK(isotonic_fit({0.1, 0.2}) == std::vector<double>{0.1, 0.2});
  const auto flat = isotonic_fit({3, 2, 1});
  for (double v : flat) CHECK(v == doctest::Approx(2.0));
}

TEST_CASE("linear setups recover the gain for every K") {
  SetupConfig st = SetupConfig::identity(24, 24);
  st.reflectance = texture_noise(5, {24, 24}, 0.1, 1.0, 1.0);
  const SurfacePriorSet all = priors_of(st);
  for (int k : {1, 3, 5}) {
    const PhotometricModel m = fit_from_priors(all.select(k));
    CHECK(m.mode() == (k == 1 ? PhotometricModel::Mode::GainOnly : PhotometricModel::Mode::Curve));
    double worst = 0;
    for (int y = 0; y < 24; ++y)
      for (int x = 0; x < 24; ++x)
        for (int c = 0; c < 3; ++c)
          for (double d : {0.0, 0.1, 0.37, 0.5, 0.81, 1.0})
            worst = std::max(worst, std::abs(m.evaluate(x, y, c, d) - st.reflectance(x, y, c) * d));
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("identity setup knots") {
  const PhotometricModel m = fit_from_priors(priors_of(SetupConfig::identity(8, 8)));
  for (std::size_t i = 0; i < m.knot_values().size(); ++i) {
    CHECK(m.drive_knots()[i] == doctest::Approx(kPriorLevels[i] / 255.0));
    for (float v : m.knot_values()[i].samples()) CHECK(v == doctest::Approx(kPriorLevels[i] / 255.0f));
  }
  m.check_monotone();
}

TEST_CASE("gamma setups order the prior counts") {
  int ordered = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const SetupConfig st = generate_setup(100 + seed, Difficulty::Planar, 64);
    const Mask fov = render_fov_masks(st).camera;
    const SurfacePriorSet all = priors_of(st);
    const double e1 = held_out_rmse(fit_from_priors(all.select(1)), st, fov);
    const double e3 = held_out_rmse(fit_from_priors(all.select(3)), st, fov);
    const double e5 = held_out_rmse(fit_from_priors(all.select(5)), st, fov);
    ordered += e5 < e3 && e3 < e1;
  }
  CHECK(ordered == 10);
}

TEST_CASE("fitted curves are monotone and bound the gamut") {
  const SetupConfig st = generate_setup(8, Difficulty::Textured, 48);
  const PhotometricModel m = fit_from_priors(priors_of(st));
  m.check_monotone();
  for (int y = 0; y < 48; y += 5)
    for (int x = 0; x < 48; x += 5)
      for (int c = 0; c < 3; ++c) {
        CHECK(m.ambient_estimate(x, y, c) <= m.evaluate(x, y, c, 0.5) + 1e-12);
        CHECK(m.gamut_min(x, y, c) == doctest::Approx(m.knot_values().front()(x, y, c)));
        CHECK(m.gamut_max(x, y, c) == doctest::Approx(m.knot_values().back()(x, y, c)));
      }
}

TEST_CASE("mixing matrix fit") {
  Eigen::Matrix3d v;
  v << 0.9, 0.05, 0.02, 0.08, 0.85, 0.04, 0.01, 0.07, 0.95;
  const Eigen::Vector3d o(0.03, 0.01, 0.02);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<std::pair<Eigen::Vector3d, Eigen::Vector3d>> probes;
  for (int i = 0; i < 8; ++i) {
    const Eigen::Vector3d d(u(rng), u(rng), u(rng));
    probes.emplace_back(d, v * d + o);
  }
  const MixingFit fit = fit_mixing_matrix(probes);
  CHECK((fit.matrix - v).norm() < 1e-6);
  CHECK((fit.offset - o).norm() < 1e-6);

  probes.clear();
  for (int i = 0; i < 6; ++i) {
    const Eigen::Vector3d d(u(rng), u(rng), u(rng));
    probes.emplace_back(d, d);
  }
  const MixingFit id = fit_mixing_matrix(probes);
  CHECK((id.matrix - Eigen::Matrix3d::Identity()).norm() < 1e-9);
  CHECK(id.offset.norm() < 1e-9);

  std::normal_distribution<double> noise(0, 0.01);
  probes.clear();
  for (int i = 0; i < 50; ++i) {
    const Eigen::Vector3d d(u(rng), u(rng), u(rng));
    probes.emplace_back(d, v * d + o + Eigen::Vector3d(noise(rng), noise(rng), noise(rng)));
  }
  CHECK((fit_mixing_matrix(probes).matrix - v).norm() < 0.02);

  const Eigen::Vector3d same(0.5, 0.5, 0.5);
  CHECK_THROWS_AS(fit_mixing_matrix({{same, same}, {same, same}, {same, same}, {same, same}}), std::invalid_argument);
}

TEST_CASE("mixing fit in linear light") {
  Eigen::Matrix3d v;
  v << 1.0, 0.06, 0.03, 0.09, 1.0, 0.02, 0.04, 0.08, 1.0;
  Eigen::Matrix3d vn = v;
  for (int r = 0; r < 3; ++r) vn.row(r) /= vn.row(r).sum();
  const double g = 2.2;
  std::vector<std::pair<Eigen::Vector3d, Eigen::Vector3d>> probes;
  for (const Eigen::Vector3d d : {Eigen::Vector3d(1, 0, 0), Eigen::Vector3d(0, 1, 0), Eigen::Vector3d(0, 0, 1),
                                  Eigen::Vector3d(0.5, 0, 0), Eigen::Vector3d(1, 0.5, 0), Eigen::Vector3d(0, 0.3, 1)}) {
    Eigen::Vector3d z;
    for (int c = 0; c < 3; ++c) z[c] = std::pow(vn.row(c).dot(Eigen::Vector3d(std::pow(d[0], g), std::pow(d[1], g), std::pow(d[2], g))), 1 / g);
    probes.emplace_back(d, z);
  }
  const GammaMixingFit fit = fit_gamma_mixing(probes);
  CHECK(fit.gamma == doctest::Approx(g).epsilon(1e-9));
  CHECK((fit.matrix - vn).norm() < 1e-9);
  CHECK(fit.residual_rms < 1e-12);

  PhotometricModel m = PhotometricModel::identity(2, 2);
  m.set_mixing(fit.matrix, fit.gamma);
  for (const auto& [d, z] : probes) {
    CHECK((m.mix(d) - z).norm() < 1e-9);
    CHECK((m.unmix(m.mix(d)) - d).norm() < 1e-6);
  }
  CHECK_THROWS_AS(m.set_mixing(fit.matrix, 0.0), std::invalid_argument);

  const auto dir = std::filesystem::temp_directory_path() / "procams_mixing_model";
  std::filesystem::remove_all(dir);
  save_model(dir, m);
  const PhotometricModel back = load_model(dir);
  std::filesystem::remove_all(dir);
  REQUIRE(back.mixing());
  CHECK(*back.mixing() == *m.mixing());
  CHECK(back.mixing_gamma() == m.mixing_gamma());
}

TEST_CASE("forward and pseudo-inverse on simple models") {
  Raster x(6, 5, 3, 0.8f);
  CHECK(apply_forward(PhotometricModel::identity(6, 5), x) == x);
  const Raster halved = apply_forward(PhotometricModel::gain(6, 5, 0.5), x);
  for (float v : halved.samples()) CHECK(v == doctest::Approx(0.4f));

  const InverseResult id = apply_pseudo_inverse(PhotometricModel::identity(6, 5), x);
  CHECK(id.drive == x);
  CHECK(id.clip.fraction == 0.0);

  const InverseResult g = apply_pseudo_inverse(PhotometricModel::gain(6, 5, 0.5), Raster(6, 5, 3, 0.4f));
  for (float v : g.drive.samples()) CHECK(v == doctest::Approx(0.8f));
  const InverseResult over = apply_pseudo_inverse(PhotometricModel::gain(6, 5, 0.5), Raster(6, 5, 3, 0.9f));
  for (float v : over.drive.samples()) CHECK(v == 1.0f);
  CHECK(over.clip.fraction == 1.0);
}

TEST_CASE("simulator-fitted model reproduces captures and inverts them") {
  const SetupConfig st = generate_setup(12, Difficulty::Textured, 64);
  const Mask fov = render_fov_masks(st).camera;
  const PhotometricModel m = fit_from_priors(priors_of(st));
  // Interpolation error at held-out drives, reported against the 5e-3 target.
  const double rmse = held_out_rmse(m, st, fov);
  MESSAGE("K=5 held-out RMSE " << rmse);
  CHECK(rmse < 1e-2);

  // In-gamut targets: forward(inverse(t)) reproduces t.
  Raster t(64, 64, 3);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.1, 0.9);
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x)
      for (int c = 0; c < 3; ++c) t(x, y, c) = static_cast<float>(m.gamut_min(x, y, c) + u(rng) * (m.gamut_max(x, y, c) - m.gamut_min(x, y, c)));
  const InverseResult inv = apply_pseudo_inverse(m, t);
  const Raster back = apply_forward(m, inv.drive);
  double sum = 0;
  for (std::size_t i = 0; i < t.size(); ++i) sum += std::pow(back.samples()[i] - t.samples()[i], 2);
  CHECK(std::sqrt(sum / t.size()) < 1e-2);
}

TEST_CASE("nayar refinement") {
  using R = BasicRaster<double>;
  const CaptureFn<double> identity = [](const R& x) { return x; };
  R target(3, 2, 1, 0.4);
  const auto id = nayar_refine(target, identity);
  CHECK(id.converged);
  CHECK(id.residual_trace.size() == 1);
  CHECK(id.drive == target);

  const CaptureFn<double> half = [](const R& x) {
    R y = x;
    for (auto& v : y.samples()) v *= 0.5;
    return y;
  };
  NayarOptions opt;
  opt.record_iterates = true;
  opt.tol = 1e-12;
  const auto g = nayar_refine(target, half, opt);
  // Iterate t starts from the target; x_t = 0.8 (1 - 0.5^t) for t >= 1.
  for (std::size_t t = 0; t < g.iterates.size(); ++t)
    CHECK(std::abs(g.iterates[t](0, 0) - 0.8 * (1 - std::pow(0.5, t + 1))) < 1e-9);
  for (std::size_t t = 1; t < g.residual_trace.size(); ++t) CHECK(g.residual_trace[t] <= g.residual_trace[t - 1]);
  CHECK(std::abs(g.drive(0, 0) - 0.8) < 1e-9);

  const auto clipped = nayar_refine(R(2, 2, 1, 0.9), half);
  CHECK(clipped.drive(0, 0) == 1.0);
  CHECK(std::abs(clipped.residual_trace.back() - 0.4) < 1e-12);
  CHECK_FALSE(clipped.converged);

  // Slope 2.5 makes the alpha = 1 update overshoot by a factor 1.5 each step.
  const CaptureFn<double> steep = [](const R& x) {
    R y = x;
    for (auto& v : y.samples()) v = 0.5 + 2.5 * (v - 0.5);
    return y;
  };
  CHECK_THROWS_AS(nayar_refine(R(1, 1, 1, 0.501), steep, NayarOptions{1.0, 50, 1e-9, false}), NayarDivergence);
  CHECK_THROWS_AS(nayar_refine(target, identity, NayarOptions{2.0, 50, 1e-3, false}), std::invalid_argument);
}
