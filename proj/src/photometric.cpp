#include "procams/photometric.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <deque>
#include <string>

#include "procams/parallel.hpp"
#include "procams/sim.hpp"

namespace procams {

std::vector<int> prior_levels_for(int k) {
  switch (k) {
    case 1: return {64};
    case 3: return {0, 128, 255};
    case 5: return {0, 64, 128, 191, 255};
    default: throw std::invalid_argument("prior count K must be 1, 3 or 5, got " + std::to_string(k));
  }
}

void SurfacePriorSet::validate() const {
  if (levels != prior_levels_for(k()))
    throw std::invalid_argument("surface prior levels do not match the K=" + std::to_string(k()) + " configuration");
  if (priors.size() != levels.size()) throw std::invalid_argument("one prior per level required");
  for (const auto& p : priors) {
    if (!p.same_shape(priors.front())) throw std::invalid_argument("surface priors are not aligned");
    if (!p.all_finite()) throw std::invalid_argument("surface prior contains non-finite samples");
  }
}

const Raster& SurfacePriorSet::at_level(int level) const {
  for (std::size_t i = 0; i < levels.size(); ++i)
    if (levels[i] == level) return priors[i];
  throw std::out_of_range("no surface prior at level " + std::to_string(level));
}

SurfacePriorSet SurfacePriorSet::select(int k) const {
  SurfacePriorSet out;
  for (int level : prior_levels_for(k)) {
    out.levels.push_back(level);
    out.priors.push_back(at_level(level));
  }
  return out;
}

PhotometricModel::PhotometricModel(Mode mode, std::vector<double> drive_knots, std::vector<Raster> knot_values)
    : mode_(mode), drive_knots_(std::move(drive_knots)), knot_values_(std::move(knot_values)) {
  if (drive_knots_.empty() || drive_knots_.size() != knot_values_.size())
    throw std::invalid_argument("photometric model needs one knot raster per drive knot");
  if (mode_ == Mode::GainOnly && drive_knots_.size() != 1) throw std::invalid_argument("gain model has one knot");
  if (mode_ == Mode::Curve && drive_knots_.size() < 2) throw std::invalid_argument("curve model needs >= 2 knots");
  for (std::size_t i = 1; i < drive_knots_.size(); ++i)
    if (!(drive_knots_[i] > drive_knots_[i - 1])) throw std::invalid_argument("drive knots must increase");
  for (const auto& k : knot_values_)
    if (!k.same_shape(knot_values_.front()) || k.channels() != 3)
      throw std::invalid_argument("knot rasters must be aligned 3-channel images");
}

PhotometricModel PhotometricModel::identity(int width, int height) {
  return PhotometricModel(Mode::Curve, {0.0, 1.0}, {Raster(width, height, 3, 0.0f), Raster(width, height, 3, 1.0f)});
}

PhotometricModel PhotometricModel::gain(int width, int height, double g) {
  return PhotometricModel(Mode::GainOnly, {1.0}, {Raster(width, height, 3, static_cast<float>(g))});
}

void PhotometricModel::set_mixing(const Eigen::Matrix3d& m, double gamma) {
  if (std::abs(m.determinant()) < 1e-9) throw std::invalid_argument("mixing estimate is singular");
  if (!(gamma > 0) || !std::isfinite(gamma)) throw std::invalid_argument("mixing exponent must be positive");
  mixing_ = m;
  mixing_gamma_ = gamma;
}

Eigen::Vector3d PhotometricModel::mix(const Eigen::Vector3d& d) const {
  if (!mixing_) return d;
  const Eigen::Vector3d lin = d.cwiseMax(0.0).array().pow(mixing_gamma_);
  return (*mixing_ * lin).cwiseMax(0.0).cwiseMin(1.0).array().pow(1.0 / mixing_gamma_);
}

Eigen::Vector3d PhotometricModel::unmix(const Eigen::Vector3d& z) const {
  if (!mixing_) return z;
  const Eigen::Vector3d lin = z.cwiseMax(0.0).array().pow(mixing_gamma_);
  return (mixing_->inverse() * lin).cwiseMax(0.0).cwiseMin(1.0).array().pow(1.0 / mixing_gamma_);
}

double PhotometricModel::evaluate(int x, int y, int c, double d) const {
  if (mode_ == Mode::GainOnly) return knot_values_[0](x, y, c) / drive_knots_[0] * d;
  const auto& k = drive_knots_;
  if (d <= k.front()) return knot_values_.front()(x, y, c);
  if (d >= k.back()) return knot_values_.back()(x, y, c);
  const std::size_t i = static_cast<std::size_t>(std::upper_bound(k.begin(), k.end(), d) - k.begin()) - 1;
  const double t = (d - k[i]) / (k[i + 1] - k[i]);
  return (1.0 - t) * knot_values_[i](x, y, c) + t * knot_values_[i + 1](x, y, c);
}

double PhotometricModel::ambient_estimate(int x, int y, int c) const {
  if (mode_ == Mode::Curve && drive_knots_.front() == 0.0) return knot_values_.front()(x, y, c);
  return 0.0;
}

void PhotometricModel::check_monotone() const {
  for (std::size_t i = 1; i < knot_values_.size(); ++i) {
    const auto a = knot_values_[i - 1].samples();
    const auto b = knot_values_[i].samples();
    for (std::size_t j = 0; j < a.size(); ++j)
      if (b[j] < a[j]) throw std::invalid_argument("photometric curve is not monotone");
  }
  if (mode_ == Mode::GainOnly)
    for (float g : knot_values_[0].samples())
      if (g < 0) throw std::invalid_argument("photometric gain is negative");
}

std::vector<double> isotonic_fit(const std::vector<double>& values) {
  struct Block {
    double sum;
    int n;
    double mean() const { return sum / n; }
  };
  std::vector<Block> blocks;
  for (double v : values) {
    blocks.push_back({v, 1});
    while (blocks.size() > 1 && blocks[blocks.size() - 2].mean() > blocks.back().mean()) {
      blocks[blocks.size() - 2].sum += blocks.back().sum;
      blocks[blocks.size() - 2].n += blocks.back().n;
      blocks.pop_back();
    }
  }
  std::vector<double> out;
  out.reserve(values.size());
  for (const auto& b : blocks) out.insert(out.end(), b.n, b.mean());
  return out;
}

PhotometricModel fit_from_priors(const SurfacePriorSet& set) {
  set.validate();
  const int w = set.priors.front().width(), h = set.priors.front().height();
  if (set.priors.front().channels() != 3) throw std::invalid_argument("surface priors must have 3 channels");
  std::vector<double> knots;
  for (int l : set.levels) knots.push_back(l / 255.0);

  if (set.k() == 1) {
    // Line through the origin: no level-0 sample, so ambient is assumed to be zero.
    Raster gain_knot = set.priors[0];
    for (auto& v : gain_knot.samples()) v = std::max(v, 0.0f);
    return PhotometricModel(PhotometricModel::Mode::GainOnly, knots, {gain_knot});
  }

  std::vector<Raster> values(set.priors.size(), Raster(w, h, 3));
  parallel_for(h, [&](int y) {
    std::vector<double> v(set.priors.size());
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) {
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = set.priors[i](x, y, c);
        const auto mono = isotonic_fit(v);
        for (std::size_t i = 0; i < v.size(); ++i) values[i](x, y, c) = static_cast<float>(mono[i]);
      }
  });
  return PhotometricModel(PhotometricModel::Mode::Curve, knots, std::move(values));
}

MixingFit fit_mixing_matrix(const std::vector<std::pair<Eigen::Vector3d, Eigen::Vector3d>>& probes) {
  if (probes.size() < 4) throw std::invalid_argument("fit_mixing_matrix needs at least 4 probes");
  const Eigen::Index n = static_cast<Eigen::Index>(probes.size());
  Eigen::MatrixXd a(n, 4), b(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    a.row(i) << probes[i].first.transpose(), 1.0;
    b.row(i) = probes[i].second.transpose();
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  qr.setThreshold(1e-10);
  if (qr.rank() < 4) throw std::invalid_argument("fit_mixing_matrix: probes are rank deficient");
  const Eigen::MatrixXd x = qr.solve(b);  // 4 x 3
  MixingFit fit;
  fit.matrix = x.topRows<3>().transpose();
  fit.offset = x.row(3).transpose();
  fit.residual_rms = std::sqrt((a * x - b).squaredNorm() / static_cast<double>(b.size()));
  return fit;
}

GammaMixingFit fit_gamma_mixing(const std::vector<std::pair<Eigen::Vector3d, Eigen::Vector3d>>& probes) {
  if (probes.size() < 3) throw std::invalid_argument("fit_gamma_mixing needs at least 3 probes");
  const Eigen::Index n = static_cast<Eigen::Index>(probes.size());
  auto fit_at = [&](double g) {
    Eigen::MatrixXd a(n, 3), b(n, 3);
    for (Eigen::Index i = 0; i < n; ++i) {
      a.row(i) = probes[i].first.cwiseMax(0.0).array().pow(g).transpose();
      b.row(i) = probes[i].second.cwiseMax(0.0).array().pow(g).transpose();
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    qr.setThreshold(1e-10);
    if (qr.rank() < 3) throw std::invalid_argument("fit_gamma_mixing: probes are rank deficient");
    GammaMixingFit f;
    f.matrix = qr.solve(b).transpose();
    for (int r = 0; r < 3; ++r) f.matrix.row(r) /= f.matrix.row(r).sum();
    f.gamma = g;
    double se = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::Vector3d lin = f.matrix * a.row(i).transpose();
      const Eigen::Vector3d z = lin.cwiseMax(0.0).array().pow(1.0 / g);
      se += (z - probes[i].second).squaredNorm();
    }
    f.residual_rms = std::sqrt(se / (3.0 * static_cast<double>(n)));
    return f;
  };
  GammaMixingFit best = fit_at(1.0);
  for (int i = 1; i <= 300; ++i) {
    const GammaMixingFit f = fit_at(1.0 + 0.01 * i);
    if (f.residual_rms < best.residual_rms) best = f;
  }
  return best;
}

namespace {

void require_model_frame(const PhotometricModel& m, const Raster& img, const char* what) {
  if (img.width() != m.width() || img.height() != m.height() || img.channels() != 3)
    throw std::invalid_argument(std::string(what) + ": image frame does not match the photometric model");
}

}  // namespace

Raster apply_forward(const PhotometricModel& model, const Raster& drive) {
  require_model_frame(model, drive, "apply_forward");
  Raster out(drive.width(), drive.height(), 3);
  parallel_for(drive.height(), [&](int y) {
    for (int x = 0; x < drive.width(); ++x) {
      const Eigen::Vector3d d = model.mix(Eigen::Vector3d(drive(x, y, 0), drive(x, y, 1), drive(x, y, 2)));
      for (int c = 0; c < 3; ++c) out(x, y, c) = static_cast<float>(model.evaluate(x, y, c, d[c]));
    }
  });
  return out;
}

InverseResult apply_pseudo_inverse(const PhotometricModel& model, const Raster& target, const Mask* region) {
  require_model_frame(model, target, "apply_pseudo_inverse");
  if (region && (region->width() != target.width() || region->height() != target.height()))
    throw std::invalid_argument("apply_pseudo_inverse: region frame mismatch");
  const int w = target.width(), h = target.height();
  constexpr double kFlat = 1e-6;
  constexpr double kClipTol = 1e-6;
  InverseResult res{Raster(w, h, 3), {}};
  Mask flat(w, h, 3, 0);
  std::vector<std::array<std::size_t, 3>> clipped_rows(h, {0, 0, 0});
  std::vector<std::size_t> counted_rows(h, 0);
  const auto& knots = model.drive_knots();

  parallel_for(h, [&](int y) {
    for (int x = 0; x < w; ++x) {
      const bool counted = !region || (*region)(x, y);
      counted_rows[y] += counted;
      for (int c = 0; c < 3; ++c) {
        const double t = target(x, y, c);
        const double lo = model.gamut_min(x, y, c), hi = model.gamut_max(x, y, c);
        double d = 0;
        if (hi - lo < kFlat) {
          flat(x, y, c) = 1;
        } else if (t <= lo) {
          d = 0;
          if (counted && t < lo - kClipTol) ++clipped_rows[y][c];
        } else if (t >= hi) {
          d = 1;
          if (counted && t > hi + kClipTol) ++clipped_rows[y][c];
        } else if (model.mode() == PhotometricModel::Mode::GainOnly) {
          d = t / hi;
        } else {
          // First segment whose upper knot reaches t; knots are non-decreasing.
          std::size_t i = 0;
          while (i + 2 < knots.size() && model.knot_values()[i + 1](x, y, c) < t) ++i;
          const double v0 = model.knot_values()[i](x, y, c), v1 = model.knot_values()[i + 1](x, y, c);
          const double f = v1 > v0 ? (t - v0) / (v1 - v0) : 0.0;
          d = knots[i] + std::clamp(f, 0.0, 1.0) * (knots[i + 1] - knots[i]);
        }
        res.drive(x, y, c) = static_cast<float>(d);
      }
    }
  });

  // Fill flat samples from the nearest invertible sample of the same channel.
  for (int c = 0; c < 3; ++c) {
    std::vector<int> origin(static_cast<std::size_t>(w) * h, -1);
    std::deque<int> queue;
    for (int i = 0; i < w * h; ++i)
      if (!flat(i % w, i / w, c)) origin[i] = i, queue.push_back(i);
    if (queue.empty()) continue;
    while (!queue.empty()) {
      const int i = queue.front();
      queue.pop_front();
      const int x = i % w, y = i / w;
      const int nbr[4][2] = {{x - 1, y}, {x + 1, y}, {x, y - 1}, {x, y + 1}};
      for (const auto& n : nbr) {
        if (n[0] < 0 || n[1] < 0 || n[0] >= w || n[1] >= h) continue;
        const int j = n[1] * w + n[0];
        if (origin[j] >= 0) continue;
        origin[j] = origin[i];
        queue.push_back(j);
      }
    }
    for (int i = 0; i < w * h; ++i)
      if (flat(i % w, i / w, c)) {
        res.drive(i % w, i / w, c) = res.drive(origin[i] % w, origin[i] / w, c);
        ++res.clip.flat_samples;
      }
  }

  if (model.mixing()) {
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const Eigen::Vector3d d = model.unmix(Eigen::Vector3d(res.drive(x, y, 0), res.drive(x, y, 1), res.drive(x, y, 2)));
        for (int c = 0; c < 3; ++c) res.drive(x, y, c) = static_cast<float>(d[c]);
      }
  }

  std::size_t counted = 0;
  std::array<std::size_t, 3> clipped{0, 0, 0};
  for (int y = 0; y < h; ++y) {
    counted += counted_rows[y];
    for (int c = 0; c < 3; ++c) clipped[c] += clipped_rows[y][c];
  }
  if (counted) {
    for (int c = 0; c < 3; ++c) res.clip.channel_fraction[c] = static_cast<double>(clipped[c]) / counted;
    res.clip.fraction = static_cast<double>(clipped[0] + clipped[1] + clipped[2]) / (3.0 * counted);
  }
  return res;
}

}  // namespace procams
