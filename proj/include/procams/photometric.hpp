#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <functional>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "procams/flow.hpp"
#include "procams/raster.hpp"

namespace procams {

/// Prior levels used for a given prior count: K=1 -> {64}, K=3 -> {0,128,255}, K=5 -> all five.
std::vector<int> prior_levels_for(int k);

/// Captures of uniform gray projections at strictly increasing 8-bit levels.
struct SurfacePriorSet {
  std::vector<int> levels;
  std::vector<Raster> priors;

  int k() const { return static_cast<int>(levels.size()); }
  /// Throws std::invalid_argument on a K outside {1,3,5}, wrong levels, or mismatched frames.
  void validate() const;
  /// Subset for `k` out of a set that contains every required level.
  SurfacePriorSet select(int k) const;
  const Raster& at_level(int level) const;
};

struct ClipReport {
  std::array<double, 3> channel_fraction{0, 0, 0};
  double fraction = 0;             ///< clipped samples / considered samples
  std::size_t flat_samples = 0;    ///< non-invertible samples filled from a neighbour
};

/// Per-pixel, per-channel forward photometric model fitted from surface priors.
///
/// Curve mode stores a monotone piecewise-linear map from drive level to captured value with
/// one knot per prior level (interpolated linearly, clamped outside the knots). Gain mode
/// (K = 1) stores a line through the origin and the single prior.
class PhotometricModel {
 public:
  enum class Mode { GainOnly, Curve };

  PhotometricModel() = default;
  PhotometricModel(Mode mode, std::vector<double> drive_knots, std::vector<Raster> knot_values);

  /// Every pixel maps drive d to d.
  static PhotometricModel identity(int width, int height);
  /// Uniform gain model.
  static PhotometricModel gain(int width, int height, double g);

  Mode mode() const { return mode_; }
  int width() const { return knot_values_.front().width(); }
  int height() const { return knot_values_.front().height(); }
  const std::vector<double>& drive_knots() const { return drive_knots_; }
  const std::vector<Raster>& knot_values() const { return knot_values_; }

  /// Row-normalised channel mixing applied to the drive before the curves, acting on
  /// d^mixing_gamma and mapped back with the reciprocal exponent.
  const std::optional<Eigen::Matrix3d>& mixing() const { return mixing_; }
  double mixing_gamma() const { return mixing_gamma_; }
  void set_mixing(const Eigen::Matrix3d& m, double gamma = 1.0);
  Eigen::Vector3d mix(const Eigen::Vector3d& d) const;
  Eigen::Vector3d unmix(const Eigen::Vector3d& z) const;

  double evaluate(int x, int y, int c, double drive) const;
  double gamut_min(int x, int y, int c) const { return evaluate(x, y, c, 0.0); }
  double gamut_max(int x, int y, int c) const { return evaluate(x, y, c, 1.0); }
  /// Capture at drive 0 when a level-0 prior was fitted; 0 otherwise.
  double ambient_estimate(int x, int y, int c) const;

  /// Throws std::invalid_argument unless every pixel/channel curve is non-decreasing.
  void check_monotone() const;

 private:
  Mode mode_ = Mode::Curve;
  std::vector<double> drive_knots_;
  std::vector<Raster> knot_values_;
  std::optional<Eigen::Matrix3d> mixing_;
  double mixing_gamma_ = 1.0;
};

/// Pool-adjacent-violators least-squares projection onto non-decreasing sequences.
std::vector<double> isotonic_fit(const std::vector<double>& values);

PhotometricModel fit_from_priors(const SurfacePriorSet& priors);

struct MixingFit {
  Eigen::Matrix3d matrix = Eigen::Matrix3d::Identity();
  Eigen::Vector3d offset = Eigen::Vector3d::Zero();
  double residual_rms = 0;
};

/// Least squares capture ~= V * drive + o over (drive, capture) probe pairs.
/// Needs >= 4 probes spanning an affine basis; throws std::invalid_argument otherwise.
MixingFit fit_mixing_matrix(const std::vector<std::pair<Eigen::Vector3d, Eigen::Vector3d>>& probes);

struct GammaMixingFit {
  Eigen::Matrix3d matrix = Eigen::Matrix3d::Identity();  ///< rows sum to 1
  double gamma = 1.0;
  double residual_rms = 0;
};

/// Fits z^g ~= M d^g (rows of M summing to 1) over (drive d, gray-equivalent drive z) pairs,
/// searching g over [1, 4]. Needs probes with non-binary drives to pin g down.
GammaMixingFit fit_gamma_mixing(const std::vector<std::pair<Eigen::Vector3d, Eigen::Vector3d>>& probes);

Raster apply_forward(const PhotometricModel& model, const Raster& drive);

struct InverseResult {
  Raster drive;
  ClipReport clip;
};

/// Per-pixel inverse curve lookup with gamut clamping. Clipping is counted over `region` when
/// given, otherwise over every pixel.
InverseResult apply_pseudo_inverse(const PhotometricModel& model, const Raster& target,
                                   const Mask* region = nullptr);

struct NayarOptions {
  double alpha = 1.0;
  int max_iters = 50;
  double tol = 1e-3;
  bool record_iterates = false;
};

template <typename Scalar>
struct NayarResult {
  BasicRaster<Scalar> drive;
  std::vector<double> residual_trace;        ///< mean |target - capture| per evaluated iterate
  std::vector<BasicRaster<Scalar>> iterates; ///< iterate t = 1, 2, ... when recorded (iterate 1 is the target)
  bool converged = false;
};

struct NayarDivergence : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <typename Scalar>
using CaptureFn = std::function<BasicRaster<Scalar>(const BasicRaster<Scalar>&)>;

/// Feedback refinement drive <- clamp(drive + alpha * (target - capture(drive))) starting from the
/// target. Stops on tolerance, on a clamped fixed point, or after max_iters; throws
/// NayarDivergence if the residual grows three iterations in a row.
template <typename Scalar>
NayarResult<Scalar> nayar_refine(const BasicRaster<Scalar>& target, const CaptureFn<Scalar>& capture,
                                 const NayarOptions& opt = {}) {
  if (!(opt.alpha > 0 && opt.alpha < 2)) throw std::invalid_argument("nayar_refine: alpha must be in (0,2)");
  if (opt.max_iters < 1) throw std::invalid_argument("nayar_refine: max_iters must be >= 1");
  const auto clamp_unit = [](Scalar v) { return std::clamp(v, Scalar(0), Scalar(1)); };
  NayarResult<Scalar> res{target, {}, {}, false};
  for (auto& v : res.drive.samples()) v = clamp_unit(v);
  BasicRaster<Scalar> residual(target.width(), target.height(), target.channels());
  int rising = 0;
  for (int t = 1; t <= opt.max_iters; ++t) {
    if (opt.record_iterates) res.iterates.push_back(res.drive);
    const BasicRaster<Scalar> cap = capture(res.drive);
    if (!cap.same_shape(target)) throw std::invalid_argument("nayar_refine: capture shape mismatch");
    double err = 0;
    {
      const auto ts = target.samples();
      const auto cs = cap.samples();
      auto rs = residual.samples();
      for (std::size_t i = 0; i < ts.size(); ++i) {
        rs[i] = ts[i] - cs[i];
        err += std::abs(static_cast<double>(rs[i]));
      }
      err /= static_cast<double>(ts.size());
    }
    if (!res.residual_trace.empty()) rising = err > res.residual_trace.back() ? rising + 1 : 0;
    res.residual_trace.push_back(err);
    if (rising >= 3)
      throw NayarDivergence("nayar_refine diverged: residual rose for 3 consecutive iterations, now " +
                            std::to_string(err) + " at iteration " + std::to_string(t));
    if (err < opt.tol) {
      res.converged = true;
      break;
    }
    BasicRaster<Scalar> next = res.drive;
    bool moved = false;
    const auto rs = residual.samples();
    auto ns = next.samples();
    for (std::size_t i = 0; i < ns.size(); ++i) {
      const Scalar v = clamp_unit(ns[i] + static_cast<Scalar>(opt.alpha) * rs[i]);
      moved |= v != ns[i];
      ns[i] = v;
    }
    if (!moved) break;  // clamped fixed point: what remains is out of gamut
    res.drive = std::move(next);
  }
  return res;
}

}  // namespace procams
