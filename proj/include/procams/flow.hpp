#pragma once

#include <cstdint>
#include <limits>

#include <Eigen/Core>

#include "procams/raster.hpp"

namespace procams {

using Mask = BasicRaster<std::uint8_t>;

Mask make_mask(int width, int height, bool value);
/// Thresholds channel 0 of a raster (> 0.5).
Mask mask_from_raster(const Raster& r);
Raster mask_to_raster(const Mask& m);
std::size_t count(const Mask& m);

/// Backward displacement field: output pixel p pulls from source location p + flow(p).
///
/// The field lives on a target frame (width x height) and points into a source frame
/// (source_width x source_height), which may differ, e.g. projector vs camera crop.
class FlowField {
 public:
  FlowField() = default;
  FlowField(int width, int height, int source_width, int source_height);

  static FlowField zero(int width, int height) { return FlowField(width, height, width, height); }

  int width() const { return vectors_.width(); }
  int height() const { return vectors_.height(); }
  int source_width() const { return source_width_; }
  int source_height() const { return source_height_; }

  Eigen::Vector2d at(int x, int y) const {
    return {vectors_(x, y, 0), vectors_(x, y, 1)};
  }
  /// Source coordinate p + flow(p).
  Eigen::Vector2d source(int x, int y) const { return Eigen::Vector2d(x, y) + at(x, y); }
  void set(int x, int y, const Eigen::Vector2d& d) {
    vectors_(x, y, 0) = static_cast<float>(d.x());
    vectors_(x, y, 1) = static_cast<float>(d.y());
    valid_(x, y) = 1;
  }
  void invalidate(int x, int y) {
    vectors_(x, y, 0) = std::numeric_limits<float>::quiet_NaN();
    vectors_(x, y, 1) = std::numeric_limits<float>::quiet_NaN();
    valid_(x, y) = 0;
  }
  bool valid(int x, int y) const { return valid_(x, y) != 0; }

  const BasicRaster<float>& vectors() const { return vectors_; }
  BasicRaster<float>& vectors() { return vectors_; }
  const Mask& validity() const { return valid_; }
  Mask& validity() { return valid_; }

  double valid_fraction() const;
  /// Largest |flow| over valid pixels.
  double max_magnitude() const;
  /// Keeps the current vectors but overrides the validity mask.
  void set_validity(const Mask& m);

 private:
  BasicRaster<float> vectors_;
  Mask valid_;
  int source_width_ = 0;
  int source_height_ = 0;
};

struct Warped {
  Raster image;
  Mask mask;
};

/// Bilinear backward warp of `img` (which must be the flow's source frame) into the flow's frame.
/// Invalid flow pixels and samples falling outside the source produce 0 and a cleared mask bit.
Warped warp(const Raster& img, const FlowField& flow);

struct InversionReport {
  double mean_composition_error = 0;  ///< mean |q - (c + flow(c))| over inverted pixels
  double valid_fraction = 0;
};

/// Inverse of an injective flow, defined on the flow's source frame and pointing back into its
/// frame. Each output pixel gathers forward-mapped samples within `radius` and fits a local affine
/// map by least squares, which also handles integer (decoded) correspondences.
FlowField invert_flow(const FlowField& flow, double radius = 2.5, InversionReport* report = nullptr);

/// Fills invalid pixels with the vector of the nearest valid pixel. Validity becomes all-true
/// unless `restrict_to` is given, in which case only pixels set in it are filled/marked valid.
FlowField fill_invalid_nearest(const FlowField& flow, const Mask* restrict_to = nullptr);

struct EndPointError {
  double mean = 0;
  double max = 0;
  std::size_t count = 0;
};

/// End-point error over pixels valid in both fields (and in `mask` when given).
EndPointError end_point_error(const FlowField& estimate, const FlowField& truth, const Mask* mask = nullptr);

}  // namespace procams
