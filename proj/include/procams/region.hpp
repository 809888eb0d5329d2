#pragma once

#include <Eigen/Geometry>

#include "procams/flow.hpp"
#include "procams/raster.hpp"
#include "procams/sim.hpp"

namespace procams {

struct Cropped {
  Raster image;
  Eigen::Vector2i offset = Eigen::Vector2i::Zero();
};

/// Bounding box of the set pixels. Throws std::invalid_argument on an empty mask.
PixelRect mask_bbox(const Mask& mask);
/// Sub-image covered by `rect` (no masking).
Raster crop(const Raster& img, const PixelRect& rect);
Mask crop(const Mask& mask, const PixelRect& rect);
/// Crop to the mask's bounding box, zeroing pixels outside the mask.
Cropped crop_to_bbox(const Raster& img, const Mask& mask);

/// Largest axis-aligned all-ones rectangle. Ties go to the smallest y, then x, then the wider one.
PixelRect max_inscribed_rect(const Mask& mask);

/// 2x3 map u -> A u + t on continuous corner coordinates (pixel i spans [i, i+1)).
class AffineMap {
 public:
  AffineMap() : m_(Eigen::Matrix<double, 2, 3>::Zero()) { m_.leftCols<2>().setIdentity(); }
  explicit AffineMap(const Eigen::Matrix<double, 2, 3>& m);

  const Eigen::Matrix<double, 2, 3>& matrix() const { return m_; }
  Eigen::Vector2d apply(const Eigen::Vector2d& u) const { return m_ * u.homogeneous(); }
  Eigen::Vector2d apply_inverse(const Eigen::Vector2d& v) const;
  bool is_identity(double tol = 1e-12) const;

 private:
  Eigen::Matrix<double, 2, 3> m_;
};

/// Scale + translate fitting the projector frame into `rect`. With `preserve_aspect` the frame
/// is letterboxed and centered; otherwise stretched to fill.
AffineMap fit_optimal_affine(const PixelRect& rect, FrameSize projector, bool preserve_aspect = true);

struct Desired {
  Raster image;    ///< desired capture in the target frame, 0 outside the mapped content
  Mask content;    ///< pixels whose center maps inside the source frame
};

/// Renders `x` through `map` into a target frame (bilinear, pixel centers).
Desired render_desired(const Raster& x, const AffineMap& map, FrameSize target);

}  // namespace procams
