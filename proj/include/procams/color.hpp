#pragma once

#include <Eigen/Core>

#include "procams/raster.hpp"

namespace procams {

enum class ColorSpace { LinearRGB, SRGB, Lab };

/// Three components plus the space they are expressed in.
struct ColorTriple {
  Eigen::Vector3d value = Eigen::Vector3d::Zero();
  ColorSpace space = ColorSpace::LinearRGB;

  static ColorTriple linear(double r, double g, double b) {
    return {Eigen::Vector3d(r, g, b), ColorSpace::LinearRGB};
  }
  static ColorTriple lab(double l, double a, double b);
};

/// sRGB electro-optical transfer. Throws std::domain_error outside [0,1].
double srgb_to_linear(double v);
/// Inverse of srgb_to_linear. Throws std::domain_error outside [0,1].
double linear_to_srgb(double v);

/// Linear sRGB-primaries RGB -> CIE L*a*b* under D65.
ColorTriple rgb_to_lab(const ColorTriple& rgb);
Eigen::Vector3d rgb_to_lab(const Eigen::Vector3d& linear_rgb);

/// Per-pixel Lab conversion of a 3-channel linear raster (negative samples clamped to 0).
Raster raster_to_lab(const Raster& linear_rgb);

/// Rec. 709 luma of a linear raster; 1-channel inputs are returned as is.
Raster to_luma(const Raster& img);

}  // namespace procams
