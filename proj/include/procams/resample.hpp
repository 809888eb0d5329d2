#pragma once

#include "procams/raster.hpp"

namespace procams {

/// Bilinear sample at continuous pixel-center coordinates (pixel i at i.0), edge clamped.
template <typename Scalar>
double sample_bilinear(const BasicRaster<Scalar>& img, double x, double y, int c) {
  const double fx = std::floor(x);
  const double fy = std::floor(y);
  const int x0 = static_cast<int>(fx);
  const int y0 = static_cast<int>(fy);
  const double ax = x - fx;
  const double ay = y - fy;
  const double v00 = img.clamped(x0, y0, c);
  const double v10 = img.clamped(x0 + 1, y0, c);
  const double v01 = img.clamped(x0, y0 + 1, c);
  const double v11 = img.clamped(x0 + 1, y0 + 1, c);
  return (1.0 - ay) * ((1.0 - ax) * v00 + ax * v10) + ay * ((1.0 - ax) * v01 + ax * v11);
}

/// Pixel-center aligned bilinear resize. Same-size requests return an exact copy.
Raster resample_bilinear(const Raster& img, int new_width, int new_height);

/// 2x reduction with a 2x2 box filter (odd trailing rows/columns edge-clamped).
Raster downsample2(const Raster& img);

/// Separable 5-tap binomial blur, edge clamped.
Raster blur5(const Raster& img);

}  // namespace procams
