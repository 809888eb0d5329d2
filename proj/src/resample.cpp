#include "procams/resample.hpp"

#include "procams/parallel.hpp"

namespace procams {

Raster resample_bilinear(const Raster& img, int new_width, int new_height) {
  if (new_width < 1 || new_height < 1) throw std::invalid_argument("resample target must be >= 1");
  if (new_width == img.width() && new_height == img.height()) return img;
  Raster out(new_width, new_height, img.channels());
  const double sx = static_cast<double>(img.width()) / new_width;
  const double sy = static_cast<double>(img.height()) / new_height;
  parallel_for(new_height, [&](int y) {
    const double src_y = (y + 0.5) * sy - 0.5;
    for (int x = 0; x < new_width; ++x) {
      const double src_x = (x + 0.5) * sx - 0.5;
      for (int c = 0; c < img.channels(); ++c)
        out(x, y, c) = static_cast<float>(sample_bilinear(img, src_x, src_y, c));
    }
  });
  return out;
}

Raster downsample2(const Raster& img) {
  const int w = std::max(1, (img.width() + 1) / 2);
  const int h = std::max(1, (img.height() + 1) / 2);
  Raster out(w, h, img.channels());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < img.channels(); ++c)
        out(x, y, c) = 0.25f * (img.clamped(2 * x, 2 * y, c) + img.clamped(2 * x + 1, 2 * y, c) +
                                img.clamped(2 * x, 2 * y + 1, c) + img.clamped(2 * x + 1, 2 * y + 1, c));
  return out;
}

Raster blur5(const Raster& img) {
  static constexpr float k[5] = {1.f / 16, 4.f / 16, 6.f / 16, 4.f / 16, 1.f / 16};
  Raster tmp(img.width(), img.height(), img.channels());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      for (int c = 0; c < img.channels(); ++c) {
        float s = 0;
        for (int i = -2; i <= 2; ++i) s += k[i + 2] * img.clamped(x + i, y, c);
        tmp(x, y, c) = s;
      }
  Raster out(img.width(), img.height(), img.channels());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      for (int c = 0; c < img.channels(); ++c) {
        float s = 0;
        for (int i = -2; i <= 2; ++i) s += k[i + 2] * tmp.clamped(x, y + i, c);
        out(x, y, c) = s;
      }
  return out;
}

}  // namespace procams
