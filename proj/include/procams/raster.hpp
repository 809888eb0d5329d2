#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace procams {

/// Dense H x W x C image, row-major, interleaved channels.
///
/// Samples nominally live in [0, 1] but intermediate results (pre-clamp
/// compensation images, flow components) may leave that range; use
/// is_normalized() when a caller needs the guarantee.
template <typename Scalar>
class BasicRaster {
 public:
  using value_type = Scalar;

  BasicRaster() = default;

  BasicRaster(int width, int height, int channels, Scalar fill = Scalar(0))
      : width_(width), height_(height), channels_(channels) {
    if (width < 1 || height < 1)
      throw std::invalid_argument("raster dimensions must be >= 1, got " + std::to_string(width) +
                                  "x" + std::to_string(height));
    if (channels < 1 || channels > 4)
      throw std::invalid_argument("raster channel count must be in [1,4], got " +
                                  std::to_string(channels));
    data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
  }

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  Scalar& operator()(int x, int y, int c = 0) { return data_[index(x, y, c)]; }
  Scalar operator()(int x, int y, int c = 0) const { return data_[index(x, y, c)]; }

  /// Edge-clamped access.
  Scalar clamped(int x, int y, int c = 0) const {
    x = std::clamp(x, 0, width_ - 1);
    y = std::clamp(y, 0, height_ - 1);
    return data_[index(x, y, c)];
  }

  std::span<Scalar> samples() { return data_; }
  std::span<const Scalar> samples() const { return data_; }
  Scalar* data() { return data_.data(); }
  const Scalar* data() const { return data_.data(); }

  bool same_shape(const BasicRaster& o) const {
    return width_ == o.width_ && height_ == o.height_ && channels_ == o.channels_;
  }
  template <typename Other>
  bool same_frame(const BasicRaster<Other>& o) const { return width_ == o.width() && height_ == o.height(); }

  bool is_normalized() const {
    return std::all_of(data_.begin(), data_.end(),
                       [](Scalar v) { return v >= Scalar(0) && v <= Scalar(1); });
  }
  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](Scalar v) { return std::isfinite(v); });
  }

  void fill(Scalar v) { std::fill(data_.begin(), data_.end(), v); }

  bool operator==(const BasicRaster&) const = default;

 private:
  std::size_t index(int x, int y, int c) const {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<Scalar> data_;
};

using Raster = BasicRaster<float>;

/// Throws std::invalid_argument naming `what` unless every sample is in [0,1].
void require_normalized(const Raster& img, const char* what);
void require_same_shape(const Raster& a, const Raster& b, const char* what);

Raster clamp01(Raster img);
/// Single-channel binary mask (1 where predicate holds).
std::size_t mask_count(const Raster& mask);

struct PixelRect {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;
  long long area() const { return static_cast<long long>(w) * h; }
  bool contains(int px, int py) const { return px >= x && px < x + w && py >= y && py < y + h; }
  bool operator==(const PixelRect&) const = default;
};

}  // namespace procams
