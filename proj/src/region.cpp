#include "procams/region.hpp"

#include <Eigen/Dense>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "procams/resample.hpp"

namespace procams {

PixelRect mask_bbox(const Mask& mask) {
  int x0 = mask.width(), y0 = mask.height(), x1 = -1, y1 = -1;
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x)
      if (mask(x, y)) {
        x0 = std::min(x0, x), x1 = std::max(x1, x);
        y0 = std::min(y0, y), y1 = std::max(y1, y);
      }
  if (x1 < 0) throw std::invalid_argument("empty mask");
  return {x0, y0, x1 - x0 + 1, y1 - y0 + 1};
}

namespace {

template <typename T>
BasicRaster<T> crop_impl(const BasicRaster<T>& img, const PixelRect& r) {
  if (r.w < 1 || r.h < 1 || r.x < 0 || r.y < 0 || r.x + r.w > img.width() || r.y + r.h > img.height())
    throw std::invalid_argument("crop rectangle outside image");
  BasicRaster<T> out(r.w, r.h, img.channels());
  for (int y = 0; y < r.h; ++y)
    for (int x = 0; x < r.w; ++x)
      for (int c = 0; c < img.channels(); ++c) out(x, y, c) = img(r.x + x, r.y + y, c);
  return out;
}

}  // namespace

Raster crop(const Raster& img, const PixelRect& rect) { return crop_impl(img, rect); }
Mask crop(const Mask& mask, const PixelRect& rect) { return crop_impl(mask, rect); }

Cropped crop_to_bbox(const Raster& img, const Mask& mask) {
  if (!img.same_frame(mask)) throw std::invalid_argument("crop_to_bbox: mask frame mismatch");
  const PixelRect box = mask_bbox(mask);
  Cropped out{crop(img, box), Eigen::Vector2i(box.x, box.y)};
  for (int y = 0; y < box.h; ++y)
    for (int x = 0; x < box.w; ++x)
      if (!mask(box.x + x, box.y + y))
        for (int c = 0; c < img.channels(); ++c) out.image(x, y, c) = 0.0f;
  return out;
}

PixelRect max_inscribed_rect(const Mask& mask) {
  const int w = mask.width(), h = mask.height();
  std::vector<int> heights(w, 0), left(w), right(w), stack;
  stack.reserve(w);
  PixelRect best{0, 0, 0, 0};
  auto better = [&](const PixelRect& c) {
    return std::make_tuple(-c.area(), c.y, c.x, -c.w) < std::make_tuple(-best.area(), best.y, best.x, -best.w);
  };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) heights[x] = mask(x, y) ? heights[x] + 1 : 0;
    // Nearest strictly lower bar on each side.
    stack.clear();
    for (int x = 0; x < w; ++x) {
      while (!stack.empty() && heights[stack.back()] >= heights[x]) stack.pop_back();
      left[x] = stack.empty() ? 0 : stack.back() + 1;
      stack.push_back(x);
    }
    stack.clear();
    for (int x = w - 1; x >= 0; --x) {
      while (!stack.empty() && heights[stack.back()] >= heights[x]) stack.pop_back();
      right[x] = stack.empty() ? w - 1 : stack.back() - 1;
      stack.push_back(x);
    }
    for (int x = 0; x < w; ++x) {
      if (heights[x] == 0) continue;
      const PixelRect cand{left[x], y - heights[x] + 1, right[x] - left[x] + 1, heights[x]};
      if (best.area() == 0 || better(cand)) best = cand;
    }
  }
  if (best.area() == 0) throw std::invalid_argument("max_inscribed_rect: empty mask");
  return best;
}

AffineMap::AffineMap(const Eigen::Matrix<double, 2, 3>& m) : m_(m) {
  if (!(m_.leftCols<2>().determinant() > 0)) throw std::invalid_argument("affine map must have positive determinant");
}

Eigen::Vector2d AffineMap::apply_inverse(const Eigen::Vector2d& v) const {
  return m_.leftCols<2>().inverse() * (v - m_.col(2));
}

bool AffineMap::is_identity(double tol) const {
  Eigen::Matrix<double, 2, 3> id = Eigen::Matrix<double, 2, 3>::Zero();
  id.leftCols<2>().setIdentity();
  return (m_ - id).cwiseAbs().maxCoeff() <= tol;
}

AffineMap fit_optimal_affine(const PixelRect& rect, FrameSize projector, bool preserve_aspect) {
  if (rect.w < 1 || rect.h < 1) throw std::invalid_argument("fit_optimal_affine: empty rectangle");
  double sx = static_cast<double>(rect.w) / projector.width;
  double sy = static_cast<double>(rect.h) / projector.height;
  if (preserve_aspect) sx = sy = std::min(sx, sy);
  Eigen::Matrix<double, 2, 3> m = Eigen::Matrix<double, 2, 3>::Zero();
  m(0, 0) = sx;
  m(1, 1) = sy;
  m(0, 2) = rect.x + 0.5 * (rect.w - sx * projector.width);
  m(1, 2) = rect.y + 0.5 * (rect.h - sy * projector.height);
  return AffineMap(m);
}

Desired render_desired(const Raster& x, const AffineMap& map, FrameSize target) {
  Desired d{Raster(target.width, target.height, x.channels()), make_mask(target.width, target.height, false)};
  for (int y = 0; y < target.height; ++y)
    for (int xx = 0; xx < target.width; ++xx) {
      const Eigen::Vector2d u = map.apply_inverse(Eigen::Vector2d(xx + 0.5, y + 0.5));
      if (u.x() < 0 || u.y() < 0 || u.x() > x.width() || u.y() > x.height()) continue;
      d.content(xx, y) = 1;
      for (int c = 0; c < x.channels(); ++c)
        d.image(xx, y, c) = static_cast<float>(sample_bilinear(x, u.x() - 0.5, u.y() - 0.5, c));
    }
  return d;
}

}  // namespace procams
