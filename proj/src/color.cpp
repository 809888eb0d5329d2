#include "procams/color.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace procams {

namespace {

void check_unit(double v, const char* fn) {
  if (!(v >= 0.0 && v <= 1.0))
    throw std::domain_error(std::string(fn) + ": sample " + std::to_string(v) + " outside [0,1]");
}

// sRGB primaries, D65.
const Eigen::Matrix3d& rgb_to_xyz() {
  static const Eigen::Matrix3d m = (Eigen::Matrix3d() << 0.4124564, 0.3575761, 0.1804375,
                                    0.2126729, 0.7151522, 0.0721750,
                                    0.0193339, 0.1191920, 0.9503041)
                                       .finished();
  return m;
}

double lab_f(double t) {
  constexpr double delta = 6.0 / 29.0;
  if (t > delta * delta * delta) return std::cbrt(t);
  return t / (3.0 * delta * delta) + 4.0 / 29.0;
}

}  // namespace

ColorTriple ColorTriple::lab(double l, double a, double b) {
  if (l < 0.0 || l > 100.0) throw std::domain_error("Lab L* outside [0,100]");
  return {Eigen::Vector3d(l, a, b), ColorSpace::Lab};
}

double srgb_to_linear(double v) {
  check_unit(v, "srgb_to_linear");
  if (v <= 0.04045) return v / 12.92;
  return std::pow((v + 0.055) / 1.055, 2.4);
}

double linear_to_srgb(double v) {
  check_unit(v, "linear_to_srgb");
  if (v <= 0.0031308) return v * 12.92;
  return 1.055 * std::pow(v, 1.0 / 2.4) - 0.055;
}

Eigen::Vector3d rgb_to_lab(const Eigen::Vector3d& linear_rgb) {
  // White is the image of (1,1,1) so equal-component triples are exactly neutral.
  static const Eigen::Vector3d white = rgb_to_xyz() * Eigen::Vector3d::Ones();
  const Eigen::Vector3d xyz = rgb_to_xyz() * linear_rgb;
  const double fx = lab_f(xyz.x() / white.x());
  const double fy = lab_f(xyz.y() / white.y());
  const double fz = lab_f(xyz.z() / white.z());
  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

ColorTriple rgb_to_lab(const ColorTriple& rgb) {
  if (rgb.space != ColorSpace::LinearRGB) throw std::invalid_argument("rgb_to_lab expects linear RGB");
  if ((rgb.value.array() < 0.0).any()) throw std::domain_error("rgb_to_lab: negative component");
  return {rgb_to_lab(rgb.value), ColorSpace::Lab};
}

Raster raster_to_lab(const Raster& img) {
  if (img.channels() != 3) throw std::invalid_argument("raster_to_lab needs 3 channels");
  Raster out(img.width(), img.height(), 3);
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      Eigen::Vector3d rgb(img(x, y, 0), img(x, y, 1), img(x, y, 2));
      const Eigen::Vector3d lab = rgb_to_lab(rgb.cwiseMax(0.0));
      for (int c = 0; c < 3; ++c) out(x, y, c) = static_cast<float>(lab[c]);
    }
  return out;
}

Raster to_luma(const Raster& img) {
  if (img.channels() == 1) return img;
  if (img.channels() < 3) throw std::invalid_argument("to_luma needs 1 or 3 channels");
  Raster out(img.width(), img.height(), 1);
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      out(x, y) = 0.2126f * img(x, y, 0) + 0.7152f * img(x, y, 1) + 0.0722f * img(x, y, 2);
  return out;
}

void require_normalized(const Raster& img, const char* what) {
  if (!img.is_normalized())
    throw std::invalid_argument(std::string(what) + ": samples must lie in [0,1]");
}

void require_same_shape(const Raster& a, const Raster& b, const char* what) {
  if (!a.same_shape(b))
    throw std::invalid_argument(std::string(what) + ": shape mismatch " + std::to_string(a.width()) +
                                "x" + std::to_string(a.height()) + "x" + std::to_string(a.channels()) +
                                " vs " + std::to_string(b.width()) + "x" + std::to_string(b.height()) +
                                "x" + std::to_string(b.channels()));
}

Raster clamp01(Raster img) {
  for (auto& v : img.samples()) v = std::clamp(v, 0.0f, 1.0f);
  return img;
}

std::size_t mask_count(const Raster& mask) {
  std::size_t n = 0;
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x) n += mask(x, y) > 0.5f;
  return n;
}

}  // namespace procams
