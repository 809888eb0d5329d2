#include "procams/metrics.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "procams/color.hpp"

namespace procams {

namespace {

void check_mask(const Raster& a, const Mask* mask) {
  if (mask && (mask->width() != a.width() || mask->height() != a.height()))
    throw std::invalid_argument("metric mask frame mismatch");
}

double deg2rad(double d) { return d * std::numbers::pi / 180.0; }
double rad2deg(double r) { return r * 180.0 / std::numbers::pi; }

}  // namespace

PsnrRmse psnr_rmse(const Raster& a, const Raster& b, const Mask* mask) {
  require_same_shape(a, b, "psnr_rmse");
  check_mask(a, mask);
  double sum = 0;
  std::size_t n = 0;
  for (int y = 0; y < a.height(); ++y)
    for (int x = 0; x < a.width(); ++x) {
      if (mask && !(*mask)(x, y)) continue;
      for (int c = 0; c < a.channels(); ++c) {
        const double d = static_cast<double>(a(x, y, c)) - b(x, y, c);
        sum += d * d;
      }
      n += a.channels();
    }
  if (n == 0) throw std::invalid_argument("psnr_rmse: empty mask");
  PsnrRmse r;
  r.rmse = std::sqrt(sum / static_cast<double>(n));
  r.psnr = r.rmse < 1e-5 ? kPsnrCap : std::min(kPsnrCap, -20.0 * std::log10(r.rmse));
  return r;
}

double ssim(const Raster& a, const Raster& b, const SsimOptions& opt, const Mask* mask) {
  require_same_shape(a, b, "ssim");
  check_mask(a, mask);
  const int win = opt.window;
  if (a.width() < win || a.height() < win) throw std::invalid_argument("ssim: image smaller than window");
  const int r = win / 2;

  std::vector<double> g(win);
  double gs = 0;
  for (int i = 0; i < win; ++i) gs += g[i] = std::exp(-0.5 * (i - r) * (i - r) / (opt.sigma * opt.sigma));
  for (auto& v : g) v /= gs;

  const double c1 = (opt.k1) * (opt.k1), c2 = (opt.k2) * (opt.k2);
  const Raster pa = opt.per_channel ? a : to_luma(a);
  const Raster pb = opt.per_channel ? b : to_luma(b);
  const int w = pa.width(), h = pa.height();
  const int ow = w - win + 1, oh = h - win + 1;

  // Windows entirely inside the mask (via an integral image of the mask).
  std::vector<int> inside;
  if (mask) {
    std::vector<long long> integ(static_cast<std::size_t>(w + 1) * (h + 1), 0);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        integ[(y + 1) * static_cast<std::size_t>(w + 1) + x + 1] = ((*mask)(x, y) ? 1 : 0) +
            integ[y * static_cast<std::size_t>(w + 1) + x + 1] + integ[(y + 1) * static_cast<std::size_t>(w + 1) + x] -
            integ[y * static_cast<std::size_t>(w + 1) + x];
    inside.resize(static_cast<std::size_t>(ow) * oh);
    for (int y = 0; y < oh; ++y)
      for (int x = 0; x < ow; ++x) {
        const auto at = [&](int xx, int yy) { return integ[yy * static_cast<std::size_t>(w + 1) + xx]; };
        inside[static_cast<std::size_t>(y) * ow + x] = at(x + win, y + win) - at(x, y + win) - at(x + win, y) + at(x, y) == static_cast<long long>(win) * win;
      }
  }

  double total = 0;
  std::size_t windows = 0;
  for (int c = 0; c < pa.channels(); ++c) {
    // Horizontal pass of the five moment images.
    std::vector<double> hz(static_cast<std::size_t>(ow) * h * 5, 0.0);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < ow; ++x) {
        double m[5] = {0, 0, 0, 0, 0};
        for (int i = 0; i < win; ++i) {
          const double va = pa(x + i, y, c), vb = pb(x + i, y, c);
          m[0] += g[i] * va;
          m[1] += g[i] * vb;
          m[2] += g[i] * va * va;
          m[3] += g[i] * vb * vb;
          m[4] += g[i] * va * vb;
        }
        for (int k = 0; k < 5; ++k) hz[(static_cast<std::size_t>(y) * ow + x) * 5 + k] = m[k];
      }
    for (int y = 0; y < oh; ++y)
      for (int x = 0; x < ow; ++x) {
        if (mask && !inside[static_cast<std::size_t>(y) * ow + x]) continue;
        double m[5] = {0, 0, 0, 0, 0};
        for (int i = 0; i < win; ++i)
          for (int k = 0; k < 5; ++k) m[k] += g[i] * hz[(static_cast<std::size_t>(y + i) * ow + x) * 5 + k];
        const double va = m[2] - m[0] * m[0], vb = m[3] - m[1] * m[1], cov = m[4] - m[0] * m[1];
        total += ((2 * m[0] * m[1] + c1) * (2 * cov + c2)) / ((m[0] * m[0] + m[1] * m[1] + c1) * (va + vb + c2));
        ++windows;
      }
  }
  if (windows == 0) throw std::invalid_argument("ssim: no window fits inside the mask");
  return total / static_cast<double>(windows);
}

double ciede2000(const Eigen::Vector3d& lab1, const Eigen::Vector3d& lab2) {
  const double l1 = lab1[0], a1 = lab1[1], b1 = lab1[2];
  const double l2 = lab2[0], a2 = lab2[1], b2 = lab2[2];
  const double c1 = std::hypot(a1, b1), c2 = std::hypot(a2, b2);
  const double c_bar = 0.5 * (c1 + c2);
  const double c7 = std::pow(c_bar, 7);
  const double g = 0.5 * (1 - std::sqrt(c7 / (c7 + std::pow(25.0, 7))));
  const double a1p = (1 + g) * a1, a2p = (1 + g) * a2;
  const double c1p = std::hypot(a1p, b1), c2p = std::hypot(a2p, b2);
  auto hue = [](double b, double ap) {
    if (b == 0 && ap == 0) return 0.0;
    double h = rad2deg(std::atan2(b, ap));
    return h < 0 ? h + 360.0 : h;
  };
  const double h1p = hue(b1, a1p), h2p = hue(b2, a2p);

  const double dlp = l2 - l1;
  const double dcp = c2p - c1p;
  double dhp = 0;
  if (c1p * c2p != 0) {
    dhp = h2p - h1p;
    if (dhp > 180) dhp -= 360;
    else if (dhp < -180) dhp += 360;
  }
  const double dHp = 2 * std::sqrt(c1p * c2p) * std::sin(deg2rad(dhp / 2));

  const double lbp = 0.5 * (l1 + l2);
  const double cbp = 0.5 * (c1p + c2p);
  double hbp = h1p + h2p;
  if (c1p * c2p != 0) {
    if (std::abs(h1p - h2p) <= 180) hbp = 0.5 * (h1p + h2p);
    else if (h1p + h2p < 360) hbp = 0.5 * (h1p + h2p + 360);
    else hbp = 0.5 * (h1p + h2p - 360);
  }
  const double t = 1 - 0.17 * std::cos(deg2rad(hbp - 30)) + 0.24 * std::cos(deg2rad(2 * hbp)) +
                   0.32 * std::cos(deg2rad(3 * hbp + 6)) - 0.20 * std::cos(deg2rad(4 * hbp - 63));
  const double dtheta = 30 * std::exp(-std::pow((hbp - 275) / 25, 2));
  const double cbp7 = std::pow(cbp, 7);
  const double rc = 2 * std::sqrt(cbp7 / (cbp7 + std::pow(25.0, 7)));
  const double sl = 1 + 0.015 * (lbp - 50) * (lbp - 50) / std::sqrt(20 + (lbp - 50) * (lbp - 50));
  const double sc = 1 + 0.045 * cbp;
  const double sh = 1 + 0.015 * cbp * t;
  const double rt = -std::sin(deg2rad(2 * dtheta)) * rc;
  const double tl = dlp / sl, tc = dcp / sc, th = dHp / sh;
  return std::sqrt(tl * tl + tc * tc + th * th + rt * tc * th);
}

double de00(const Raster& lab_a, const Raster& lab_b, const Mask* mask) {
  require_same_shape(lab_a, lab_b, "de00");
  check_mask(lab_a, mask);
  if (lab_a.channels() != 3) throw std::invalid_argument("de00 expects 3-channel Lab rasters");
  double sum = 0;
  std::size_t n = 0;
  for (int y = 0; y < lab_a.height(); ++y)
    for (int x = 0; x < lab_a.width(); ++x) {
      if (mask && !(*mask)(x, y)) continue;
      sum += ciede2000({lab_a(x, y, 0), lab_a(x, y, 1), lab_a(x, y, 2)}, {lab_b(x, y, 0), lab_b(x, y, 1), lab_b(x, y, 2)});
      ++n;
    }
  if (n == 0) throw std::invalid_argument("de00: empty mask");
  return sum / static_cast<double>(n);
}

MetricBlock compute_metrics(const Raster& a, const Raster& b, const Mask* mask) {
  MetricBlock m;
  const auto pr = psnr_rmse(a, b, mask);
  m.psnr = pr.psnr;
  m.rmse = pr.rmse;
  m.ssim = ssim(a, b, {}, mask);
  m.de00 = de00(raster_to_lab(a), raster_to_lab(b), mask);
  m.valid_pixels = mask ? count(*mask) : a.pixel_count();
  return m;
}

}  // namespace procams
