#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "procams/color.hpp"
#include "procams/metrics.hpp"

using namespace procams;

namespace {

Raster textured(int w, int h, std::uint64_t seed) {
  Raster img(w, h, 3);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0, 1);
  const double fx = 0.1 + 0.3 * u(rng), fy = 0.1 + 0.3 * u(rng);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c)
        img(x, y, c) = static_cast<float>(0.5 + 0.25 * std::sin(fx * x + c) * std::cos(fy * y) + 0.1 * (u(rng) - 0.5));
  return img;
}

Raster add_noise(const Raster& img, double sigma, std::uint64_t seed) {
  Raster out = img;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0, sigma);
  for (auto& v : out.samples()) v = static_cast<float>(v + n(rng));
  return out;
}

}  // namespace

TEST_CASE("psnr and rmse closed forms") {
  const Raster a(10, 10, 3, 0.5f);
  const PsnrRmse same = psnr_rmse(a, a);
  CHECK(same.rmse == 0.0);
  CHECK(same.psnr == 99.0);

  Raster b(10, 10, 3);
  for (auto& v : b.samples()) v = 0.6f;
  Raster a1(10, 10, 3);
  for (auto& v : a1.samples()) v = 0.5f;
  const PsnrRmse d = psnr_rmse(a1, b);
  CHECK(d.rmse == doctest::Approx(0.1).epsilon(1e-6));
  CHECK(d.psnr == doctest::Approx(20.0).epsilon(1e-5));

  // Exactly representable values: difference 0.5 on half of the pixels.
  Raster z(8, 8, 1, 0.0f), h(8, 8, 1, 0.0f);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 8; ++x) h(x, y) = 0.5f;
  CHECK(psnr_rmse(z, h).rmse == doctest::Approx(0.5 / std::sqrt(2.0)).epsilon(1e-15));

  double prev = 1e9;
  for (int i = 1; i <= 20; ++i) {
    Raster c(4, 4, 1, 0.0f), e(4, 4, 1, static_cast<float>(i * 0.01));
    const double p = psnr_rmse(c, e).psnr;
    CHECK(p < prev);
    prev = p;
  }
  CHECK_THROWS_AS(psnr_rmse(a, Raster(9, 10, 3)), std::invalid_argument);
  const Mask none = make_mask(10, 10, false);
  CHECK_THROWS_AS(psnr_rmse(a, a, &none), std::invalid_argument);
}

TEST_CASE("ssim properties and naive oracle") {
  const Raster a = textured(40, 32, 1);
  CHECK(ssim(a, a) == 1.0);

  Raster inv = a;
  for (auto& v : inv.samples()) v = 1.0f - v;
  CHECK(ssim(a, inv) < 0);

  const Raster b = add_noise(a, 0.05, 3);
  CHECK(std::abs(ssim(a, b) - oracle::ssim_naive(a, b)) < 1e-6);
  CHECK(std::abs(ssim(a, b) - ssim(b, a)) < 1e-12);
  CHECK_THROWS_AS(ssim(Raster(8, 8, 1), Raster(8, 8, 1)), std::invalid_argument);
}

TEST_CASE("ciede2000 reference pairs") {
  struct Pair {
    Eigen::Vector3d p, q;
    double de;
  };
  const Pair pairs[] = {
      {{50.0, 2.6772, -79.7751}, {50.0, 0.0, -82.7485}, 2.0425},
      {{50.0, 3.1571, -77.2803}, {50.0, 0.0, -82.7485}, 2.8615},
      {{50.0, 2.8361, -74.0200}, {50.0, 0.0, -82.7485}, 3.4412},
      {{50.0, -1.3802, -84.2814}, {50.0, 0.0, -82.7485}, 1.0000},
      {{50.0, 0.0, 0.0}, {50.0, -1.0, 2.0}, 2.3669},
      {{50.0, 2.49, -0.001}, {50.0, -2.49, 0.0009}, 7.1792},
      {{50.0, 2.5, 0.0}, {73.0, 25.0, -18.0}, 27.1492},
      {{50.0, 2.5, 0.0}, {61.0, -5.0, 29.0}, 22.8977},
      {{50.0, 2.5, 0.0}, {56.0, -27.0, -3.0}, 31.9030},
      {{50.0, 2.5, 0.0}, {58.0, 24.0, 15.0}, 19.4535},
      {{60.2574, -34.0099, 36.2677}, {60.4626, -34.1751, 39.4387}, 1.2644},
  };
  for (const auto& c : pairs) {
    CHECK(std::abs(ciede2000(c.p, c.q) - c.de) < 1e-4);
    CHECK(std::abs(oracle::ciede2000_steps(c.p, c.q) - c.de) < 1e-4);
  }
}

TEST_CASE("de00 against the step-by-step oracle") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> l(0, 100), ab(-100, 100);
  for (int i = 0; i < 1000; ++i) {
    const Eigen::Vector3d p(l(rng), ab(rng), ab(rng)), q(l(rng), ab(rng), ab(rng));
    CHECK(std::abs(ciede2000(p, q) - oracle::ciede2000_steps(p, q)) < 1e-4);
    CHECK(std::abs(ciede2000(p, q) - ciede2000(q, p)) < 1e-9);
    CHECK(ciede2000(p, p) == 0.0);
  }
  const double dl = ciede2000({50, 0, 0}, {51, 0, 0});
  CHECK(std::abs(dl - 1.0) < 0.01);

  const Raster lab = raster_to_lab(textured(12, 12, 4));
  CHECK(de00(lab, lab) == 0.0);
}

TEST_CASE("masked metrics ignore pixels outside the mask") {
  const Raster a = textured(32, 32, 5);
  const Raster b = add_noise(a, 0.03, 6);
  Mask m = make_mask(32, 32, false);
  for (int y = 2; y < 28; ++y)
    for (int x = 3; x < 30; ++x) m(x, y) = 1;
  Raster a2 = a, b2 = b;
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x)
      if (!m(x, y))
        for (int c = 0; c < 3; ++c) a2(x, y, c) = 0.9f, b2(x, y, c) = 0.1f;
  const MetricBlock m1 = compute_metrics(a, b, &m), m2 = compute_metrics(a2, b2, &m);
  CHECK(m1.psnr == m2.psnr);
  CHECK(m1.ssim == m2.ssim);
  CHECK(m1.de00 == m2.de00);
  CHECK(m1.valid_pixels == count(m));
}
