#include <doctest.h>

#include <filesystem>
#include <random>

#include "oracles.hpp"
#include "procams/color.hpp"
#include "procams/image_io.hpp"
#include "procams/raster.hpp"
#include "procams/resample.hpp"

using namespace procams;
namespace fs = std::filesystem;

TEST_CASE("raster shape and normalisation") {
  Raster r(4, 3, 3, 0.5f);
  CHECK(r.size() == 36);
  CHECK(r.is_normalized());
  r(1, 2, 0) = 1.5f;
  CHECK_FALSE(r.is_normalized());
  CHECK_THROWS_AS(require_normalized(r, "r"), std::invalid_argument);
  CHECK(clamp01(r)(1, 2, 0) == 1.0f);
  CHECK_THROWS_AS(Raster(0, 3, 1), std::invalid_argument);
  CHECK_THROWS_AS(Raster(3, 3, 5), std::invalid_argument);
}

TEST_CASE("srgb transfer fixed points and mid value") {
  CHECK(srgb_to_linear(0.0) == 0.0);
  CHECK(srgb_to_linear(1.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(srgb_to_linear(0.5) - 0.2140) < 1e-4);
  CHECK(std::abs(srgb_to_linear(0.5) - oracle::srgb_eotf(0.5)) < 1e-12);
  CHECK(linear_to_srgb(0.0) == 0.0);
  CHECK(std::abs(linear_to_srgb(srgb_to_linear(0.73)) - 0.73) < 1e-6);
  CHECK(std::abs(linear_to_srgb(0.2140) - 0.5) < 1e-4);
  CHECK_THROWS_AS(srgb_to_linear(-0.01), std::domain_error);
  CHECK_THROWS_AS(linear_to_srgb(1.01), std::domain_error);
}

TEST_CASE("srgb roundtrip and monotonicity over uniform samples") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(rng);
    CHECK(std::abs(linear_to_srgb(srgb_to_linear(v)) - v) < 1e-6);
    CHECK(std::abs(srgb_to_linear(v) - oracle::srgb_eotf(v)) < 1e-12);
  }
  double prev = -1;
  for (int i = 0; i <= 1000; ++i) {
    const double v = srgb_to_linear(i / 1000.0);
    CHECK(v > prev);
    prev = v;
  }
}

TEST_CASE("lab conversion") {
  const Eigen::Vector3d white = rgb_to_lab(Eigen::Vector3d(1, 1, 1));
  CHECK(std::abs(white[0] - 100) < 0.05);
  CHECK(std::abs(white[1]) < 0.05);
  CHECK(std::abs(white[2]) < 0.05);
  const Eigen::Vector3d black = rgb_to_lab(Eigen::Vector3d(0, 0, 0));
  CHECK(black.norm() < 1e-9);
  const Eigen::Vector3d gray = rgb_to_lab(Eigen::Vector3d(0.5, 0.5, 0.5));
  CHECK(std::abs(gray[0] - 76.0) < 0.5);
  CHECK(std::abs(gray[0] - oracle::lab_from_linear(0.5, 0.5, 0.5)[0]) < 0.01);

  const ColorTriple t = rgb_to_lab(ColorTriple::linear(0.2, 0.2, 0.2));
  CHECK(t.space == ColorSpace::Lab);

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 200; ++i) {
    const double g = u(rng);
    const Eigen::Vector3d e = rgb_to_lab(Eigen::Vector3d(g, g, g));
    CHECK(std::abs(e[1]) < 0.05);
    CHECK(std::abs(e[2]) < 0.05);
    const Eigen::Vector3d rgb(u(rng), u(rng), u(rng));
    CHECK((rgb_to_lab(rgb) - oracle::lab_from_linear(rgb[0], rgb[1], rgb[2])).norm() < 0.02);
  }
}

TEST_CASE("bilinear resampling") {
  Raster c(7, 5, 3, 0.3f);
  const Raster r = resample_bilinear(c, 13, 4);
  for (float v : r.samples()) CHECK(v == doctest::Approx(0.3f));

  Raster checker(2, 2, 1);
  checker(0, 0) = 0, checker(1, 0) = 1, checker(0, 1) = 1, checker(1, 1) = 0;
  const Raster up = resample_bilinear(checker, 3, 3);
  CHECK(up(1, 1) == doctest::Approx(0.5f));
  // Pixel (0,0) of a 3-wide output maps to source x = 0.5*2/3 - 0.5 = -1/6, clamped to 0.
  CHECK(up(0, 0) == doctest::Approx(0.0f));

  std::mt19937_64 rng(9);
  std::uniform_real_distribution<float> u(0.2f, 0.7f);
  Raster img(17, 11, 3);
  for (auto& v : img.samples()) v = u(rng);
  CHECK(resample_bilinear(img, 17, 11) == img);
  const Raster big = resample_bilinear(img, 40, 23);
  const auto [lo, hi] = std::minmax_element(img.samples().begin(), img.samples().end());
  for (float v : big.samples()) CHECK((v >= *lo && v <= *hi));
}

TEST_CASE("bilinear sample matches hand weights") {
  Raster img(3, 2, 1);
  for (int y = 0; y < 2; ++y)
    for (int x = 0; x < 3; ++x) img(x, y) = static_cast<float>(x + 10 * y);
  // (0.25, 0.5): 0.5 * (0.75*0 + 0.25*1) + 0.5 * (0.75*10 + 0.25*11) = 5.25
  CHECK(sample_bilinear(img, 0.25, 0.5, 0) == doctest::Approx(5.25));
  CHECK(sample_bilinear(img, 2.0, 1.0, 0) == doctest::Approx(12.0));
}

TEST_CASE("png and pfm round trips") {
  const fs::path dir = fs::temp_directory_path() / "procams_test_io";
  fs::create_directories(dir);
  Raster img(9, 6, 3);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<float> u(-0.5f, 2.0f);
  for (auto& v : img.samples()) v = u(rng);

  write_pfm(dir / "a.pfm", img);
  CHECK(read_pfm(dir / "a.pfm") == img);

  const Raster q = quantize8(clamp01(img));
  write_png(dir / "a.png", q);
  CHECK(read_png(dir / "a.png") == q);
  write_png(dir / "lin.png", q, Transfer::Identity);
  const Raster back = read_png(dir / "lin.png", Transfer::Identity);
  for (std::size_t i = 0; i < q.size(); ++i) CHECK(std::abs(back.samples()[i] - q.samples()[i]) <= 0.5f / 255 + 1e-6f);

  for (int code = 0; code < 256; ++code) CHECK(encode8(decode8(static_cast<std::uint8_t>(code))) == code);
  CHECK_THROWS_AS(read_png(dir / "missing.png"), IoError);
  CHECK_THROWS_AS(read_pfm(dir / "missing.pfm"), IoError);
  fs::remove_all(dir);
}
