#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "procams/dataset.hpp"
#include "procams/flow.hpp"
#include "procams/graycode.hpp"
#include "procams/optical_flow.hpp"
#include "procams/pipeline.hpp"
#include "procams/region.hpp"
#include "procams/sim.hpp"

using namespace procams;

namespace {

Raster ramp(int w, int h) {
  Raster img(w, h, 1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) img(x, y) = static_cast<float>(x) / w;
  return img;
}

Raster smooth(int w, int h, double phase = 0) {
  Raster img(w, h, 3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c)
        img(x, y, c) = static_cast<float>(0.5 + 0.3 * std::sin(0.11 * x + phase + c) * std::cos(0.07 * y - c));
  return img;
}

FlowField constant_flow(int w, int h, Eigen::Vector2d d) {
  FlowField f(w, h, w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) f.set(x, y, d);
  return f;
}

// Integer shift: out(p) = img(p - s), edge clamped.
Raster shifted(const Raster& img, int sx, int sy) {
  Raster out(img.width(), img.height(), img.channels());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      for (int c = 0; c < img.channels(); ++c) out(x, y, c) = img.clamped(x - sx, y - sy, c);
  return out;
}

Eigen::Vector2d apply_h(const Eigen::Matrix3d& h, const Eigen::Vector2d& p) {
  const Eigen::Vector3d r = h * p.homogeneous();
  return r.hnormalized();
}

}  // namespace

TEST_CASE("warp by zero and constant flow") {
  const Raster img = smooth(20, 14);
  const Warped same = warp(img, FlowField::zero(20, 14));
  CHECK(same.image == img);
  CHECK(count(same.mask) == 20 * 14);

  const Raster r = ramp(40, 8);
  const Warped w = warp(r, constant_flow(40, 8, {-5, 0}));
  for (int y = 0; y < 8; ++y)
    for (int x = 5; x < 40; ++x) CHECK(std::abs(w.image(x, y) - r(x - 5, y)) < 1e-6);
  CHECK_FALSE(w.mask(2, 3));
  CHECK(w.image(2, 3) == 0.0f);

  FlowField bad(10, 10, 12, 12);
  CHECK_THROWS_AS(warp(img, bad), std::invalid_argument);
}

TEST_CASE("warp is linear in the image") {
  const Raster a = smooth(32, 32, 0.3), b = smooth(32, 32, 1.7);
  FlowField f(32, 32, 32, 32);
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x) f.set(x, y, {0.7 * std::sin(0.2 * y), -0.4 + 0.3 * std::cos(0.1 * x)});
  Raster mix(32, 32, 3);
  for (std::size_t i = 0; i < mix.size(); ++i) mix.samples()[i] = 0.3f * a.samples()[i] + 0.6f * b.samples()[i];
  const Raster wm = warp(mix, f).image, wa = warp(a, f).image, wb = warp(b, f).image;
  for (std::size_t i = 0; i < wm.size(); ++i)
    CHECK(std::abs(wm.samples()[i] - (0.3f * wa.samples()[i] + 0.6f * wb.samples()[i])) < 1e-6);
}

TEST_CASE("warp then inverse warp") {
  const int n = 96;
  const Raster img = smooth(n, n);
  FlowField f(n, n, n, n);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) f.set(x, y, {1.5 * std::sin(0.05 * y), 1.0 * std::cos(0.04 * x)});
  const FlowField inv = invert_flow(f);
  const Warped once = warp(img, f);
  const Warped back = warp(once.image, inv);
  double sum = 0;
  int k = 0;
  for (int y = 4; y < n - 4; ++y)
    for (int x = 4; x < n - 4; ++x)
      if (back.mask(x, y))
        for (int c = 0; c < 3; ++c) sum += std::abs(back.image(x, y, c) - img(x, y, c)), ++k;
  CHECK(k > 3 * 80 * 80);
  CHECK(sum / k < 5e-3);
}

TEST_CASE("graycode pattern counts") {
  CHECK(graycode_patterns(256, 256).size() == 34);
  CHECK(graycode_patterns(2, 2).size() == 6);
  CHECK(graycode_patterns(100, 37).size() == 2 * (7 + 6) + 2);
  const auto p = graycode_patterns(64, 16);
  const Raster& msb = p[2];
  double left = 0, right = 0;
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 64; ++x) (x < 32 ? left : right) += msb(x, y, 0);
  CHECK(((left == 0 && right == 32 * 16) || (right == 0 && left == 32 * 16)));
  for (std::size_t i = 0; i < p[2].size(); ++i) CHECK(p[2].samples()[i] + p[3].samples()[i] == 1.0f);
}

TEST_CASE("graycode decode") {
  SUBCASE("identity") {
    const SetupConfig st = SetupConfig::identity(64, 48);
    std::vector<Raster> caps;
    for (const auto& pat : graycode_patterns(64, 48)) caps.push_back(render_capture(pat, st, false));
    const FlowField f = graycode_decode(caps, make_mask(64, 48, true), 64, 48);
    for (int y = 0; y < 48; ++y)
      for (int x = 0; x < 64; ++x) {
        REQUIRE(f.valid(x, y));
        CHECK(f.at(x, y).norm() == 0.0);
      }
  }
  SUBCASE("translation, exact and noisy") {
    SetupConfig st = SetupConfig::identity(64, 64);
    st.camera_size = {80, 72};
    st.reflectance = Raster(80, 72, 3, 0.8f);
    st.geometry = GeometryWarp::translation(7, 3);
    const FovMasks fov = render_fov_masks(st);
    std::vector<Raster> caps;
    for (const auto& pat : graycode_patterns(64, 64)) caps.push_back(render_capture(pat, st, false));
    const FlowField f = graycode_decode(caps, fov.camera, 64, 64);
    const FlowField truth = true_flow(st);
    const EndPointError e = end_point_error(f, truth, &fov.camera);
    CHECK(e.count == count(fov.camera));
    CHECK(e.max == 0.0);

    st.noise_sigma = 0.01;
    std::vector<Raster> noisy;
    std::uint64_t key = 1;
    for (const auto& pat : graycode_patterns(64, 64)) noisy.push_back(render_capture(pat, st, true, key++));
    DecodeReport rep;
    const FlowField fn = graycode_decode(noisy, fov.camera, 64, 64, kGrayBitThreshold, &rep);
    const EndPointError en = end_point_error(fn, truth, &fov.camera);
    CHECK(en.mean < 0.5);
    CHECK(1.0 - static_cast<double>(en.count) / count(fov.camera) < 0.05);
  }
  CHECK_THROWS_AS(graycode_decode({Raster(4, 4, 3)}, make_mask(4, 4, true), 4, 4), std::invalid_argument);
}

TEST_CASE("flow estimation") {
  const Raster tex = calibration_texture({160, 160}, 3);
  const FlowEstimate same = estimate_flow(tex, tex);
  CHECK_FALSE(same.degenerate);
  double worst = 0;
  for (int y = 0; y < 160; ++y)
    for (int x = 0; x < 160; ++x) worst = std::max(worst, same.flow.at(x, y).norm());
  CHECK(worst < 1e-6);

  // captured(p) = reference(p - (3, 0)), so reference(p) = captured(p + (3, 0)).
  const Raster cap = shifted(tex, 3, 0);
  const FlowEstimate est = estimate_flow(cap, tex);
  const FlowField truth = constant_flow(160, 160, {3, 0});
  Mask interior = make_mask(160, 160, false);
  for (int y = 12; y < 148; ++y)
    for (int x = 12; x < 148; ++x) interior(x, y) = 1;
  CHECK(end_point_error(est.flow, truth, &interior).mean < 0.25);

  const FlowEstimate flat = estimate_flow(Raster(32, 32, 3, 0.4f), Raster(32, 32, 3, 0.4f));
  CHECK(flat.degenerate);
  CHECK(flat.flow.valid_fraction() == 0.0);
}

TEST_CASE("crop to bounding box") {
  Raster img(100, 100, 3, 0.7f);
  const Cropped full = crop_to_bbox(img, make_mask(100, 100, true));
  CHECK(full.image == img);
  CHECK(full.offset == Eigen::Vector2i(0, 0));

  Mask block = make_mask(100, 100, false);
  for (int y = 45; y < 55; ++y)
    for (int x = 45; x < 55; ++x) block(x, y) = 1;
  const Cropped c = crop_to_bbox(img, block);
  CHECK(c.image.width() == 10);
  CHECK(c.image.height() == 10);
  CHECK(c.offset == Eigen::Vector2i(45, 45));

  Mask dot = make_mask(100, 100, false);
  dot(12, 80) = 1;
  const Cropped d = crop_to_bbox(img, dot);
  CHECK(d.image.width() == 1);
  CHECK(d.image.height() == 1);
  CHECK(d.offset == Eigen::Vector2i(12, 80));

  Mask ring = make_mask(10, 10, false);
  ring(2, 2) = ring(7, 7) = 1;
  const Cropped r = crop_to_bbox(Raster(10, 10, 1, 1.0f), ring);
  CHECK(r.image(0, 0) == 1.0f);
  CHECK(r.image(1, 1) == 0.0f);
  CHECK_THROWS_AS(crop_to_bbox(img, make_mask(100, 100, false)), std::invalid_argument);
}

TEST_CASE("largest inscribed rectangle") {
  CHECK(max_inscribed_rect(make_mask(64, 64, true)) == PixelRect{0, 0, 64, 64});

  Mask two = make_mask(40, 30, false);
  for (int y = 2; y < 10; ++y)
    for (int x = 3; x < 11; ++x) two(x, y) = 1;
  for (int y = 20; y < 26; ++y)
    for (int x = 25; x < 31; ++x) two(x, y) = 1;
  CHECK(max_inscribed_rect(two) == PixelRect{3, 2, 8, 8});
  CHECK_THROWS_AS(max_inscribed_rect(make_mask(5, 5, false)), std::invalid_argument);

  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> dim(1, 32);
  for (int i = 0; i < 120; ++i) {
    const Mask m = oracle::random_mask(rng, dim(rng), dim(rng));
    const PixelRect got = max_inscribed_rect(m);
    const oracle::Rect want = oracle::brute_force_rect(m);
    CHECK(got == PixelRect{want.x, want.y, want.w, want.h});
    for (int y = got.y; y < got.y + got.h; ++y)
      for (int x = got.x; x < got.x + got.w; ++x) REQUIRE(m(x, y));
  }
}

TEST_CASE("optimal affine fit") {
  CHECK(fit_optimal_affine({0, 0, 64, 48}, {64, 48}).is_identity());

  const AffineMap half = fit_optimal_affine({0, 0, 32, 64}, {64, 64}, true);
  CHECK(half.matrix()(0, 0) == doctest::Approx(0.5));
  CHECK(half.matrix()(1, 1) == doctest::Approx(0.5));
  CHECK(half.matrix()(0, 2) == doctest::Approx(0.0));
  CHECK(half.matrix()(1, 2) == doctest::Approx(16.0));

  const PixelRect rect{10, 7, 50, 31};
  for (bool keep : {true, false}) {
    const AffineMap m = fit_optimal_affine(rect, {64, 48}, keep);
    for (const Eigen::Vector2d corner : {Eigen::Vector2d(0, 0), Eigen::Vector2d(64, 0), Eigen::Vector2d(0, 48),
                                         Eigen::Vector2d(64, 48)}) {
      const Eigen::Vector2d p = m.apply(corner);
      CHECK(p.x() >= rect.x - 1e-9);
      CHECK(p.y() >= rect.y - 1e-9);
      CHECK(p.x() <= rect.x + rect.w + 1e-9);
      CHECK(p.y() <= rect.y + rect.h + 1e-9);
    }
  }
  const AffineMap stretch = fit_optimal_affine(rect, {64, 48}, false);
  CHECK(stretch.apply({64, 48}).isApprox(Eigen::Vector2d(60, 38)));
}

TEST_CASE("flow inversion") {
  const FlowField zi = invert_flow(FlowField::zero(24, 24));
  for (int y = 0; y < 24; ++y)
    for (int x = 0; x < 24; ++x) {
      REQUIRE(zi.valid(x, y));
      CHECK(zi.at(x, y).norm() < 1e-9);
    }

  const FlowField ti = invert_flow(constant_flow(40, 30, {-5, 0}));
  for (int y = 0; y < 30; ++y)
    for (int x = 0; x < 35; ++x) {
      REQUIRE(ti.valid(x, y));
      CHECK((ti.at(x, y) - Eigen::Vector2d(5, 0)).norm() < 1e-9);
    }

  const int n = 80;
  Eigen::Matrix3d h;
  h << 0.92, 0.03, 3.0, -0.02, 0.95, 2.0, 1e-4, -2e-4, 1.0;
  FlowField f(n, n, n, n);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) f.set(x, y, apply_h(h, {double(x), double(y)}) - Eigen::Vector2d(x, y));
  InversionReport rep;
  const FlowField inv = invert_flow(f, 2.5, &rep);
  const Eigen::Matrix3d hi = h.inverse();
  double worst = 0;
  int checked = 0;
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      const Eigen::Vector2d q = apply_h(hi, {double(x), double(y)});
      if (q.x() < 2 || q.y() < 2 || q.x() > n - 3 || q.y() > n - 3) continue;
      REQUIRE(inv.valid(x, y));
      worst = std::max(worst, (inv.source(x, y) - q).norm());
      ++checked;
    }
  CHECK(checked > 4000);
  CHECK(worst < 1e-2);
  CHECK(rep.mean_composition_error < 1e-2);
}

TEST_CASE("nearest fill of invalid vectors") {
  FlowField f = constant_flow(6, 1, {1, 2});
  f.invalidate(0, 0);
  f.invalidate(1, 0);
  f.set(5, 0, {3, 3});
  const FlowField g = fill_invalid_nearest(f);
  CHECK(g.valid(0, 0));
  CHECK(g.at(0, 0) == Eigen::Vector2d(1, 2));
  CHECK(g.at(5, 0) == Eigen::Vector2d(3, 3));
}
