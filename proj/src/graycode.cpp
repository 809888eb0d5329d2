#include "procams/graycode.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace procams {

int bits_for(int extent) {
  int bits = 0;
  while ((1 << bits) < extent) ++bits;
  return bits;
}

namespace {

unsigned to_gray(unsigned v) { return v ^ (v >> 1); }

unsigned from_gray(unsigned g) {
  unsigned v = g;
  for (unsigned shift = 1; shift < 32; shift <<= 1) v ^= v >> shift;
  return v;
}

float luma(const Raster& img, int x, int y) {
  if (img.channels() == 1) return img(x, y);
  float s = 0;
  for (int c = 0; c < img.channels(); ++c) s += img(x, y, c);
  return s / img.channels();
}

}  // namespace

std::vector<Raster> graycode_patterns(int w, int h) {
  if (w < 2 || h < 2) throw std::invalid_argument("graycode_patterns needs dimensions >= 2");
  const int bx = bits_for(w), by = bits_for(h);
  std::vector<Raster> out;
  out.reserve(2 * (bx + by) + 2);
  out.emplace_back(w, h, 3, 1.0f);
  out.emplace_back(w, h, 3, 0.0f);
  auto emit = [&](int bits, bool columns) {
    for (int b = bits - 1; b >= 0; --b) {
      Raster p(w, h, 3), inv(w, h, 3);
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          const unsigned coord = columns ? x : y;
          const float v = (to_gray(coord) >> b) & 1u ? 1.0f : 0.0f;
          for (int c = 0; c < 3; ++c) p(x, y, c) = v, inv(x, y, c) = 1.0f - v;
        }
      out.push_back(std::move(p));
      out.push_back(std::move(inv));
    }
  };
  emit(bx, true);
  emit(by, false);
  return out;
}

FlowField graycode_decode(const std::vector<Raster>& captures, const Mask& camera_mask, int pw, int ph,
                          double bit_threshold, DecodeReport* report) {
  const int bx = bits_for(pw), by = bits_for(ph);
  const std::size_t expected = 2 * static_cast<std::size_t>(bx + by) + 2;
  if (captures.size() != expected)
    throw std::invalid_argument("graycode_decode: expected " + std::to_string(expected) + " captures, got " +
                                std::to_string(captures.size()));
  const int w = captures.front().width(), h = captures.front().height();
  for (const auto& c : captures)
    if (c.width() != w || c.height() != h) throw std::invalid_argument("graycode_decode: capture size mismatch");
  if (camera_mask.width() != w || camera_mask.height() != h)
    throw std::invalid_argument("graycode_decode: mask size mismatch");

  FlowField flow(w, h, pw, ph);
  DecodeReport rep;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!camera_mask(x, y)) {
        flow.invalidate(x, y);
        continue;
      }
      bool ok = true;
      auto read_bits = [&](int first, int bits) {
        unsigned g = 0;
        for (int b = 0; b < bits; ++b) {
          const double d = luma(captures[first + 2 * b], x, y) - luma(captures[first + 2 * b + 1], x, y);
          if (std::abs(d) < bit_threshold) ok = false;
          g = (g << 1) | (d > 0 ? 1u : 0u);
        }
        return from_gray(g);
      };
      const unsigned u = read_bits(2, bx);
      const unsigned v = read_bits(2 + 2 * bx, by);
      if (!ok) ++rep.ambiguous;
      if (!ok || u >= static_cast<unsigned>(pw) || v >= static_cast<unsigned>(ph)) {
        flow.invalidate(x, y);
        continue;
      }
      flow.set(x, y, Eigen::Vector2d(static_cast<double>(u) - x, static_cast<double>(v) - y));
      ++rep.decoded;
    }
  if (report) *report = rep;
  return flow;
}

}  // namespace procams
