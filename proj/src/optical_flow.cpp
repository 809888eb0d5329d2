#include "procams/optical_flow.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <vector>

#include "procams/color.hpp"
#include "procams/parallel.hpp"
#include "procams/resample.hpp"

namespace procams {

namespace {

using Field = BasicRaster<double>;


// Separable Gaussian-weighted window sums, edge-truncated. The kernel's spectrum is positive,
// which keeps the per-pixel update contractive.
Field gaussian_sum(const Field& in, double sigma) {
  const int r = std::max(1, static_cast<int>(std::ceil(3 * sigma)));
  std::vector<double> k(2 * r + 1);
  for (int i = -r; i <= r; ++i) k[i + r] = std::exp(-0.5 * i * i / (sigma * sigma));
  const int w = in.width(), h = in.height(), ch = in.channels();
  Field tmp(w, h, ch), out(w, h, ch);
  parallel_for(h, [&](int y) {
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < ch; ++c) {
        double acc = 0;
        for (int i = std::max(-r, -x); i <= std::min(r, w - 1 - x); ++i) acc += k[i + r] * in(x + i, y, c);
        tmp(x, y, c) = acc;
      }
  });
  parallel_for(h, [&](int y) {
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < ch; ++c) {
        double acc = 0;
        for (int i = std::max(-r, -y); i <= std::min(r, h - 1 - y); ++i) acc += k[i + r] * tmp(x, y + i, c);
        out(x, y, c) = acc;
      }
  });
  return out;
}

std::vector<Raster> pyramid(const Raster& luma, int levels) {
  std::vector<Raster> p{luma};
  for (int l = 1; l < levels; ++l) {
    if (p.back().width() < 64 || p.back().height() < 64) break;
    p.push_back(downsample2(blur5(p.back())));
  }
  return p;
}

// Resample a flow onto a new target frame, scaling vectors by `scale`.
BasicRaster<double> rescale_flow(const BasicRaster<double>& flow, int w, int h, double scale) {
  BasicRaster<double> out(w, h, 2);
  const double sx = static_cast<double>(flow.width()) / w;
  const double sy = static_cast<double>(flow.height()) / h;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 2; ++c)
        out(x, y, c) = scale * sample_bilinear(flow, (x + 0.5) * sx - 0.5, (y + 0.5) * sy - 0.5, c);
  return out;
}

}  // namespace

FlowEstimate estimate_flow(const Raster& captured, const Raster& reference, const FlowOptions& opt,
                           const FlowField* initial, const Mask* captured_mask) {
  if (captured_mask && !captured_mask->same_frame(captured))
    throw std::invalid_argument("estimate_flow: capture mask frame mismatch");
  if (initial && (initial->width() != reference.width() || initial->height() != reference.height() ||
                  initial->source_width() != captured.width() || initial->source_height() != captured.height()))
    throw std::invalid_argument("estimate_flow: initial flow frame mismatch");
  const Raster cap_luma = to_luma(captured);
  const Raster ref_luma = to_luma(reference);

  const int levels = std::max(1, opt.levels);
  const auto ref_pyr = pyramid(ref_luma, levels);
  const auto cap_pyr = pyramid(cap_luma, static_cast<int>(ref_pyr.size()));
  const int top = static_cast<int>(std::min(ref_pyr.size(), cap_pyr.size())) - 1;
  // Mask pyramid built like the image pyramid; a coarse pixel stays valid only if nothing masked
  // leaked into it.
  std::vector<Raster> mask_pyr;
  if (captured_mask) {
    mask_pyr.push_back(mask_to_raster(*captured_mask));
    for (int l = 1; l <= top; ++l) {
      Raster m = downsample2(blur5(mask_pyr.back()));
      for (auto& v : m.samples()) v = v > 0.999f ? 1.0f : 0.0f;
      mask_pyr.push_back(std::move(m));
    }
  }

  // Degenerate reference: no gradient anywhere.
  double grad_energy = 0;
  for (int y = 0; y < ref_luma.height(); ++y)
    for (int x = 0; x + 1 < ref_luma.width(); ++x) grad_energy += std::abs(ref_luma(x + 1, y) - ref_luma(x, y));
  for (int y = 0; y + 1 < ref_luma.height(); ++y)
    for (int x = 0; x < ref_luma.width(); ++x) grad_energy += std::abs(ref_luma(x, y + 1) - ref_luma(x, y));

  FlowEstimate result{FlowField(reference.width(), reference.height(), captured.width(), captured.height()), false};
  if (grad_energy < 1e-9) {
    for (int y = 0; y < reference.height(); ++y)
      for (int x = 0; x < reference.width(); ++x) result.flow.invalidate(x, y);
    result.degenerate = true;
    return result;
  }

  BasicRaster<double> init_full(reference.width(), reference.height(), 2, 0.0);
  if (initial)
    for (int y = 0; y < reference.height(); ++y)
      for (int x = 0; x < reference.width(); ++x)
        if (initial->valid(x, y)) init_full(x, y, 0) = initial->at(x, y).x(), init_full(x, y, 1) = initial->at(x, y).y();

  const Raster& top_ref = ref_pyr[top];
  BasicRaster<double> flow = rescale_flow(init_full, top_ref.width(), top_ref.height(), std::ldexp(1.0, -top));

  for (int level = top; level >= 0; --level) {
    const Raster& ref = ref_pyr[level];
    const Raster& cap = cap_pyr[level];
    const Raster* valid = captured_mask ? &mask_pyr[level] : nullptr;
    const int w = ref.width(), h = ref.height();
    if (flow.width() != w || flow.height() != h) flow = rescale_flow(flow, w, h, 2.0);
    const double area = 2 * std::numbers::pi * std::pow(std::max(1.0, opt.window_radius / 2.0), 2);

    // Capture gradients, sampled at the warped positions: the Jacobian of the residual.
    Raster grad(cap.width(), cap.height(), 2);
    for (int y = 0; y < cap.height(); ++y)
      for (int x = 0; x < cap.width(); ++x) {
        const int xl = std::max(0, x - 1), xr = std::min(cap.width() - 1, x + 1);
        const int yu = std::max(0, y - 1), yd = std::min(cap.height() - 1, y + 1);
        grad(x, y, 0) = (cap(xr, y) - cap(xl, y)) / static_cast<float>(std::max(1, xr - xl));
        grad(x, y, 1) = (cap(x, yd) - cap(x, yu)) / static_cast<float>(std::max(1, yd - yu));
      }

    for (int it = 0; it < opt.iters_per_level; ++it) {
      // Warp the capture by the current flow and form the normal equations of the increment.
      Field structure(w, h, 3), mismatch(w, h, 2);
      parallel_for(h, [&](int y) {
        for (int x = 0; x < w; ++x) {
          const double sx = x + flow(x, y, 0), sy = y + flow(x, y, 1);
          if (sx < 0 || sy < 0 || sx > cap.width() - 1 || sy > cap.height() - 1) continue;
          if (valid) {
            const int x0 = static_cast<int>(sx), y0 = static_cast<int>(sy);
            if (!valid->clamped(x0, y0) || !valid->clamped(x0 + 1, y0) || !valid->clamped(x0, y0 + 1) ||
                !valid->clamped(x0 + 1, y0 + 1))
              continue;
          }
          const double gx = sample_bilinear(grad, sx, sy, 0), gy = sample_bilinear(grad, sx, sy, 1);
          const double gt = sample_bilinear(cap, sx, sy, 0) - ref(x, y);
          structure(x, y, 0) = gx * gx;
          structure(x, y, 1) = gx * gy;
          structure(x, y, 2) = gy * gy;
          mismatch(x, y, 0) = gx * gt;
          mismatch(x, y, 1) = gy * gt;
        }
      });
      const double sigma = std::max(1.0, opt.window_radius / 2.0);
      const Field sums = gaussian_sum(structure, sigma);
      const Field rhs = gaussian_sum(mismatch, sigma);
      const double lambda = opt.regularization * area;
      parallel_for(h, [&](int y) {
        for (int x = 0; x < w; ++x) {
          Eigen::Matrix2d a;
          a << sums(x, y, 0) + lambda, sums(x, y, 1), sums(x, y, 1), sums(x, y, 2) + lambda;
          const Eigen::Vector2d b(rhs(x, y, 0), rhs(x, y, 1));
          Eigen::Vector2d delta = -a.ldlt().solve(b);
          if (!delta.allFinite()) continue;
          const double n = delta.norm();
          if (n > 1.0) delta /= n;  // at most one pixel per step at this level
          flow(x, y, 0) += delta.x();
          flow(x, y, 1) += delta.y();
        }
      });
    }
  }

  const double bound = opt.max_update;
  for (int y = 0; y < reference.height(); ++y)
    for (int x = 0; x < reference.width(); ++x) {
      const Eigen::Vector2d d(flow(x, y, 0), flow(x, y, 1));
      const Eigen::Vector2d s = Eigen::Vector2d(x, y) + d;
      const Eigen::Vector2d change = d - Eigen::Vector2d(init_full(x, y, 0), init_full(x, y, 1));
      if (!d.allFinite() || change.norm() > bound || s.x() < -0.5 || s.y() < -0.5 ||
          s.x() > captured.width() - 0.5 || s.y() > captured.height() - 0.5) {
        result.flow.invalidate(x, y);
        continue;
      }
      result.flow.set(x, y, d);
    }
  return result;
}

}  // namespace procams
