#include "procams/flow.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <deque>
#include <string>

#include "procams/parallel.hpp"
#include "procams/resample.hpp"

namespace procams {

Mask make_mask(int width, int height, bool value) {
  return Mask(width, height, 1, value ? 1 : 0);
}

Mask mask_from_raster(const Raster& r) {
  Mask m(r.width(), r.height(), 1);
  for (int y = 0; y < r.height(); ++y)
    for (int x = 0; x < r.width(); ++x) m(x, y) = r(x, y, 0) > 0.5f;
  return m;
}

Raster mask_to_raster(const Mask& m) {
  Raster r(m.width(), m.height(), 1);
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x) r(x, y) = m(x, y) ? 1.0f : 0.0f;
  return r;
}

std::size_t count(const Mask& m) {
  std::size_t n = 0;
  for (auto v : m.samples()) n += v != 0;
  return n;
}

FlowField::FlowField(int width, int height, int source_width, int source_height)
    : vectors_(width, height, 2, 0.0f),
      valid_(width, height, 1, 1),
      source_width_(source_width),
      source_height_(source_height) {
  if (source_width < 1 || source_height < 1) throw std::invalid_argument("flow source frame must be >= 1");
}

double FlowField::valid_fraction() const {
  return static_cast<double>(count(valid_)) / static_cast<double>(valid_.pixel_count());
}

double FlowField::max_magnitude() const {
  double m = 0;
  for (int y = 0; y < height(); ++y)
    for (int x = 0; x < width(); ++x)
      if (valid(x, y)) m = std::max(m, at(x, y).norm());
  return m;
}

void FlowField::set_validity(const Mask& m) {
  if (!m.same_frame(valid_)) throw std::invalid_argument("validity mask frame mismatch");
  valid_ = m;
}

Warped warp(const Raster& img, const FlowField& flow) {
  if (img.width() != flow.source_width() || img.height() != flow.source_height())
    throw std::invalid_argument("warp: image is " + std::to_string(img.width()) + "x" +
                                std::to_string(img.height()) + " but flow expects source " +
                                std::to_string(flow.source_width()) + "x" + std::to_string(flow.source_height()));
  Warped out{Raster(flow.width(), flow.height(), img.channels()), make_mask(flow.width(), flow.height(), false)};
  const double max_x = img.width() - 0.5;
  const double max_y = img.height() - 0.5;
  parallel_for(flow.height(), [&](int y) {
    for (int x = 0; x < flow.width(); ++x) {
      if (!flow.valid(x, y)) continue;
      const Eigen::Vector2d s = flow.source(x, y);
      if (!(s.x() >= -0.5 && s.x() <= max_x && s.y() >= -0.5 && s.y() <= max_y)) continue;
      for (int c = 0; c < img.channels(); ++c)
        out.image(x, y, c) = static_cast<float>(sample_bilinear(img, s.x(), s.y(), c));
      out.mask(x, y) = 1;
    }
  });
  return out;
}

namespace {

// Bilinear flow lookup that requires all four neighbours to be valid.
bool sample_flow(const FlowField& f, double x, double y, Eigen::Vector2d& out) {
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  if (x0 < 0 || y0 < 0 || x0 + 1 >= f.width() || y0 + 1 >= f.height()) {
    const int xi = static_cast<int>(std::lround(x));
    const int yi = static_cast<int>(std::lround(y));
    if (xi < 0 || yi < 0 || xi >= f.width() || yi >= f.height() || !f.valid(xi, yi)) return false;
    out = f.at(xi, yi);
    return true;
  }
  if (!f.valid(x0, y0) || !f.valid(x0 + 1, y0) || !f.valid(x0, y0 + 1) || !f.valid(x0 + 1, y0 + 1))
    return false;
  const double ax = x - x0, ay = y - y0;
  out = (1 - ay) * ((1 - ax) * f.at(x0, y0) + ax * f.at(x0 + 1, y0)) +
        ay * ((1 - ax) * f.at(x0, y0 + 1) + ax * f.at(x0 + 1, y0 + 1));
  return true;
}

}  // namespace

FlowField invert_flow(const FlowField& flow, double radius, InversionReport* report) {
  const int out_w = flow.source_width();
  const int out_h = flow.source_height();
  FlowField inv(out_w, out_h, flow.width(), flow.height());

  // Bucket forward-mapped sample locations by the output pixel they land nearest to.
  std::vector<std::vector<int>> buckets(static_cast<std::size_t>(out_w) * out_h);
  std::vector<Eigen::Vector2d> targets(flow.vectors().pixel_count());
  for (int y = 0; y < flow.height(); ++y)
    for (int x = 0; x < flow.width(); ++x) {
      if (!flow.valid(x, y)) continue;
      const Eigen::Vector2d t = flow.source(x, y);
      const int bx = static_cast<int>(std::lround(t.x()));
      const int by = static_cast<int>(std::lround(t.y()));
      if (bx < 0 || by < 0 || bx >= out_w || by >= out_h) continue;
      const int idx = y * flow.width() + x;
      targets[idx] = t;
      buckets[static_cast<std::size_t>(by) * out_w + bx].push_back(idx);
    }

  std::vector<double> comp_err(static_cast<std::size_t>(out_w) * out_h, -1.0);
  parallel_for(out_h, [&](int qy) {
    std::vector<int> gathered;
    for (int qx = 0; qx < out_w; ++qx) {
      const Eigen::Vector2d q(qx, qy);
      bool solved = false;
      for (double r = radius; r <= 2.0 * radius + 1e-9 && !solved; r += 0.5 * radius) {
        gathered.clear();
        const int reach = static_cast<int>(std::ceil(r));
        for (int by = qy - reach; by <= qy + reach; ++by)
          for (int bx = qx - reach; bx <= qx + reach; ++bx) {
            if (bx < 0 || by < 0 || bx >= out_w || by >= out_h) continue;
            for (int idx : buckets[static_cast<std::size_t>(by) * out_w + bx])
              if ((targets[idx] - q).norm() <= r) gathered.push_back(idx);
          }
        if (gathered.size() < 6) continue;

        // Fit t = B c + e around the sample centroid.
        Eigen::Vector2d c_mean = Eigen::Vector2d::Zero(), t_mean = Eigen::Vector2d::Zero();
        for (int idx : gathered) {
          c_mean += Eigen::Vector2d(idx % flow.width(), idx / flow.width());
          t_mean += targets[idx];
        }
        c_mean /= static_cast<double>(gathered.size());
        t_mean /= static_cast<double>(gathered.size());
        Eigen::Matrix2d cc = Eigen::Matrix2d::Zero(), tc = Eigen::Matrix2d::Zero();
        for (int idx : gathered) {
          const Eigen::Vector2d dc = Eigen::Vector2d(idx % flow.width(), idx / flow.width()) - c_mean;
          const Eigen::Vector2d dt = targets[idx] - t_mean;
          cc += dc * dc.transpose();
          tc += dt * dc.transpose();
        }
        if (cc.determinant() < 1e-9) continue;
        const Eigen::Matrix2d jac = tc * cc.inverse();
        if (jac.determinant() <= 1e-6) continue;
        const Eigen::Vector2d c_star = c_mean + jac.inverse() * (q - t_mean);
        if ((c_star - c_mean).norm() > 2.0 * r / std::sqrt(std::abs(jac.determinant())) + 2.0) continue;
        if (c_star.x() < -0.5 || c_star.y() < -0.5 || c_star.x() > flow.width() - 0.5 ||
            c_star.y() > flow.height() - 0.5)
          continue;
        inv.set(qx, qy, c_star - q);
        Eigen::Vector2d fwd;
        if (sample_flow(flow, c_star.x(), c_star.y(), fwd))
          comp_err[static_cast<std::size_t>(qy) * out_w + qx] = (c_star + fwd - q).norm();
        solved = true;
      }
      if (!solved) inv.invalidate(qx, qy);
    }
  });

  if (report) {
    double sum = 0;
    std::size_t n = 0;
    for (double e : comp_err)
      if (e >= 0) sum += e, ++n;
    report->mean_composition_error = n ? sum / static_cast<double>(n) : 0.0;
    report->valid_fraction = inv.valid_fraction();
  }
  return inv;
}

FlowField fill_invalid_nearest(const FlowField& flow, const Mask* restrict_to) {
  FlowField out = flow;
  const int w = flow.width(), h = flow.height();
  std::vector<int> origin(static_cast<std::size_t>(w) * h, -1);
  std::deque<int> queue;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (flow.valid(x, y)) {
        origin[y * w + x] = y * w + x;
        queue.push_back(y * w + x);
      }
  if (queue.empty()) return out;
  while (!queue.empty()) {
    const int idx = queue.front();
    queue.pop_front();
    const int x = idx % w, y = idx / w;
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        const int nx = x + dx, ny = y + dy;
        if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
        const int n = ny * w + nx;
        if (origin[n] >= 0) continue;
        if (restrict_to && !(*restrict_to)(nx, ny)) continue;
        origin[n] = origin[idx];
        queue.push_back(n);
      }
  }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int o = origin[y * w + x];
      if (o >= 0 && !flow.valid(x, y)) out.set(x, y, flow.at(o % w, o / w));
    }
  return out;
}

EndPointError end_point_error(const FlowField& estimate, const FlowField& truth, const Mask* mask) {
  if (estimate.width() != truth.width() || estimate.height() != truth.height())
    throw std::invalid_argument("end_point_error: frame mismatch");
  EndPointError e;
  double sum = 0;
  for (int y = 0; y < truth.height(); ++y)
    for (int x = 0; x < truth.width(); ++x) {
      if (!estimate.valid(x, y) || !truth.valid(x, y)) continue;
      if (mask && !(*mask)(x, y)) continue;
      const double d = (estimate.at(x, y) - truth.at(x, y)).norm();
      sum += d;
      e.max = std::max(e.max, d);
      ++e.count;
    }
  e.mean = e.count ? sum / static_cast<double>(e.count) : 0.0;
  return e;
}

}  // namespace procams
