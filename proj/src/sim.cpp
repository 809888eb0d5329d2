#include "procams/sim.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "procams/parallel.hpp"

namespace procams {

Eigen::Vector2d DisplacementTerm::value(const Eigen::Vector2d& q) const {
  const double s = direction.dot(q);
  if (kind == Kind::Sine) return amplitude * std::sin(2.0 * std::numbers::pi * frequency * s + phase);
  return amplitude * std::tanh((s - offset) / width);
}

Eigen::Matrix2d DisplacementTerm::jacobian(const Eigen::Vector2d& q) const {
  const double s = direction.dot(q);
  double ds = 0.0;
  if (kind == Kind::Sine) {
    const double w = 2.0 * std::numbers::pi * frequency;
    ds = w * std::cos(w * s + phase);
  } else {
    const double t = std::tanh((s - offset) / width);
    ds = (1.0 - t * t) / width;
  }
  return amplitude * (ds * direction.transpose());
}

Eigen::Vector2d GeometryWarp::forward(const Eigen::Vector2d& q) const {
  const Eigen::Vector3d h = homography * q.homogeneous();
  Eigen::Vector2d c = h.hnormalized();
  for (const auto& t : displacement) c += t.value(q);
  return c;
}

Eigen::Matrix2d GeometryWarp::jacobian(const Eigen::Vector2d& q) const {
  const Eigen::Vector3d h = homography * q.homogeneous();
  const double w = h.z();
  Eigen::Matrix2d j;
  for (int r = 0; r < 2; ++r)
    for (int k = 0; k < 2; ++k) j(r, k) = (homography(r, k) * w - h[r] * homography(2, k)) / (w * w);
  for (const auto& t : displacement) j += t.jacobian(q);
  return j;
}

bool GeometryWarp::inverse(const Eigen::Vector2d& c, Eigen::Vector2d& q) const {
  q = (homography.inverse() * c.homogeneous()).hnormalized();
  if (displacement.empty()) return q.allFinite();
  Eigen::Vector2d r = forward(q) - c;
  for (int it = 0; it < 60; ++it) {
    if (r.norm() < 1e-10) return true;
    const Eigen::Vector2d step = jacobian(q).inverse() * r;
    double scale = 1.0;
    Eigen::Vector2d next = q - step;
    Eigen::Vector2d rn = forward(next) - c;
    while (rn.norm() > r.norm() && scale > 1e-4) {
      scale *= 0.5;
      next = q - scale * step;
      rn = forward(next) - c;
    }
    q = next;
    r = rn;
  }
  return r.norm() < 1e-8;
}

GeometryWarp GeometryWarp::translation(double tx, double ty) {
  GeometryWarp g;
  g.homography(0, 2) = tx;
  g.homography(1, 2) = ty;
  return g;
}

void SetupConfig::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("invalid setup: " + msg); };
  if (camera_size.width < 1 || camera_size.height < 1 || projector_size.width < 1 || projector_size.height < 1)
    fail("frame sizes must be positive");
  if (reflectance.width() != camera_size.width || reflectance.height() != camera_size.height ||
      reflectance.channels() != 3)
    fail("reflectance must be a 3-channel camera-frame raster");
  if (!reflectance.is_normalized()) fail("reflectance outside [0,1]");
  if ((ambient.array() < 0.0).any() || !ambient.allFinite()) fail("ambient must be >= 0");
  if ((mixing.array() < 0.0).any() || !mixing.allFinite()) fail("mixing entries must be >= 0");
  if (!(projector_gamma > 0) || !(camera_gamma > 0)) fail("gammas must be > 0");
  if (!(noise_sigma >= 0)) fail("noise sigma must be >= 0");
  if (std::abs(geometry.homography(2, 2) - 1.0) > 1e-12) fail("homography must be normalized (h33 = 1)");
  if (std::abs(geometry.homography.determinant()) < 1e-12) fail("homography is singular");
  double amp = 0;
  for (const auto& t : geometry.displacement) amp += t.amplitude.norm();
  if (amp > geometry.max_displacement + 1e-12) fail("displacement exceeds declared bound");

  // Orientation-preserving Jacobian on a sampling grid (plus the frame border).
  const int pw = projector_size.width, ph = projector_size.height;
  auto check_point = [&](int x, int y) {
    const Eigen::Vector2d q(x, y);
    if (!(geometry.jacobian(q).determinant() > 0)) fail("warp is not injective near (" + std::to_string(x) + "," + std::to_string(y) + ")");
  };
  for (int y = 0; y < ph; y += 2)
    for (int x = 0; x < pw; x += 2) check_point(x, y);

  // Projector field of view strictly inside the camera frame.
  const double eps = 1e-6;
  auto inside = [&](int x, int y) {
    const Eigen::Vector2d c = geometry.forward(Eigen::Vector2d(x, y));
    if (!(c.x() >= -eps && c.y() >= -eps && c.x() <= camera_size.width - 1 + eps &&
          c.y() <= camera_size.height - 1 + eps))
      fail("projector field of view leaves the camera frame at projector pixel (" + std::to_string(x) +
           "," + std::to_string(y) + ")");
  };
  for (int x = 0; x < pw; ++x) inside(x, 0), inside(x, ph - 1);
  for (int y = 0; y < ph; ++y) inside(0, y), inside(pw - 1, y);
}

bool SetupConfig::invertible() const { return std::abs(mixing.determinant()) > 1e-9; }

SetupConfig SetupConfig::identity(int width, int height) {
  SetupConfig s;
  s.camera_size = {width, height};
  s.projector_size = {width, height};
  s.reflectance = Raster(width, height, 3, 1.0f);
  return s;
}

ProCamsSimulator::ProCamsSimulator(SetupConfig setup) : setup_(std::move(setup)) {
  setup_.validate();
  const int cw = setup_.camera_size.width, ch = setup_.camera_size.height;
  const int pw = setup_.projector_size.width, ph = setup_.projector_size.height;
  cell_.assign(static_cast<std::size_t>(cw) * ch, -1);
  parallel_for(ch, [&](int y) {
    for (int x = 0; x < cw; ++x) {
      Eigen::Vector2d q;
      if (!setup_.geometry.inverse(Eigen::Vector2d(x, y), q)) continue;
      const double qx = std::floor(q.x() + 0.5), qy = std::floor(q.y() + 0.5);
      if (qx < 0 || qy < 0 || qx >= pw || qy >= ph) continue;
      cell_[static_cast<std::size_t>(y) * cw + x] = static_cast<int>(qy) * pw + static_cast<int>(qx);
    }
  });
}

Raster projector_light(const Raster& x, const SetupConfig& setup) {
  if (x.channels() != 3) throw std::invalid_argument("projector images must have 3 channels");
  Raster light(x.width(), x.height(), 3);
  for (int y = 0; y < x.height(); ++y)
    for (int xx = 0; xx < x.width(); ++xx) {
      Eigen::Vector3d d;
      for (int c = 0; c < 3; ++c) d[c] = std::pow(static_cast<double>(x(xx, y, c)), setup.projector_gamma);
      const Eigen::Vector3d l = setup.mixing * d;
      for (int c = 0; c < 3; ++c) light(xx, y, c) = static_cast<float>(l[c]);
    }
  return light;
}

namespace {

float respond(double reflectance, double light, double ambient, double camera_gamma) {
  const double radiance = reflectance * (light + ambient);
  return static_cast<float>(std::clamp(std::pow(radiance, 1.0 / camera_gamma), 0.0, 1.0));
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t key) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (key + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

void add_noise(Raster& img, double sigma, std::uint64_t seed, std::uint64_t key) {
  std::mt19937_64 rng(mix_seed(seed, key));
  std::normal_distribution<double> n(0.0, sigma);
  for (auto& v : img.samples()) v = static_cast<float>(std::clamp(v + n(rng), 0.0, 1.0));
}

}  // namespace

Raster camera_response(const Raster& light, const SetupConfig& setup) {
  if (light.width() != setup.camera_size.width || light.height() != setup.camera_size.height)
    throw std::invalid_argument("camera_response: light must be in the camera frame");
  Raster out(light.width(), light.height(), 3);
  for (int y = 0; y < light.height(); ++y)
    for (int x = 0; x < light.width(); ++x)
      for (int c = 0; c < 3; ++c)
        out(x, y, c) = respond(setup.reflectance(x, y, c), light(x, y, c), setup.ambient[c], setup.camera_gamma);
  return out;
}

Raster ProCamsSimulator::render(const Raster& x, bool with_noise, std::uint64_t noise_key) const {
  const auto& s = setup_;
  if (x.width() != s.projector_size.width || x.height() != s.projector_size.height)
    throw std::invalid_argument("render_capture: projector image is " + std::to_string(x.width()) + "x" +
                                std::to_string(x.height()) + ", setup expects " +
                                std::to_string(s.projector_size.width) + "x" + std::to_string(s.projector_size.height));
  require_normalized(x, "render_capture");
  const Raster light = projector_light(x, s);
  const int cw = s.camera_size.width;
  Raster out(cw, s.camera_size.height, 3);
  parallel_for(s.camera_size.height, [&](int y) {
    for (int xx = 0; xx < cw; ++xx) {
      const int cell = cell_of(xx, y);
      for (int c = 0; c < 3; ++c) {
        const double l = cell >= 0 ? light.data()[static_cast<std::size_t>(cell) * 3 + c] : 0.0;
        out(xx, y, c) = respond(s.reflectance(xx, y, c), l, s.ambient[c], s.camera_gamma);
      }
    }
  });
  if (with_noise && s.noise_sigma > 0) add_noise(out, s.noise_sigma, s.seed, noise_key);
  return out;
}

Raster render_capture(const Raster& x, const SetupConfig& setup, bool with_noise, std::uint64_t noise_key) {
  return ProCamsSimulator(setup).render(x, with_noise, noise_key);
}

bool is_prior_level(int level) {
  for (int l : kPriorLevels)
    if (l == level) return true;
  return false;
}

Raster uniform_image(FrameSize size, float value, int channels) {
  return Raster(size.width, size.height, channels, value);
}

Raster capture_surface_prior(int level, const SetupConfig& setup, bool with_noise) {
  if (!is_prior_level(level))
    throw std::invalid_argument("surface prior level " + std::to_string(level) + " not in {0,64,128,191,255}");
  return render_capture(uniform_image(setup.projector_size, static_cast<float>(level / 255.0)), setup, with_noise,
                        1000 + static_cast<std::uint64_t>(level));
}

FovMasks fov_masks_from_captures(const Raster& white, const Raster& black, FrameSize projector_size,
                                 double threshold) {
  require_same_shape(white, black, "fov masks");
  FovMasks m{make_mask(white.width(), white.height(), false),
             make_mask(projector_size.width, projector_size.height, true), false};
  for (int y = 0; y < white.height(); ++y)
    for (int x = 0; x < white.width(); ++x) {
      double diff = 0;
      for (int c = 0; c < white.channels(); ++c) diff += white(x, y, c) - black(x, y, c);
      m.camera(x, y) = diff / white.channels() > threshold;
    }
  m.degenerate = count(m.camera) == 0;
  return m;
}

FovMasks render_fov_masks(const SetupConfig& setup) {
  const ProCamsSimulator sim(setup);
  return fov_masks_from_captures(sim.render(uniform_image(setup.projector_size, 1.0f)),
                                 sim.render(uniform_image(setup.projector_size, 0.0f)), setup.projector_size);
}

namespace {

FlowField camera_flow(const SetupConfig& setup, bool cell_centers) {
  setup.validate();
  const int cw = setup.camera_size.width, ch = setup.camera_size.height;
  const int pw = setup.projector_size.width, ph = setup.projector_size.height;
  FlowField f(cw, ch, pw, ph);
  parallel_for(ch, [&](int y) {
    for (int x = 0; x < cw; ++x) {
      Eigen::Vector2d q;
      const bool ok = setup.geometry.inverse(Eigen::Vector2d(x, y), q);
      const Eigen::Vector2d cell(std::floor(q.x() + 0.5), std::floor(q.y() + 0.5));
      if (!ok || cell.x() < 0 || cell.y() < 0 || cell.x() >= pw || cell.y() >= ph) {
        f.invalidate(x, y);
        continue;
      }
      f.set(x, y, (cell_centers ? cell : q) - Eigen::Vector2d(x, y));
    }
  });
  return f;
}

}  // namespace

FlowField true_flow(const SetupConfig& setup) { return camera_flow(setup, false); }
FlowField true_cell_flow(const SetupConfig& setup) { return camera_flow(setup, true); }

FlowField true_projector_flow(const SetupConfig& setup, Eigen::Vector2i offset, FrameSize target) {
  if (target.width == 0) target = setup.camera_size;
  const int pw = setup.projector_size.width, ph = setup.projector_size.height;
  FlowField f(pw, ph, target.width, target.height);
  for (int y = 0; y < ph; ++y)
    for (int x = 0; x < pw; ++x) {
      const Eigen::Vector2d q(x, y);
      f.set(x, y, setup.geometry.forward(q) - offset.cast<double>() - q);
    }
  return f;
}

}  // namespace procams
