#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "procams/color.hpp"
#include "procams/flow.hpp"
#include "procams/raster.hpp"

namespace procams {

struct FrameSize {
  int width = 0;
  int height = 0;
  bool operator==(const FrameSize&) const = default;
};

/// One band-limited component of the surface displacement field.
///
/// Sine:  amplitude * sin(2*pi*frequency * (direction . q) + phase)
/// Step:  amplitude * tanh((direction . q - offset) / width)
struct DisplacementTerm {
  enum class Kind { Sine, Step };
  Kind kind = Kind::Sine;
  Eigen::Vector2d direction = Eigen::Vector2d::UnitX();
  Eigen::Vector2d amplitude = Eigen::Vector2d::Zero();
  double frequency = 0.0;  // cycles per pixel (Sine)
  double phase = 0.0;      // radians (Sine)
  double offset = 0.0;     // pixels (Step)
  double width = 1.0;      // pixels (Step)

  Eigen::Vector2d value(const Eigen::Vector2d& q) const;
  Eigen::Matrix2d jacobian(const Eigen::Vector2d& q) const;
  bool operator==(const DisplacementTerm&) const = default;
};

/// Projector -> camera mapping: c = H(q) + D(q), with q and c in pixel-center coordinates.
struct GeometryWarp {
  Eigen::Matrix3d homography = Eigen::Matrix3d::Identity();
  std::vector<DisplacementTerm> displacement;
  double max_displacement = 0.0;

  Eigen::Vector2d forward(const Eigen::Vector2d& q) const;
  Eigen::Matrix2d jacobian(const Eigen::Vector2d& q) const;
  /// Newton inversion seeded by the inverse homography. Returns false if it fails to converge.
  bool inverse(const Eigen::Vector2d& c, Eigen::Vector2d& q) const;

  static GeometryWarp translation(double tx, double ty);
  bool operator==(const GeometryWarp&) const = default;
};

struct SetupConfig {
  Raster reflectance;  // camera frame, 3 channels in [0,1]
  GeometryWarp geometry;
  Eigen::Vector3d ambient = Eigen::Vector3d::Zero();
  Eigen::Matrix3d mixing = Eigen::Matrix3d::Identity();
  double projector_gamma = 1.0;
  double camera_gamma = 1.0;
  double noise_sigma = 0.0;
  FrameSize camera_size;
  FrameSize projector_size;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument naming the violated invariant.
  void validate() const;
  /// Non-singular mixing.
  bool invertible() const;

  /// Reflectance 1, identity geometry, no ambient, unit gammas, identity mixing, no noise.
  static SetupConfig identity(int width, int height);
  bool operator==(const SetupConfig&) const = default;
};

/// Precomputed camera -> projector cell lookup for repeated captures of one setup.
///
/// The projector image is piecewise constant over its pixel cells and each camera pixel
/// point-samples the cell its center maps to. Capture pipeline: projector gamma, channel
/// mixing, geometric mapping, reflectance times (light + ambient), camera encoding gamma
/// v^(1/camera_gamma), clamp, optional seeded Gaussian noise, clamp.
class ProCamsSimulator {
 public:
  explicit ProCamsSimulator(SetupConfig setup);

  const SetupConfig& setup() const { return setup_; }

  /// `noise_key` selects an independent, reproducible noise stream.
  Raster render(const Raster& projector_image, bool with_noise = false, std::uint64_t noise_key = 0) const;

  /// Projector cell index sampled by each camera pixel (-1 outside the projected field of view).
  int cell_of(int cx, int cy) const { return cell_[static_cast<std::size_t>(cy) * setup_.camera_size.width + cx]; }

 private:
  SetupConfig setup_;
  std::vector<int> cell_;
};

Raster render_capture(const Raster& projector_image, const SetupConfig& setup, bool with_noise,
                      std::uint64_t noise_key = 0);

/// Levels a surface prior may be captured at.
inline constexpr int kPriorLevels[5] = {0, 64, 128, 191, 255};
bool is_prior_level(int level);

Raster uniform_image(FrameSize size, float value, int channels = 3);
Raster capture_surface_prior(int level, const SetupConfig& setup, bool with_noise = false);

/// Photometric stages only: mixing * x^gamma_p, in the projector frame.
Raster projector_light(const Raster& projector_image, const SetupConfig& setup);
/// Camera-frame stages only: reflectance, ambient, camera gamma, clamp. No noise.
Raster camera_response(const Raster& light_in_camera_frame, const SetupConfig& setup);

inline constexpr double kFovThreshold = 0.02;

struct FovMasks {
  Mask camera;
  Mask projector;
  bool degenerate = false;
};

/// Camera mask from a white-minus-black capture difference (mean over channels > threshold).
FovMasks fov_masks_from_captures(const Raster& white, const Raster& black, FrameSize projector_size,
                                 double threshold = kFovThreshold);
FovMasks render_fov_masks(const SetupConfig& setup);

/// Camera-frame backward flow to exact (continuous) projector source coordinates. Invalid outside
/// the projected field of view.
FlowField true_flow(const SetupConfig& setup);
/// As true_flow, but pointing at the center of the projector cell each camera pixel samples.
FlowField true_cell_flow(const SetupConfig& setup);
/// Projector-frame flow to camera coordinates c = G(q), shifted by -offset (for crop frames).
FlowField true_projector_flow(const SetupConfig& setup, Eigen::Vector2i offset = Eigen::Vector2i::Zero(),
                              FrameSize target = {});

}  // namespace procams
