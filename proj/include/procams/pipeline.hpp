#pragma once

#include <optional>
#include <string>
#include <vector>

#include "procams/flow.hpp"
#include "procams/metrics.hpp"
#include "procams/optical_flow.hpp"
#include "procams/photometric.hpp"
#include "procams/raster.hpp"
#include "procams/region.hpp"
#include "procams/sim.hpp"

namespace procams {

enum class CalibrationMethod { Graycode, Flow };

std::string to_string(CalibrationMethod m);
CalibrationMethod parse_method(const std::string& s);

struct CalibrationOptions {
  CalibrationMethod method = CalibrationMethod::Graycode;
  int k = 5;
  bool chromatic = false;       ///< estimate a global channel mixing from colour probes
  bool preserve_aspect = true;  ///< letterbox the desired image inside the inscribed rectangle
  FlowOptions flow;
  double inversion_radius = 2.5;
  std::uint64_t reference_seed = 1;  ///< seed of the textured reference used by the flow method
};

struct CalibrationTiming {
  double total_ms = 0;
  double flow_ms = 0;
  double fit_ms = 0;
};

/// Everything a setup needs for compensation, estimated once and reused for every image.
///
/// Frames: camera (full capture), crop (bounding box of the projector field of view inside the
/// camera frame) and projector. `flow` lives on the projector frame and pulls from the crop
/// frame; `flow_back` is its inverse.
struct CalibrationBundle {
  FrameSize projector;
  FrameSize camera;
  PixelRect crop;
  Mask camera_mask;
  Mask crop_mask;
  FlowField flow;
  FlowField flow_back;
  SurfacePriorSet surface_priors;  ///< all five levels, warped into the projector frame
  int k = 5;
  PhotometricModel model;          ///< fitted from surface_priors.select(k) only
  PixelRect inscribed;             ///< crop frame
  AffineMap affine;                ///< projector frame -> crop frame
  CalibrationMethod provenance = CalibrationMethod::Graycode;
  CalibrationTiming timing;

  FrameSize crop_size() const { return {crop.w, crop.h}; }
  /// Throws std::invalid_argument if the frames are not mutually consistent.
  void validate() const;
};

/// Bundle of a same-size identity system.
CalibrationBundle identity_bundle(int width, int height);

/// Same calibration with the photometric model refitted for a different prior count.
CalibrationBundle with_prior_count(const CalibrationBundle& bundle, int k);

/// Deterministic high-contrast texture used as the reference projection for flow calibration.
Raster calibration_texture(FrameSize size, std::uint64_t seed);

/// Calibrates against any capture oracle (projector image -> camera image).
CalibrationBundle calibrate(const CaptureFn<float>& capture, FrameSize projector, const CalibrationOptions& options);
/// Calibrates against the simulator; captures are noisy when the setup declares noise.
CalibrationBundle calibrate(const SetupConfig& setup, const CalibrationOptions& options);

struct CompensationResult {
  Raster drive;              ///< projector frame, in [0,1]
  Raster predicted_capture;  ///< crop frame, model prediction of the drive's capture
  Raster desired;            ///< crop frame
  Mask desired_mask;         ///< crop frame pixels carrying desired content
  MetricBlock metrics;       ///< prediction vs desired
  double clip_fraction = 0;
  double wall_ms = 0;
};

/// Compensates a projector-frame image without projecting it.
CompensationResult compensate(const Raster& x, const CalibrationBundle& bundle);

struct EvaluationResult {
  CompensationResult compensation;
  Raster compensated_capture;    ///< crop frame
  Raster uncompensated_capture;  ///< crop frame
  MetricBlock compensated;
  MetricBlock uncompensated;
};

/// Projects the compensation image through the simulator and scores the capture against the
/// desired image; also scores the capture of `x` projected directly.
EvaluationResult evaluate_real(const Raster& x, const CalibrationBundle& bundle, const SetupConfig& setup,
                               std::uint64_t noise_key = 0);

/// Recovers the projector input from its capture (camera or crop frame): warp into the projector
/// frame, then invert the photometric curves.
Raster surrogate_recover(const Raster& captured, const CalibrationBundle& bundle);

struct SurrogateLoss {
  double l1 = 0;
  double ssim = 0;
  double total = 0;  ///< l1 + (1 - ssim)
};

SurrogateLoss surrogate_loss(const Raster& x_hat, const Raster& x);

struct AblationRow {
  std::string setup_id;
  std::string image_id;
  int k = 0;
  std::string method;
  MetricBlock metrics;
  double clip_fraction = 0;
  double ms = 0;
};

struct AblationSummary {
  int k = 0;
  double psnr = 0, rmse = 0, ssim = 0, de00 = 0;
  std::size_t rows = 0;
};

struct AblationTable {
  std::vector<AblationRow> rows;
  std::vector<AblationSummary> summary;  ///< compensated rows only, one per K
  /// Mean PSNR strictly increases with K across the summary.
  bool ordering_holds() const;
};

struct AblationSetup {
  std::string id;
  SetupConfig setup;
  std::vector<Raster> images;  ///< per-setup test images; the shared list is used when empty
};

/// Calibrates every setup once, then evaluates every test image for every K. Test images are
/// resampled to the projector frame.
AblationTable ablate_priors(const std::vector<AblationSetup>& setups, const std::vector<int>& k_values,
                            const std::vector<Raster>& test_images, const CalibrationOptions& options = {});

/// CSV header shared by every metrics file.
std::string metrics_csv_header();
std::string to_csv_row(const AblationRow& row);

}  // namespace procams
