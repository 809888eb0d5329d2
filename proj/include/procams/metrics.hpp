#pragma once

#include <Eigen/Core>

#include "procams/flow.hpp"
#include "procams/raster.hpp"

namespace procams {

inline constexpr double kPsnrCap = 99.0;

struct PsnrRmse {
  double psnr = 0;
  double rmse = 0;
};

/// RMSE over all channels of the masked pixels; PSNR on a unit peak, capped at 99 dB when
/// rmse < 1e-5. Throws on a shape mismatch or an empty mask.
PsnrRmse psnr_rmse(const Raster& a, const Raster& b, const Mask* mask = nullptr);

struct SsimOptions {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  bool per_channel = false;  ///< default: Rec. 709 luma of the inputs
};

/// Gaussian-windowed SSIM averaged over every window that fits the image (and lies entirely
/// inside `mask` when given). Throws if the image is smaller than the window.
double ssim(const Raster& a, const Raster& b, const SsimOptions& options = {}, const Mask* mask = nullptr);

/// CIEDE2000 colour difference between two Lab triples (kL = kC = kH = 1).
double ciede2000(const Eigen::Vector3d& lab1, const Eigen::Vector3d& lab2);

/// Mean CIEDE2000 over the masked pixels of two Lab rasters.
double de00(const Raster& lab_a, const Raster& lab_b, const Mask* mask = nullptr);

struct MetricBlock {
  double psnr = 0;
  double rmse = 0;
  double ssim = 0;
  double de00 = 0;
  std::size_t valid_pixels = 0;
};

/// Full metric block for two linear-RGB rasters.
MetricBlock compute_metrics(const Raster& a, const Raster& b, const Mask* mask = nullptr);

}  // namespace procams
