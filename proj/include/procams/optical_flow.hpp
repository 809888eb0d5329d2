#pragma once

#include <optional>

#include "procams/flow.hpp"
#include "procams/raster.hpp"

namespace procams {

struct FlowOptions {
  int levels = 4;
  int iters_per_level = 10;
  int window_radius = 14;
  /// Pixels whose accumulated flow moves further than this from the initial guess are invalid.
  double max_update = 40.0;
  /// Tikhonov term on the 2x2 normal equations, relative to the window area.
  double regularization = 1e-6;
};

struct FlowEstimate {
  FlowField flow;
  bool degenerate = false;  ///< no usable gradient in the reference
};

/// Dense coarse-to-fine Lucas-Kanade: the flow on the reference frame is refined by repeated
/// increments flow <- flow + delta, each delta the windowed least-squares solution of the
/// linearised brightness constancy residual captured(p + flow) - reference(p).
/// `initial` (reference frame, pointing into `captured`) seeds the coarsest level. Samples that
/// touch pixels cleared in `captured_mask` are ignored.
FlowEstimate estimate_flow(const Raster& captured, const Raster& reference, const FlowOptions& options = {},
                           const FlowField* initial = nullptr, const Mask* captured_mask = nullptr);

}  // namespace procams
