#pragma once

#include <vector>

#include "procams/flow.hpp"
#include "procams/raster.hpp"

namespace procams {

inline constexpr double kGrayBitThreshold = 0.05;

int bits_for(int extent);

/// Pattern order: white, black, then for every column bit (MSB first) the pattern followed by
/// its inverse, then the same for row bits. Count = 2 * (ceil(log2 w) + ceil(log2 h)) + 2.
std::vector<Raster> graycode_patterns(int projector_width, int projector_height);

struct DecodeReport {
  std::size_t decoded = 0;
  std::size_t ambiguous = 0;  ///< FOV pixels rejected because a bit fell below the threshold
};

/// Decodes captures of graycode_patterns into a camera-frame flow pointing at projector cells.
/// Pixels outside `camera_mask`, with an ambiguous bit, or decoding outside the projector frame
/// are invalid.
FlowField graycode_decode(const std::vector<Raster>& captures, const Mask& camera_mask, int projector_width,
                          int projector_height, double bit_threshold = kGrayBitThreshold,
                          DecodeReport* report = nullptr);

}  // namespace procams
