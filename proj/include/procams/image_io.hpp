#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include "procams/raster.hpp"

namespace procams {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Transfer { SRGB, Identity };

/// 8-bit PNG. With Transfer::SRGB, linear samples are encoded on write and decoded on read.
/// Samples are clamped to [0,1] on write; 1- and 3-channel rasters are supported.
void write_png(const std::filesystem::path& path, const Raster& img, Transfer transfer = Transfer::SRGB);
Raster read_png(const std::filesystem::path& path, Transfer transfer = Transfer::SRGB);

/// Portable float map (little-endian). 1 or 3 channels, bit exact.
void write_pfm(const std::filesystem::path& path, const Raster& img);
Raster read_pfm(const std::filesystem::path& path);

/// 8-bit code of a linear sample under the chosen transfer.
std::uint8_t encode8(float linear, Transfer transfer = Transfer::SRGB);
float decode8(std::uint8_t code, Transfer transfer = Transfer::SRGB);

/// Value the raster would have after a PNG write/read round trip.
Raster quantize8(const Raster& img, Transfer transfer = Transfer::SRGB);

}  // namespace procams
