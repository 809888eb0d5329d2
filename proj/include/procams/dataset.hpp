#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "procams/photometric.hpp"
#include "procams/serialize.hpp"
#include "procams/sim.hpp"

namespace procams {

enum class Difficulty { Planar, Textured, Wavy, Sharp };

std::string to_string(Difficulty d);
Difficulty parse_difficulty(const std::string& s);

/// Seeded random setup at `resolution`² (camera and projector). Reflectance is pre-quantized to
/// 8-bit sRGB codes so it survives a PNG round trip exactly.
SetupConfig generate_setup(std::uint64_t seed, Difficulty difficulty, int resolution = 256);

/// Seeded multi-octave value noise in [lo, hi], 3 channels with independent tints.
Raster texture_noise(std::uint64_t seed, FrameSize size, double lo, double hi, double contrast);

/// Procedural projector content: gradient background, checker overlay and glyph-like strokes.
Raster procedural_image(std::uint64_t seed, FrameSize size);

struct SplitCounts {
  int train = 50;
  int val = 20;
  int test = 5;
};

struct DatasetConfig {
  int n_setups = 12;
  SplitCounts counts;
  int resolution = 256;
  int eval_resolution = 600;  ///< test split projector images
  std::uint64_t seed = 0;
  std::filesystem::path source_images;  ///< folder of PNGs; empty selects procedural content
};

struct ManifestSetup {
  std::string id;
  std::string difficulty;
  std::string setup_path;            ///< relative to the dataset root
  std::vector<std::string> priors;   ///< relative paths, levels 0, 64, 128, 191, 255
  int train = 0;
  int val = 0;
  int test = 0;
};

struct DatasetManifest {
  int version = 1;
  std::uint64_t seed = 0;
  int resolution = 0;
  int eval_resolution = 0;
  std::vector<ManifestSetup> setups;

  Json to_json() const;
  static DatasetManifest from_json(const Json& j);
  /// Throws std::out_of_range on an unknown id.
  const ManifestSetup& find(const std::string& setup_id) const;
  /// Throws IoError if a referenced file is missing; std::invalid_argument on bad counts.
  void validate(const std::filesystem::path& root) const;
};

DatasetManifest build_dataset(const DatasetConfig& config, const std::filesystem::path& out_dir);

void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);
/// Loads and validates against the files next to `path`.
DatasetManifest load_manifest(const std::filesystem::path& path);

struct DatasetPair {
  Raster x;        ///< projector input
  Raster x_tilde;  ///< camera capture
  SurfacePriorSet priors;
};

/// `split` is train, val or test. Throws std::out_of_range for an unknown setup or index.
DatasetPair load_pair(const DatasetManifest& manifest, const std::filesystem::path& root, const std::string& setup_id,
                      const std::string& split, int index);

/// Relative path of a pair image, e.g. train/cam/007.png.
std::string pair_path(const std::string& split, const std::string& side, int index);
/// Noise stream used for the capture of a stored pair.
std::uint64_t pair_noise_key(const std::string& split, int index);

}  // namespace procams
