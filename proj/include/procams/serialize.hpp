#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "procams/flow.hpp"
#include "procams/photometric.hpp"
#include "procams/pipeline.hpp"
#include "procams/sim.hpp"

namespace procams {

using Json = nlohmann::ordered_json;

/// Every field but the reflectance raster; matrices are row-major nested arrays.
Json setup_to_json(const SetupConfig& setup);
/// Inverse of setup_to_json; the reflectance is left default-constructed.
SetupConfig setup_from_json(const Json& j);

/// Writes `setup.json` and `reflectance.png` into `dir`.
void save_setup(const std::filesystem::path& dir, const SetupConfig& setup);
SetupConfig load_setup(const std::filesystem::path& dir);

/// 3-channel PFM (dx, dy, valid) plus a JSON sidecar with frames and mask statistics.
void save_flow(const std::filesystem::path& pfm_path, const FlowField& flow);
FlowField load_flow(const std::filesystem::path& pfm_path);

/// One PFM per knot plus `model.json` (mode, knots, mixing, stats).
void save_model(const std::filesystem::path& dir, const PhotometricModel& model);
PhotometricModel load_model(const std::filesystem::path& dir);

void save_bundle(const std::filesystem::path& dir, const CalibrationBundle& bundle);
/// Throws IoError naming the missing or corrupt file.
CalibrationBundle load_bundle(const std::filesystem::path& dir);

/// Deterministic JSON text (2-space indent, trailing newline).
void write_json(const std::filesystem::path& path, const Json& j);
Json read_json(const std::filesystem::path& path);

}  // namespace procams
