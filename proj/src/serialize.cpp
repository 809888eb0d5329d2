#include "procams/serialize.hpp"

#include <cstdio>
#include <fstream>

#include "procams/image_io.hpp"
#include "procams/region.hpp"

namespace procams {

namespace fs = std::filesystem;

namespace {

template <typename Derived>
Json matrix_json(const Eigen::MatrixBase<Derived>& m) {
  Json rows = Json::array();
  for (int r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

template <typename M>
M matrix_from(const Json& j) {
  M m;
  if (!j.is_array() || static_cast<int>(j.size()) != m.rows()) throw std::invalid_argument("matrix has wrong row count");
  for (int r = 0; r < m.rows(); ++r) {
    if (static_cast<int>(j[r].size()) != m.cols()) throw std::invalid_argument("matrix has wrong column count");
    for (int c = 0; c < m.cols(); ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

Json vec_json(const Eigen::Vector2d& v) { return Json::array({v.x(), v.y()}); }
Json vec_json(const Eigen::Vector3d& v) { return Json::array({v.x(), v.y(), v.z()}); }

Json frame_json(FrameSize f) { return Json{{"width", f.width}, {"height", f.height}}; }
FrameSize frame_from(const Json& j) { return {j.at("width").get<int>(), j.at("height").get<int>()}; }
Json rect_json(const PixelRect& r) { return Json{{"x", r.x}, {"y", r.y}, {"w", r.w}, {"h", r.h}}; }
PixelRect rect_from(const Json& j) {
  return {j.at("x").get<int>(), j.at("y").get<int>(), j.at("w").get<int>(), j.at("h").get<int>()};
}

void require_file(const fs::path& p) {
  if (!fs::is_regular_file(p)) throw IoError("missing file: " + p.string());
}

std::string level_name(const char* prefix, int level, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%03d.%s", prefix, level, ext);
  return buf;
}

}  // namespace

void write_json(const fs::path& path, const Json& j) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string());
  os << j.dump(2) << "\n";
  if (!os) throw IoError("write failed: " + path.string());
}

Json read_json(const fs::path& path) {
  require_file(path);
  std::ifstream is(path, std::ios::binary);
  try {
    return Json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw IoError("corrupt JSON " + path.string() + ": " + e.what());
  }
}

Json setup_to_json(const SetupConfig& s) {
  Json terms = Json::array();
  for (const auto& t : s.geometry.displacement)
    terms.push_back({{"kind", t.kind == DisplacementTerm::Kind::Sine ? "sine" : "step"},
                     {"direction", vec_json(t.direction)},
                     {"amplitude", vec_json(t.amplitude)},
                     {"frequency", t.frequency},
                     {"phase", t.phase},
                     {"offset", t.offset},
                     {"width", t.width}});
  return Json{{"camera_size", frame_json(s.camera_size)},
              {"projector_size", frame_json(s.projector_size)},
              {"homography", matrix_json(s.geometry.homography)},
              {"displacement", terms},
              {"max_displacement", s.geometry.max_displacement},
              {"ambient", vec_json(s.ambient)},
              {"mixing", matrix_json(s.mixing)},
              {"projector_gamma", s.projector_gamma},
              {"camera_gamma", s.camera_gamma},
              {"noise_sigma", s.noise_sigma},
              {"seed", s.seed},
              {"reflectance", "reflectance.png"}};
}

SetupConfig setup_from_json(const Json& j) {
  SetupConfig s;
  s.camera_size = frame_from(j.at("camera_size"));
  s.projector_size = frame_from(j.at("projector_size"));
  s.geometry.homography = matrix_from<Eigen::Matrix3d>(j.at("homography"));
  for (const auto& t : j.at("displacement")) {
    DisplacementTerm d;
    const auto kind = t.at("kind").get<std::string>();
    if (kind != "sine" && kind != "step") throw std::invalid_argument("unknown displacement kind '" + kind + "'");
    d.kind = kind == "sine" ? DisplacementTerm::Kind::Sine : DisplacementTerm::Kind::Step;
    d.direction = {t.at("direction")[0].get<double>(), t.at("direction")[1].get<double>()};
    d.amplitude = {t.at("amplitude")[0].get<double>(), t.at("amplitude")[1].get<double>()};
    d.frequency = t.at("frequency").get<double>();
    d.phase = t.at("phase").get<double>();
    d.offset = t.at("offset").get<double>();
    d.width = t.at("width").get<double>();
    s.geometry.displacement.push_back(d);
  }
  s.geometry.max_displacement = j.at("max_displacement").get<double>();
  const auto& a = j.at("ambient");
  s.ambient = {a[0].get<double>(), a[1].get<double>(), a[2].get<double>()};
  s.mixing = matrix_from<Eigen::Matrix3d>(j.at("mixing"));
  s.projector_gamma = j.at("projector_gamma").get<double>();
  s.camera_gamma = j.at("camera_gamma").get<double>();
  s.noise_sigma = j.at("noise_sigma").get<double>();
  s.seed = j.at("seed").get<std::uint64_t>();
  return s;
}

void save_setup(const fs::path& dir, const SetupConfig& setup) {
  fs::create_directories(dir);
  write_json(dir / "setup.json", setup_to_json(setup));
  write_png(dir / "reflectance.png", setup.reflectance);
}

SetupConfig load_setup(const fs::path& dir) {
  const Json j = read_json(dir / "setup.json");
  SetupConfig s;
  try {
    s = setup_from_json(j);
  } catch (const std::exception& e) {
    throw IoError("corrupt setup " + (dir / "setup.json").string() + ": " + e.what());
  }
  s.reflectance = read_png(dir / j.value("reflectance", std::string("reflectance.png")));
  s.validate();
  return s;
}

void save_flow(const fs::path& pfm_path, const FlowField& flow) {
  Raster packed(flow.width(), flow.height(), 3, 0.0f);
  std::size_t valid = 0;
  for (int y = 0; y < flow.height(); ++y)
    for (int x = 0; x < flow.width(); ++x) {
      packed(x, y, 0) = flow.vectors()(x, y, 0);
      packed(x, y, 1) = flow.vectors()(x, y, 1);
      packed(x, y, 2) = flow.valid(x, y) ? 1.0f : 0.0f;
      valid += flow.valid(x, y);
    }
  write_pfm(pfm_path, packed);
  fs::path sidecar = pfm_path;
  sidecar.replace_extension(".json");
  write_json(sidecar, Json{{"convention", "backward: output p samples source p + flow(p)"},
                           {"units", "pixels, pixel-center coordinates"},
                           {"width", flow.width()},
                           {"height", flow.height()},
                           {"source_width", flow.source_width()},
                           {"source_height", flow.source_height()},
                           {"channels", Json::array({"dx", "dy", "valid"})},
                           {"valid_count", valid},
                           {"valid_fraction", flow.valid_fraction()},
                           {"max_magnitude", flow.max_magnitude()}});
}

FlowField load_flow(const fs::path& pfm_path) {
  fs::path sidecar = pfm_path;
  sidecar.replace_extension(".json");
  const Json j = read_json(sidecar);
  const Raster packed = read_pfm(pfm_path);
  if (packed.channels() != 3 || packed.width() != j.at("width").get<int>() || packed.height() != j.at("height").get<int>())
    throw IoError("flow image does not match its sidecar: " + pfm_path.string());
  FlowField f(packed.width(), packed.height(), j.at("source_width").get<int>(), j.at("source_height").get<int>());
  for (int y = 0; y < f.height(); ++y)
    for (int x = 0; x < f.width(); ++x) {
      if (packed(x, y, 2) > 0.5f) {
        f.vectors()(x, y, 0) = packed(x, y, 0);
        f.vectors()(x, y, 1) = packed(x, y, 1);
        f.validity()(x, y) = 1;
      } else {
        f.invalidate(x, y);
      }
    }
  return f;
}

void save_model(const fs::path& dir, const PhotometricModel& model) {
  fs::create_directories(dir);
  Json knots = Json::array();
  for (std::size_t i = 0; i < model.drive_knots().size(); ++i) {
    const std::string name = level_name("knot", static_cast<int>(i), "pfm");
    write_pfm(dir / name, model.knot_values()[i]);
    knots.push_back({{"drive", model.drive_knots()[i]}, {"file", name}});
  }
  double lo = 1e300, hi = -1e300;
  for (const auto& k : model.knot_values())
    for (float v : k.samples()) lo = std::min(lo, static_cast<double>(v)), hi = std::max(hi, static_cast<double>(v));
  Json j{{"mode", model.mode() == PhotometricModel::Mode::GainOnly ? "gain" : "curve"},
         {"width", model.width()},
         {"height", model.height()},
         {"knots", knots},
         {"mixing", model.mixing() ? matrix_json(*model.mixing()) : Json(nullptr)},
         {"mixing_gamma", model.mixing_gamma()},
         {"stats", {{"min_value", lo}, {"max_value", hi}}}};
  write_json(dir / "model.json", j);
}

PhotometricModel load_model(const fs::path& dir) {
  const Json j = read_json(dir / "model.json");
  const auto mode_s = j.at("mode").get<std::string>();
  if (mode_s != "gain" && mode_s != "curve") throw IoError("unknown model mode in " + (dir / "model.json").string());
  std::vector<double> drives;
  std::vector<Raster> values;
  for (const auto& k : j.at("knots")) {
    drives.push_back(k.at("drive").get<double>());
    values.push_back(read_pfm(dir / k.at("file").get<std::string>()));
  }
  PhotometricModel m(mode_s == "gain" ? PhotometricModel::Mode::GainOnly : PhotometricModel::Mode::Curve,
                     std::move(drives), std::move(values));
  if (!j.at("mixing").is_null())
    m.set_mixing(matrix_from<Eigen::Matrix3d>(j.at("mixing")), j.value("mixing_gamma", 1.0));
  return m;
}

void save_bundle(const fs::path& dir, const CalibrationBundle& b) {
  b.validate();
  fs::create_directories(dir);
  write_png(dir / "camera_mask.png", mask_to_raster(b.camera_mask), Transfer::Identity);
  save_flow(dir / "flow.pfm", b.flow);
  save_flow(dir / "flow_back.pfm", b.flow_back);
  Json priors = Json::array();
  for (std::size_t i = 0; i < b.surface_priors.priors.size(); ++i) {
    const std::string name = level_name("prior", b.surface_priors.levels[i], "pfm");
    write_pfm(dir / name, b.surface_priors.priors[i]);
    priors.push_back({{"level", b.surface_priors.levels[i]}, {"file", name}});
  }
  save_model(dir / "model", b.model);
  write_json(dir / "bundle.json",
             Json{{"version", 1},
                  {"method", to_string(b.provenance)},
                  {"k", b.k},
                  {"projector", frame_json(b.projector)},
                  {"camera", frame_json(b.camera)},
                  {"crop", rect_json(b.crop)},
                  {"inscribed", rect_json(b.inscribed)},
                  {"affine", matrix_json(b.affine.matrix())},
                  {"priors", priors},
                  {"flow", "flow.pfm"},
                  {"flow_back", "flow_back.pfm"},
                  {"model", "model"}});
  // Wall-clock figures live apart from the reproducible bundle files.
  write_json(dir / "timing.json", Json{{"total_ms", b.timing.total_ms}, {"flow_ms", b.timing.flow_ms}, {"fit_ms", b.timing.fit_ms}});
}

CalibrationBundle load_bundle(const fs::path& dir) {
  const Json j = read_json(dir / "bundle.json");
  CalibrationBundle b;
  try {
    b.provenance = parse_method(j.at("method").get<std::string>());
    b.k = j.at("k").get<int>();
    b.projector = frame_from(j.at("projector"));
    b.camera = frame_from(j.at("camera"));
    b.crop = rect_from(j.at("crop"));
    b.inscribed = rect_from(j.at("inscribed"));
    b.affine = AffineMap(matrix_from<Eigen::Matrix<double, 2, 3>>(j.at("affine")));
    for (const auto& p : j.at("priors")) {
      b.surface_priors.levels.push_back(p.at("level").get<int>());
      b.surface_priors.priors.push_back(read_pfm(dir / p.at("file").get<std::string>()));
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError("corrupt bundle " + (dir / "bundle.json").string() + ": " + e.what());
  }
  b.camera_mask = mask_from_raster(read_png(dir / "camera_mask.png", Transfer::Identity));
  b.crop_mask = crop(b.camera_mask, b.crop);
  b.flow = load_flow(dir / j.at("flow").get<std::string>());
  b.flow_back = load_flow(dir / j.at("flow_back").get<std::string>());
  b.model = load_model(dir / j.at("model").get<std::string>());
  if (fs::is_regular_file(dir / "timing.json")) {
    const Json t = read_json(dir / "timing.json");
    b.timing = {t.value("total_ms", 0.0), t.value("flow_ms", 0.0), t.value("fit_ms", 0.0)};
  }
  b.validate();
  return b;
}

}  // namespace procams
