#include "procams/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "procams/image_io.hpp"
#include "procams/parallel.hpp"
#include "procams/resample.hpp"

namespace procams {

namespace fs = std::filesystem;

namespace {

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a * 0x9E3779B97F4A7C15ull + b + 0x632BE59BD9B4E019ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

Eigen::Vector2d unit(double angle) { return {std::cos(angle), std::sin(angle)}; }

Raster value_noise(std::mt19937_64& rng, FrameSize size, int cell) {
  const int gw = size.width / cell + 2, gh = size.height / cell + 2;
  Raster grid(gw, gh, 1);
  for (auto& v : grid.samples()) v = static_cast<float>(uniform(rng, 0.0, 1.0));
  Raster out(size.width, size.height, 1);
  for (int y = 0; y < size.height; ++y)
    for (int x = 0; x < size.width; ++x) {
      // Smoothstep-eased lattice interpolation.
      const double gx = static_cast<double>(x) / cell, gy = static_cast<double>(y) / cell;
      const double fx = std::floor(gx), fy = std::floor(gy);
      double tx = gx - fx, ty = gy - fy;
      tx = tx * tx * (3 - 2 * tx);
      ty = ty * ty * (3 - 2 * ty);
      out(x, y) = static_cast<float>(sample_bilinear(grid, fx + tx, fy + ty, 0));
    }
  return out;
}

GeometryWarp draw_geometry(std::mt19937_64& rng, Difficulty d, int res) {
  const double s = uniform(rng, 0.72, 0.86);
  const double theta = uniform(rng, -4.0, 4.0) * std::numbers::pi / 180.0;
  const double px = uniform(rng, -3e-4, 3e-4) * 256.0 / res;
  const double py = uniform(rng, -3e-4, 3e-4) * 256.0 / res;
  const double c = (res - 1) / 2.0;
  const double shift = (1.0 - s) * res * 0.25;
  Eigen::Matrix3d to_center = Eigen::Matrix3d::Identity(), from_center = Eigen::Matrix3d::Identity(), core;
  to_center(0, 2) = to_center(1, 2) = -c;
  from_center(0, 2) = c + uniform(rng, -shift, shift);
  from_center(1, 2) = c + uniform(rng, -shift, shift);
  core << s * std::cos(theta), -s * std::sin(theta), 0, s * std::sin(theta), s * std::cos(theta), 0, px, py, 1;
  GeometryWarp g;
  g.homography = from_center * core * to_center;
  g.homography /= g.homography(2, 2);

  const double scale = res / 256.0;
  if (d == Difficulty::Wavy) {
    const int n = std::uniform_int_distribution<int>(2, 3)(rng);
    for (int i = 0; i < n; ++i) {
      DisplacementTerm t;
      t.kind = DisplacementTerm::Kind::Sine;
      t.direction = unit(uniform(rng, 0, 2 * std::numbers::pi));
      t.frequency = uniform(rng, 1.0 / 64, 1.0 / 24) / scale;
      t.phase = uniform(rng, 0, 2 * std::numbers::pi);
      t.amplitude = unit(uniform(rng, 0, 2 * std::numbers::pi)) * uniform(rng, 1.0, 3.0) * scale;
      const double budget = 0.12 * s / (2 * std::numbers::pi * t.frequency);
      if (t.amplitude.norm() > budget) t.amplitude *= budget / t.amplitude.norm();
      g.displacement.push_back(t);
    }
  } else if (d == Difficulty::Sharp) {
    const int n = std::uniform_int_distribution<int>(2, 3)(rng);
    for (int i = 0; i < n; ++i) {
      DisplacementTerm t;
      t.kind = DisplacementTerm::Kind::Step;
      t.direction = unit(uniform(rng, 0, 2 * std::numbers::pi));
      t.offset = (t.direction.dot(Eigen::Vector2d(c, c))) + uniform(rng, -0.3, 0.3) * res;
      t.width = uniform(rng, 1.5, 3.0) * scale;
      t.amplitude = unit(uniform(rng, 0, 2 * std::numbers::pi)) * std::min(uniform(rng, 1.0, 3.0) * scale, 0.12 * s * t.width);
      g.displacement.push_back(t);
    }
  }
  for (const auto& t : g.displacement) g.max_displacement += t.amplitude.norm();
  return g;
}

void draw_glyph(Raster& img, std::mt19937_64& rng, const Eigen::Vector3d& color) {
  const int w = img.width(), h = img.height();
  const double cx = uniform(rng, 0.1, 0.9) * w, cy = uniform(rng, 0.1, 0.9) * h;
  const double size = uniform(rng, 0.05, 0.18) * std::min(w, h);
  const double stroke = std::max(1.0, size * uniform(rng, 0.08, 0.18));
  const int kind = std::uniform_int_distribution<int>(0, 2)(rng);
  const double a0 = uniform(rng, 0, std::numbers::pi);
  for (int y = std::max(0, static_cast<int>(cy - size - stroke)); y < std::min(h, static_cast<int>(cy + size + stroke) + 1); ++y)
    for (int x = std::max(0, static_cast<int>(cx - size - stroke)); x < std::min(w, static_cast<int>(cx + size + stroke) + 1); ++x) {
      const double dx = x - cx, dy = y - cy;
      bool on = false;
      if (kind == 0) on = std::abs(std::hypot(dx, dy) - size * 0.7) < stroke;  // ring
      else if (kind == 1) {                                                   // cross
        const double u = dx * std::cos(a0) + dy * std::sin(a0), v = -dx * std::sin(a0) + dy * std::cos(a0);
        on = (std::abs(u) < stroke && std::abs(v) < size) || (std::abs(v) < stroke && std::abs(u) < size);
      } else {  // box outline
        const double m = std::max(std::abs(dx), std::abs(dy) * 1.4);
        on = std::abs(m - size * 0.7) < stroke;
      }
      if (on)
        for (int c = 0; c < 3; ++c) img(x, y, c) = static_cast<float>(color[c]);
    }
}

std::vector<fs::path> list_pngs(const fs::path& dir) {
  std::vector<fs::path> files;
  if (dir.empty()) return files;
  if (!fs::is_directory(dir)) throw IoError("source image folder not found: " + dir.string());
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".png") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw IoError("no PNG images in " + dir.string());
  return files;
}

// Cycles through the folder, flipping and rolling on every repeat.
Raster source_image(const std::vector<fs::path>& files, std::uint64_t seed, int index, FrameSize size) {
  if (files.empty()) return procedural_image(mix(seed, static_cast<std::uint64_t>(index)), size);
  const int n = static_cast<int>(files.size());
  const int cycle = index / n;
  Raster img = resample_bilinear(read_png(files[index % n]), size.width, size.height);
  if (img.channels() == 1) {
    Raster rgb(img.width(), img.height(), 3);
    for (int y = 0; y < img.height(); ++y)
      for (int x = 0; x < img.width(); ++x)
        for (int c = 0; c < 3; ++c) rgb(x, y, c) = img(x, y);
    img = std::move(rgb);
  }
  if (cycle == 0) return img;
  Raster out(img.width(), img.height(), 3);
  const int roll = (cycle * 37) % img.width();
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      const int sx = (cycle % 2 ? img.width() - 1 - x : x);
      for (int c = 0; c < 3; ++c) out(x, y, c) = img((sx + roll) % img.width(), y, c);
    }
  return out;
}

const char* kSplits[] = {"train", "val", "test"};

int split_count(const ManifestSetup& s, const std::string& split) {
  if (split == "train") return s.train;
  if (split == "val") return s.val;
  if (split == "test") return s.test;
  throw std::out_of_range("unknown split '" + split + "' (expected train|val|test)");
}

std::string prior_path(int level) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "prior_%03d.png", level);
  return buf;
}

}  // namespace

std::string to_string(Difficulty d) {
  switch (d) {
    case Difficulty::Planar: return "planar";
    case Difficulty::Textured: return "textured";
    case Difficulty::Wavy: return "wavy";
    case Difficulty::Sharp: return "sharp";
  }
  return "planar";
}

Difficulty parse_difficulty(const std::string& s) {
  for (Difficulty d : {Difficulty::Planar, Difficulty::Textured, Difficulty::Wavy, Difficulty::Sharp})
    if (to_string(d) == s) return d;
  throw std::invalid_argument("unknown difficulty '" + s + "'");
}

Raster texture_noise(std::uint64_t seed, FrameSize size, double lo, double hi, double contrast) {
  std::mt19937_64 rng(mix(seed, 0x7e57));
  Raster out(size.width, size.height, 3, 0.0f);
  const int base = std::max(4, std::min(size.width, size.height) / 4);
  for (int c = 0; c < 3; ++c) {
    Raster acc(size.width, size.height, 1, 0.0f);
    double amp = 1.0, total = 0;
    for (int cell = base; cell >= 2; cell /= 2) {
      const Raster n = value_noise(rng, size, cell);
      for (std::size_t i = 0; i < acc.samples().size(); ++i) acc.samples()[i] += static_cast<float>(amp * n.samples()[i]);
      total += amp;
      amp *= 0.55;
    }
    const double tint = uniform(rng, 0.75, 1.0);
    for (int y = 0; y < size.height; ++y)
      for (int x = 0; x < size.width; ++x) {
        const double v = 0.5 + contrast * (acc(x, y) / total - 0.5) * 2.0;
        out(x, y, c) = static_cast<float>(lo + (hi - lo) * std::clamp(v * tint, 0.0, 1.0));
      }
  }
  return out;
}

SetupConfig generate_setup(std::uint64_t seed, Difficulty d, int resolution) {
  if (resolution < 16) throw std::invalid_argument("generate_setup: resolution must be >= 16");
  std::mt19937_64 rng(mix(seed, 0x5e7));
  SetupConfig s;
  s.seed = seed;
  s.camera_size = s.projector_size = {resolution, resolution};
  s.projector_gamma = uniform(rng, 1.8, 2.4);
  s.camera_gamma = uniform(rng, 1.8, 2.4);
  for (int c = 0; c < 3; ++c) s.ambient[c] = uniform(rng, 0.0, 0.15);
  s.mixing.setIdentity();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c)
      if (r != c) s.mixing(r, c) = uniform(rng, 0.0, 0.1);
  s.noise_sigma = uniform(rng, 0.001, 0.005);
  const double contrast = d == Difficulty::Textured ? 1.0 : 0.5;
  s.reflectance = quantize8(texture_noise(mix(seed, 0xaf), s.camera_size, 0.1, 1.0, contrast));
  // Redraw the pose until it validates; draws are seeded so this stays deterministic.
  for (int attempt = 0;; ++attempt) {
    s.geometry = draw_geometry(rng, d, resolution);
    try {
      s.validate();
      return s;
    } catch (const std::invalid_argument&) {
      if (attempt > 200) throw;
    }
  }
}

Raster procedural_image(std::uint64_t seed, FrameSize size) {
  std::mt19937_64 rng(mix(seed, 0x1ae));
  auto color = [&] { return Eigen::Vector3d(uniform(rng, 0, 1), uniform(rng, 0, 1), uniform(rng, 0, 1)); };
  const Eigen::Vector3d c0 = color(), c1 = color(), c2 = color();
  const Eigen::Vector2d dir = unit(uniform(rng, 0, 2 * std::numbers::pi));
  const double period = uniform(rng, 0.06, 0.2) * std::min(size.width, size.height);
  const double checker_alpha = uniform(rng, 0.1, 0.4);
  Raster img(size.width, size.height, 3);
  const double diag = std::hypot(size.width, size.height);
  for (int y = 0; y < size.height; ++y)
    for (int x = 0; x < size.width; ++x) {
      const double t = std::clamp(0.5 + dir.dot(Eigen::Vector2d(x - size.width / 2.0, y - size.height / 2.0)) / diag, 0.0, 1.0);
      Eigen::Vector3d v = (1 - t) * c0 + t * c1;
      const bool odd = (static_cast<int>(std::floor(x / period)) + static_cast<int>(std::floor(y / period))) % 2 != 0;
      if (odd) v = (1 - checker_alpha) * v + checker_alpha * c2;
      for (int c = 0; c < 3; ++c) img(x, y, c) = static_cast<float>(v[c]);
    }
  const int glyphs = std::uniform_int_distribution<int>(3, 8)(rng);
  for (int i = 0; i < glyphs; ++i) draw_glyph(img, rng, color());
  return img;
}

std::string pair_path(const std::string& split, const std::string& side, int index) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s/%s/%03d.png", split.c_str(), side.c_str(), index);
  return buf;
}

std::uint64_t pair_noise_key(const std::string& split, int index) {
  const std::uint64_t base = split == "train" ? 10000 : split == "val" ? 20000 : 30000;
  return base + static_cast<std::uint64_t>(index);
}

Json DatasetManifest::to_json() const {
  Json list = Json::array();
  for (const auto& s : setups)
    list.push_back({{"setup_id", s.id},
                    {"difficulty", s.difficulty},
                    {"setup", s.setup_path},
                    {"priors", s.priors},
                    {"train", s.train},
                    {"val", s.val},
                    {"test", s.test}});
  return Json{{"version", version},
              {"seed", seed},
              {"resolution", resolution},
              {"eval_resolution", eval_resolution},
              {"prior_levels", Json::array({0, 64, 128, 191, 255})},
              {"setups", list}};
}

DatasetManifest DatasetManifest::from_json(const Json& j) {
  DatasetManifest m;
  m.version = j.at("version").get<int>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.resolution = j.at("resolution").get<int>();
  m.eval_resolution = j.at("eval_resolution").get<int>();
  if (j.at("prior_levels") != Json::array({0, 64, 128, 191, 255}))
    throw std::invalid_argument("manifest prior levels must be {0,64,128,191,255}");
  for (const auto& e : j.at("setups"))
    m.setups.push_back({e.at("setup_id").get<std::string>(), e.at("difficulty").get<std::string>(),
                        e.at("setup").get<std::string>(), e.at("priors").get<std::vector<std::string>>(),
                        e.at("train").get<int>(), e.at("val").get<int>(), e.at("test").get<int>()});
  return m;
}

const ManifestSetup& DatasetManifest::find(const std::string& id) const {
  for (const auto& s : setups)
    if (s.id == id) return s;
  throw std::out_of_range("unknown setup id '" + id + "'");
}

void DatasetManifest::validate(const fs::path& root) const {
  for (const auto& s : setups) {
    if (s.train < 1 || s.val < 1 || s.test < 0) throw std::invalid_argument("setup " + s.id + ": pair counts must be >= 1");
    if (s.priors.size() != 5) throw std::invalid_argument("setup " + s.id + ": expected 5 priors");
    std::vector<std::string> files = s.priors;
    files.push_back(s.setup_path + "/setup.json");
    for (const char* split : kSplits)
      for (int i = 0; i < split_count(s, split); ++i)
        for (const char* side : {"prj", "cam"}) files.push_back(s.id + "/" + pair_path(split, side, i));
    for (const auto& f : files)
      if (!fs::is_regular_file(root / f)) throw IoError("manifest references missing file " + (root / f).string());
  }
}

void save_manifest(const fs::path& path, const DatasetManifest& manifest) { write_json(path, manifest.to_json()); }

DatasetManifest load_manifest(const fs::path& path) {
  DatasetManifest m;
  try {
    m = DatasetManifest::from_json(read_json(path));
  } catch (const nlohmann::json::exception& e) {
    throw IoError("corrupt manifest " + path.string() + ": " + e.what());
  }
  m.validate(path.parent_path());
  return m;
}

DatasetManifest build_dataset(const DatasetConfig& cfg, const fs::path& out) {
  if (cfg.n_setups < 1) throw std::invalid_argument("build_dataset: need at least one setup");
  if (cfg.counts.train < 1 || cfg.counts.val < 1 || cfg.counts.test < 0)
    throw std::invalid_argument("build_dataset: train/val counts must be >= 1");
  const auto sources = list_pngs(cfg.source_images);
  fs::create_directories(out);

  DatasetManifest m;
  m.seed = cfg.seed;
  m.resolution = cfg.resolution;
  m.eval_resolution = cfg.eval_resolution;
  m.setups.resize(cfg.n_setups);
  const Difficulty order[] = {Difficulty::Textured, Difficulty::Wavy, Difficulty::Sharp, Difficulty::Planar};

  // One setup per task; each writes only inside its own directory.
  std::vector<std::string> errors(cfg.n_setups);
  auto build_one = [&](int i) {
    try {
      char id[32];
      std::snprintf(id, sizeof id, "setup_%03d", i);
      const Difficulty d = order[i % 4];
      const std::uint64_t seed = mix(cfg.seed, static_cast<std::uint64_t>(i));
      const SetupConfig setup = generate_setup(seed, d, cfg.resolution);
      const fs::path dir = out / id;
      save_setup(dir, setup);
      const ProCamsSimulator sim(setup);
      ManifestSetup entry{id, to_string(d), id, {}, cfg.counts.train, cfg.counts.val, cfg.counts.test};
      for (int level : kPriorLevels) {
        write_png(dir / prior_path(level),
                  sim.render(uniform_image(setup.projector_size, static_cast<float>(level / 255.0)), true,
                             1000 + static_cast<std::uint64_t>(level)));
        entry.priors.push_back(std::string(id) + "/" + prior_path(level));
      }
      const int counts[] = {cfg.counts.train, cfg.counts.val, cfg.counts.test};
      for (int si = 0; si < 3; ++si) {
        const std::string split = kSplits[si];
        if (counts[si] > 0) {
          fs::create_directories(dir / split / "prj");
          fs::create_directories(dir / split / "cam");
        }
        const bool test = split == "test";
        const FrameSize size = test ? FrameSize{cfg.eval_resolution, cfg.eval_resolution} : setup.projector_size;
        for (int k = 0; k < counts[si]; ++k) {
          const int image_index = si * 100000 + k;
          const Raster x = quantize8(source_image(sources, mix(seed, 0x1111), image_index, size));
          const Raster shown = test ? resample_bilinear(x, setup.projector_size.width, setup.projector_size.height) : x;
          write_png(dir / pair_path(split, "prj", k), x);
          write_png(dir / pair_path(split, "cam", k), sim.render(clamp01(shown), true, pair_noise_key(split, k)));
        }
      }
      m.setups[i] = std::move(entry);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  };
  parallel_for(cfg.n_setups, build_one);
  for (const auto& e : errors)
    if (!e.empty()) throw IoError("dataset generation failed: " + e);
  save_manifest(out / "manifest.json", m);
  return m;
}

DatasetPair load_pair(const DatasetManifest& m, const fs::path& root, const std::string& setup_id,
                      const std::string& split, int index) {
  const ManifestSetup& s = m.find(setup_id);
  const int n = split_count(s, split);
  if (index < 0 || index >= n)
    throw std::out_of_range("pair index " + std::to_string(index) + " out of range [0," + std::to_string(n) + ") for " +
                            setup_id + "/" + split);
  DatasetPair p;
  p.x = read_png(root / setup_id / pair_path(split, "prj", index));
  p.x_tilde = read_png(root / setup_id / pair_path(split, "cam", index));
  for (std::size_t i = 0; i < s.priors.size(); ++i) {
    p.priors.levels.push_back(kPriorLevels[i]);
    p.priors.priors.push_back(read_png(root / s.priors[i]));
  }
  return p;
}

}  // namespace procams
