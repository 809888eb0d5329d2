#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "oracles.hpp"
#include "procams/dataset.hpp"
#include "procams/image_io.hpp"
#include "procams/serialize.hpp"

using namespace procams;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("difficulty names") {
  for (auto d : {Difficulty::Planar, Difficulty::Textured, Difficulty::Wavy, Difficulty::Sharp})
    CHECK(parse_difficulty(to_string(d)) == d);
  CHECK_THROWS_AS(parse_difficulty("bumpy"), std::invalid_argument);
}

TEST_CASE("setup generation is deterministic and valid") {
  const SetupConfig a = generate_setup(17, Difficulty::Sharp, 96);
  const SetupConfig b = generate_setup(17, Difficulty::Sharp, 96);
  CHECK(setup_to_json(a).dump() == setup_to_json(b).dump());
  CHECK(a == b);
  CHECK_FALSE(setup_to_json(generate_setup(18, Difficulty::Sharp, 96)).dump() == setup_to_json(a).dump());

  const SetupConfig planar = generate_setup(3, Difficulty::Planar, 64);
  CHECK(planar.geometry.displacement.empty());

  const Difficulty kinds[] = {Difficulty::Planar, Difficulty::Textured, Difficulty::Wavy, Difficulty::Sharp};
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const SetupConfig s = generate_setup(seed, kinds[seed % 4], 64);
    CHECK_NOTHROW(s.validate());
    CHECK((s.projector_gamma >= 1.8 && s.projector_gamma <= 2.4));
    CHECK((s.camera_gamma >= 1.8 && s.camera_gamma <= 2.4));
    CHECK((s.ambient.minCoeff() >= 0 && s.ambient.maxCoeff() <= 0.15));
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c)
        CHECK((r == c ? s.mixing(r, c) == 1.0 : (s.mixing(r, c) >= 0 && s.mixing(r, c) <= 0.1)));
    const auto [lo, hi] = std::minmax_element(s.reflectance.samples().begin(), s.reflectance.samples().end());
    CHECK(*lo >= 0.1f - 1e-3f);
    CHECK(*hi <= 1.0f);
  }
}

TEST_CASE("setup json round trip") {
  const TempDir tmp("procams_test_setup");
  const SetupConfig s = generate_setup(9, Difficulty::Wavy, 48);
  save_setup(tmp.path, s);
  CHECK(load_setup(tmp.path) == s);
}

TEST_CASE("dataset layout, manifest and pairs") {
  const TempDir tmp("procams_test_dataset");
  DatasetConfig cfg;
  cfg.n_setups = 1;
  cfg.counts = {2, 1, 0};
  cfg.resolution = 48;
  cfg.eval_resolution = 64;
  cfg.seed = 5;
  const DatasetManifest m = build_dataset(cfg, tmp.path);
  REQUIRE(m.setups.size() == 1);
  const std::string id = m.setups[0].id;

  // 5 priors + 2 train pairs + 1 val pair, plus the stored reflectance map.
  CHECK(oracle::count_files(tmp.path, ".png") == 5 + 2 * 2 + 1 * 2 + 1);
  CHECK(fs::is_regular_file(tmp.path / "manifest.json"));
  CHECK(fs::is_regular_file(tmp.path / id / "setup.json"));

  const DatasetManifest loaded = load_manifest(tmp.path / "manifest.json");
  save_manifest(tmp.path / "again.json", loaded);
  CHECK(slurp(tmp.path / "again.json") == slurp(tmp.path / "manifest.json"));

  const DatasetPair p = load_pair(loaded, tmp.path, id, "train", 1);
  CHECK(p.x.width() == 48);
  CHECK(p.x_tilde.height() == 48);
  CHECK(p.priors.k() == 5);
  const SetupConfig st = load_setup(tmp.path / loaded.setups[0].setup_path);
  CHECK(p.x_tilde == quantize8(render_capture(p.x, st, true, pair_noise_key("train", 1))));

  CHECK_THROWS_AS(load_pair(loaded, tmp.path, id, "train", 2), std::out_of_range);
  CHECK_THROWS_AS(load_pair(loaded, tmp.path, id, "test", 0), std::out_of_range);
  CHECK_THROWS_AS(load_pair(loaded, tmp.path, "nope", "train", 0), std::out_of_range);
  CHECK_THROWS_AS(load_pair(loaded, tmp.path, id, "holdout", 0), std::out_of_range);

  fs::remove(tmp.path / id / pair_path("val", "cam", 0));
  CHECK_THROWS_AS(load_manifest(tmp.path / "manifest.json"), IoError);
}

TEST_CASE("procedural content") {
  const Raster a = procedural_image(4, {40, 30});
  CHECK(a == procedural_image(4, {40, 30}));
  CHECK(a.is_normalized());
  CHECK_FALSE(a == procedural_image(5, {40, 30}));
}
