#include "procams/cli.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "procams/dataset.hpp"
#include "procams/image_io.hpp"
#include "procams/parallel.hpp"
#include "procams/pipeline.hpp"
#include "procams/report.hpp"
#include "procams/resample.hpp"
#include "procams/serialize.hpp"

namespace procams {

namespace fs = std::filesystem;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

constexpr const char* kVersion = "1";

void write_run_json(const fs::path& dir, const std::string& command, const std::vector<std::string>& args,
                    const Json& params) {
  fs::create_directories(dir);
  write_json(dir / "run.json", Json{{"version", kVersion}, {"command", command}, {"argv", args}, {"params", params}});
}

std::string resolved(const fs::path& p) { return p.empty() ? std::string() : fs::absolute(p).lexically_normal().string(); }

Raster load_rgb(const fs::path& path) {
  Raster img = read_png(path);
  if (img.channels() == 3) return img;
  Raster rgb(img.width(), img.height(), 3);
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      for (int c = 0; c < 3; ++c) rgb(x, y, c) = img(x, y);
  return rgb;
}

std::vector<int> parse_k_list(const std::string& s) {
  std::vector<int> ks;
  std::stringstream is(s);
  std::string item;
  while (std::getline(is, item, ',')) {
    try {
      ks.push_back(std::stoi(item));
    } catch (const std::exception&) {
      throw UsageError("bad K list '" + s + "'");
    }
    prior_levels_for(ks.back());
  }
  if (ks.empty()) throw UsageError("empty K list");
  return ks;
}

// Frame of the true camera->projector correspondence, restricted to the bundle crop.
EndPointError oracle_epe(const CalibrationBundle& b, const SetupConfig& setup) {
  const FlowField truth = true_cell_flow(setup);
  EndPointError e;
  double sum = 0;
  for (int y = 0; y < b.crop.h; ++y)
    for (int x = 0; x < b.crop.w; ++x) {
      if (!b.crop_mask(x, y) || !truth.valid(b.crop.x + x, b.crop.y + y) || !b.flow_back.valid(x, y)) continue;
      const Eigen::Vector2d t = truth.source(b.crop.x + x, b.crop.y + y);
      const double d = (b.flow_back.source(x, y) - t).norm();
      sum += d;
      e.max = std::max(e.max, d);
      ++e.count;
    }
  e.mean = e.count ? sum / static_cast<double>(e.count) : 0.0;
  return e;
}

int cmd_gen_dataset(const DatasetConfig& cfg, const fs::path& out, const std::vector<std::string>& argv) {
  if (cfg.n_setups < 1) throw UsageError("--setups must be >= 1");
  if (cfg.counts.train < 1 || cfg.counts.val < 1) throw UsageError("--train and --val must be >= 1");
  if (cfg.counts.test < 0) throw UsageError("--test must be >= 0");
  if (cfg.resolution < 16 || cfg.eval_resolution < 16) throw UsageError("--res and --eval-res must be >= 16");
  const DatasetManifest m = build_dataset(cfg, out);
  write_run_json(out, "gen-dataset", argv,
                 {{"setups", cfg.n_setups}, {"seed", cfg.seed}, {"train", cfg.counts.train}, {"val", cfg.counts.val},
                  {"test", cfg.counts.test}, {"res", cfg.resolution}, {"eval_res", cfg.eval_resolution},
                  {"source", resolved(cfg.source_images)}, {"out", resolved(out)}});
  std::printf("%-10s %-9s %6s %6s %8s %7s\n", "setup", "kind", "gam_p", "gam_c", "ambient", "noise");
  for (const auto& s : m.setups) {
    const SetupConfig setup = load_setup(out / s.setup_path);
    std::printf("%-10s %-9s %6.3f %6.3f %8.4f %7.4f\n", s.id.c_str(), s.difficulty.c_str(), setup.projector_gamma,
                setup.camera_gamma, setup.ambient.mean(), setup.noise_sigma);
  }
  std::printf("wrote %zu setups to %s\n", m.setups.size(), out.string().c_str());
  return kExitOk;
}

int cmd_calibrate(const fs::path& dataset, const std::string& setup_id, const std::string& method, int k,
                  bool chromatic, const fs::path& out, const std::vector<std::string>& argv) {
  CalibrationOptions opt;
  try {
    opt.method = parse_method(method);
    prior_levels_for(k);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  opt.k = k;
  opt.chromatic = chromatic;
  const DatasetManifest m = load_manifest(dataset / "manifest.json");
  const ManifestSetup* entry = nullptr;
  try {
    entry = &m.find(setup_id);
  } catch (const std::out_of_range& e) {
    throw UsageError(e.what());
  }
  const SetupConfig setup = load_setup(dataset / entry->setup_path);
  const CalibrationBundle b = calibrate(setup, opt);
  save_bundle(out, b);
  save_setup(out / "setup", setup);
  const EndPointError epe = oracle_epe(b, setup);
  write_json(out / "calibration.json", Json{{"setup_id", setup_id},
                                            {"method", method},
                                            {"k", k},
                                            {"crop", {b.crop.x, b.crop.y, b.crop.w, b.crop.h}},
                                            {"inscribed", {b.inscribed.x, b.inscribed.y, b.inscribed.w, b.inscribed.h}},
                                            {"oracle_epe_mean", epe.mean},
                                            {"oracle_epe_max", epe.max},
                                            {"oracle_pixels", epe.count}});
  write_run_json(out, "calibrate", argv,
                 {{"dataset", resolved(dataset)}, {"setup", setup_id}, {"method", method}, {"k", k},
                  {"chromatic", chromatic}, {"out", resolved(out)}});
  std::printf("calibrated %s with %s, K=%d: crop %dx%d at (%d,%d), inscribed %dx%d, EPE vs oracle %.4f px (max %.4f)\n",
              setup_id.c_str(), method.c_str(), k, b.crop.w, b.crop.h, b.crop.x, b.crop.y, b.inscribed.w, b.inscribed.h,
              epe.mean, epe.max);
  return kExitOk;
}

int cmd_compensate(const fs::path& bundle_dir, const fs::path& image, bool simulate, const fs::path& out,
                   const std::vector<std::string>& argv) {
  if (!fs::is_regular_file(bundle_dir / "bundle.json")) throw UsageError("missing bundle file " + (bundle_dir / "bundle.json").string());
  if (!fs::is_regular_file(image)) throw UsageError("missing image " + image.string());
  const CalibrationBundle b = load_bundle(bundle_dir);
  const Raster x = resample_bilinear(load_rgb(image), b.projector.width, b.projector.height);
  fs::create_directories(out);
  std::ofstream csv(out / "metrics.csv");
  csv << metrics_csv_header() << "\n";
  const std::string setup_id = bundle_dir.filename().empty() ? bundle_dir.parent_path().filename().string()
                                                             : bundle_dir.filename().string();
  const std::string image_id = image.stem().string();
  if (simulate) {
    if (!fs::is_regular_file(bundle_dir / "setup" / "setup.json"))
      throw UsageError("--simulate needs the setup stored with the bundle (" + (bundle_dir / "setup").string() + ")");
    const SetupConfig setup = load_setup(bundle_dir / "setup");
    const EvaluationResult e = evaluate_real(x, b, setup);
    write_png(out / "drive.png", e.compensation.drive);
    write_png(out / "predicted.png", e.compensation.predicted_capture);
    write_png(out / "desired.png", e.compensation.desired);
    write_png(out / "captured_compensated.png", e.compensated_capture);
    write_png(out / "captured_uncompensated.png", e.uncompensated_capture);
    csv << to_csv_row({setup_id, image_id, b.k, to_string(b.provenance), e.compensated, e.compensation.clip_fraction,
                       e.compensation.wall_ms})
        << "\n"
        << to_csv_row({setup_id, image_id, b.k, "uncompensated", e.uncompensated, 0.0, 0.0}) << "\n";
    std::printf("compensated PSNR %.3f dB (uncompensated %.3f), dE00 %.3f (uncompensated %.3f), clip %.4f\n",
                e.compensated.psnr, e.uncompensated.psnr, e.compensated.de00, e.uncompensated.de00,
                e.compensation.clip_fraction);
  } else {
    const CompensationResult r = compensate(x, b);
    write_png(out / "drive.png", r.drive);
    write_png(out / "predicted.png", r.predicted_capture);
    write_png(out / "desired.png", r.desired);
    csv << to_csv_row({setup_id, image_id, b.k, "predicted", r.metrics, r.clip_fraction, r.wall_ms}) << "\n";
    std::printf("predicted PSNR %.3f dB, dE00 %.3f, clip %.4f\n", r.metrics.psnr, r.metrics.de00, r.clip_fraction);
  }
  write_run_json(out, "compensate", argv,
                 {{"bundle", resolved(bundle_dir)}, {"image", resolved(image)}, {"simulate", simulate}, {"out", resolved(out)}});
  return kExitOk;
}

int cmd_ablate(const fs::path& dataset, const fs::path& csv_path, const std::string& method, const std::string& k_list,
               int max_images, const std::vector<std::string>& argv) {
  const std::vector<int> ks = parse_k_list(k_list);
  CalibrationOptions opt;
  try {
    opt.method = parse_method(method);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const DatasetManifest m = load_manifest(dataset / "manifest.json");
  if (m.setups.empty()) throw UsageError("dataset has no setups");
  std::vector<AblationSetup> setups;
  for (const auto& s : m.setups) {
    AblationSetup a{s.id, load_setup(dataset / s.setup_path), {}};
    const int n = max_images > 0 ? std::min(max_images, s.test) : s.test;
    for (int i = 0; i < n; ++i) a.images.push_back(load_rgb(dataset / s.id / pair_path("test", "prj", i)));
    if (a.images.empty())
      for (int i = 0; i < std::max(1, max_images > 0 ? max_images : 5); ++i)
        a.images.push_back(procedural_image(m.seed * 1000 + static_cast<std::uint64_t>(i), a.setup.projector_size));
    setups.push_back(std::move(a));
  }
  const AblationTable t = ablate_priors(setups, ks, {}, opt);
  if (csv_path.has_parent_path()) fs::create_directories(csv_path.parent_path());
  {
    std::ofstream csv(csv_path);
    if (!csv) throw IoError("cannot write " + csv_path.string());
    csv << metrics_csv_header() << "\n";
    for (const auto& r : t.rows) csv << to_csv_row(r) << "\n";
  }
  write_run_json(csv_path.has_parent_path() ? csv_path.parent_path() : fs::path("."), "ablate", argv,
                 {{"dataset", resolved(dataset)}, {"out", resolved(csv_path)}, {"method", method}, {"k", ks},
                  {"images", max_images}});
  std::printf("%4s %10s %8s %8s %8s\n", "K", "PSNR", "RMSE", "SSIM", "dE00");
  for (const auto& s : t.summary) std::printf("%4d %10.3f %8.4f %8.4f %8.3f\n", s.k, s.psnr, s.rmse, s.ssim, s.de00);
  std::printf("ordering K ascending strictly improves PSNR: %s\n", t.ordering_holds() ? "yes" : "no");
  return kExitOk;
}

int cmd_report(const fs::path& csv, const fs::path& out, const std::vector<std::string>& argv) {
  if (!fs::is_regular_file(csv)) throw UsageError("missing CSV " + csv.string());
  std::vector<MetricsRow> rows;
  try {
    rows = read_metrics_csv(csv);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (rows.empty()) throw UsageError("CSV " + csv.string() + " has no rows");
  write_report(rows, out);
  write_run_json(out, "report", argv, {{"csv", resolved(csv)}, {"out", resolved(out)}});
  std::cout << summary_table(summarize(rows));
  return kExitOk;
}

int dispatch(const std::vector<std::string>& args);

int cmd_replay(const fs::path& run, const std::string& out_override) {
  const Json j = read_json(run);
  std::vector<std::string> argv = j.at("argv").get<std::vector<std::string>>();
  if (!out_override.empty()) {
    bool replaced = false;
    for (std::size_t i = 0; i + 1 < argv.size(); ++i)
      if (argv[i] == "--out") argv[i + 1] = out_override, replaced = true;
    if (!replaced) throw UsageError("run.json has no --out to override");
  }
  if (!argv.empty() && argv.front() == "replay") throw UsageError("run.json cannot replay a replay");
  return dispatch(argv);
}

int dispatch(const std::vector<std::string>& args) {
  CLI::App app{"Projector-camera compensation toolkit", "procams"};
  app.require_subcommand(1);

  DatasetConfig gen;
  fs::path gen_out;
  auto* g = app.add_subcommand("gen-dataset", "generate a synthetic projector-camera dataset");
  g->add_option("--setups", gen.n_setups, "number of setups")->capture_default_str();
  g->add_option("--seed", gen.seed, "global seed")->capture_default_str();
  g->add_option("--out", gen_out, "output directory")->required();
  g->add_option("--train", gen.counts.train, "training pairs per setup")->capture_default_str();
  g->add_option("--val", gen.counts.val, "validation pairs per setup")->capture_default_str();
  g->add_option("--test", gen.counts.test, "test images per setup")->capture_default_str();
  g->add_option("--res", gen.resolution, "camera and projector resolution")->capture_default_str();
  g->add_option("--eval-res", gen.eval_resolution, "test image resolution")->capture_default_str();
  g->add_option("--source", gen.source_images, "folder of PNG source images (default: procedural)");

  fs::path cal_dataset, cal_out;
  std::string cal_setup, cal_method = "graycode";
  int cal_k = 5;
  bool cal_chromatic = false;
  auto* c = app.add_subcommand("calibrate", "estimate a calibration bundle for one setup");
  c->add_option("--dataset", cal_dataset, "dataset directory")->required();
  c->add_option("--setup", cal_setup, "setup id")->required();
  c->add_option("--method", cal_method, "graycode|flow")->capture_default_str();
  c->add_option("--k", cal_k, "surface prior count 1|3|5")->capture_default_str();
  c->add_option("--out", cal_out, "bundle directory")->required();
  c->add_flag("--chromatic", cal_chromatic, "estimate global channel mixing");

  fs::path comp_bundle, comp_image, comp_out;
  bool comp_simulate = false;
  auto* p = app.add_subcommand("compensate", "compute the compensation image for one input");
  p->add_option("--bundle", comp_bundle, "bundle directory")->required();
  p->add_option("--image", comp_image, "input PNG")->required();
  p->add_flag("--simulate", comp_simulate, "project through the stored setup and score the capture");
  p->add_option("--out", comp_out, "output directory")->required();

  fs::path abl_dataset, abl_csv;
  std::string abl_method = "graycode", abl_k = "1,3,5";
  int abl_images = 0;
  auto* a = app.add_subcommand("ablate", "surface prior count ablation over a dataset");
  a->add_option("--dataset", abl_dataset, "dataset directory")->required();
  a->add_option("--out", abl_csv, "output CSV")->required();
  a->add_option("--method", abl_method, "graycode|flow")->capture_default_str();
  a->add_option("--k", abl_k, "comma separated prior counts")->capture_default_str();
  a->add_option("--images", abl_images, "test images per setup (0: all)")->capture_default_str();

  fs::path rep_csv, rep_out;
  auto* r = app.add_subcommand("report", "summary tables and bar charts from a metrics CSV");
  r->add_option("--csv", rep_csv, "metrics CSV")->required();
  r->add_option("--out", rep_out, "output directory")->required();

  fs::path replay_run;
  std::string replay_out;
  auto* rp = app.add_subcommand("replay", "re-run a command from its run.json");
  rp->add_option("--run", replay_run, "run.json path")->required();
  rp->add_option("--out", replay_out, "override the recorded output location");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  if (*g) return cmd_gen_dataset(gen, gen_out, args);
  if (*c) return cmd_calibrate(cal_dataset, cal_setup, cal_method, cal_k, cal_chromatic, cal_out, args);
  if (*p) return cmd_compensate(comp_bundle, comp_image, comp_simulate, comp_out, args);
  if (*a) return cmd_ablate(abl_dataset, abl_csv, abl_method, abl_k, abl_images, args);
  if (*r) return cmd_report(rep_csv, rep_out, args);
  return cmd_replay(replay_run, replay_out);
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  try {
    return dispatch(args);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::out_of_range& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}

int run_cli(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args);
}

}  // namespace procams
