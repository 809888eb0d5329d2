#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "procams/raster.hpp"

namespace procams {

struct MetricsRow {
  std::string setup_id;
  std::string image_id;
  int k = 0;
  std::string method;
  double psnr = 0, rmse = 0, ssim = 0, de00 = 0, clip_frac = 0, ms = 0;
};

/// Parses a metrics CSV (header required). Throws std::invalid_argument on malformed rows.
std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& path);

struct SummaryRow {
  std::string method;
  int k = 0;
  std::size_t n = 0;
  double psnr = 0, rmse = 0, ssim = 0, de00 = 0, clip_frac = 0;
};

/// Means per (method, K), sorted by method then K.
std::vector<SummaryRow> summarize(const std::vector<MetricsRow>& rows);

/// Markdown table of the summary.
std::string summary_table(const std::vector<SummaryRow>& summary);

/// Bar chart with one bar per value, scaled to [0, max]; deterministic for fixed input.
Raster bar_chart(const std::vector<double>& values, int width = 480, int height = 320);

/// Writes summary.md, summary.csv and psnr/ssim/de00 bar charts into `out_dir`.
/// Throws std::invalid_argument if `rows` is empty.
void write_report(const std::vector<MetricsRow>& rows, const std::filesystem::path& out_dir);

}  // namespace procams
