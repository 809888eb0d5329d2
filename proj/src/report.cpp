#include "procams/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <Eigen/Core>

#include "procams/image_io.hpp"

namespace procams {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double to_double(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(what);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("bad value '" + s + "' in column " + what);
  }
}

const Eigen::Vector3d kPalette[] = {{0.12, 0.47, 0.71}, {1.0, 0.5, 0.05}, {0.17, 0.63, 0.17}, {0.84, 0.15, 0.16},
                                    {0.58, 0.40, 0.74}, {0.55, 0.34, 0.29}};

}  // namespace

std::vector<MetricsRow> read_metrics_csv(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw std::invalid_argument("cannot open CSV " + path.string());
  std::string line;
  if (!std::getline(is, line)) return {};
  const auto header = split_csv(line);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  for (const char* need : {"setup_id", "image_id", "K", "method", "psnr", "rmse", "ssim", "de00", "clip_frac", "ms"})
    if (!col.count(need)) throw std::invalid_argument("CSV " + path.string() + " lacks column " + need);
  std::vector<MetricsRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) throw std::invalid_argument("CSV row has " + std::to_string(cells.size()) + " cells: " + line);
    auto get = [&](const char* name) { return cells[col[name]]; };
    MetricsRow r;
    r.setup_id = get("setup_id");
    r.image_id = get("image_id");
    r.k = static_cast<int>(to_double(get("K"), "K"));
    r.method = get("method");
    r.psnr = to_double(get("psnr"), "psnr");
    r.rmse = to_double(get("rmse"), "rmse");
    r.ssim = to_double(get("ssim"), "ssim");
    r.de00 = to_double(get("de00"), "de00");
    r.clip_frac = to_double(get("clip_frac"), "clip_frac");
    r.ms = to_double(get("ms"), "ms");
    rows.push_back(r);
  }
  return rows;
}

std::vector<SummaryRow> summarize(const std::vector<MetricsRow>& rows) {
  std::map<std::pair<std::string, int>, SummaryRow> acc;
  for (const auto& r : rows) {
    auto& s = acc[{r.method, r.k}];
    s.method = r.method;
    s.k = r.k;
    ++s.n;
    s.psnr += r.psnr, s.rmse += r.rmse, s.ssim += r.ssim, s.de00 += r.de00, s.clip_frac += r.clip_frac;
  }
  std::vector<SummaryRow> out;
  for (auto& [key, s] : acc) {
    const double n = static_cast<double>(s.n);
    s.psnr /= n, s.rmse /= n, s.ssim /= n, s.de00 /= n, s.clip_frac /= n;
    out.push_back(s);
  }
  return out;
}

std::string summary_table(const std::vector<SummaryRow>& summary) {
  std::string out = "| method | K | n | PSNR | RMSE | SSIM | dE00 | clip |\n|---|---|---|---|---|---|---|---|\n";
  char buf[256];
  for (const auto& s : summary) {
    std::snprintf(buf, sizeof buf, "| %s | %d | %zu | %.3f | %.4f | %.4f | %.3f | %.4f |\n", s.method.c_str(), s.k, s.n,
                  s.psnr, s.rmse, s.ssim, s.de00, s.clip_frac);
    out += buf;
  }
  return out;
}

Raster bar_chart(const std::vector<double>& values, int width, int height) {
  Raster img(width, height, 3, 1.0f);
  const int margin = 20;
  const int plot_h = height - 2 * margin;
  // Axes.
  for (int x = margin; x < width - margin; ++x)
    for (int c = 0; c < 3; ++c) img(x, height - margin, c) = 0.0f;
  for (int y = margin; y <= height - margin; ++y)
    for (int c = 0; c < 3; ++c) img(margin, y, c) = 0.0f;
  if (values.empty()) return img;
  double top = 0;
  for (double v : values)
    if (std::isfinite(v)) top = std::max(top, v);
  if (top <= 0) top = 1;
  const int n = static_cast<int>(values.size());
  const double slot = static_cast<double>(width - 2 * margin - 2) / n;
  for (int i = 0; i < n; ++i) {
    const double v = std::isfinite(values[i]) ? std::max(0.0, values[i]) : 0.0;
    const int bar_h = static_cast<int>(std::lround(plot_h * v / top));
    const int x0 = margin + 2 + static_cast<int>(i * slot + slot * 0.15);
    const int x1 = margin + 2 + static_cast<int>((i + 1) * slot - slot * 0.15);
    const auto& col = kPalette[i % 6];
    for (int y = height - margin - bar_h; y < height - margin; ++y)
      for (int x = x0; x < std::max(x0 + 1, x1); ++x)
        for (int c = 0; c < 3; ++c) img(x, y, c) = static_cast<float>(col[c]);
  }
  return img;
}

void write_report(const std::vector<MetricsRow>& rows, const fs::path& out) {
  if (rows.empty()) throw std::invalid_argument("report: metrics CSV has no rows");
  fs::create_directories(out);
  const auto summary = summarize(rows);
  {
    std::ofstream md(out / "summary.md");
    md << "# Compensation summary\n\n" << summary_table(summary) << "\nBars in each chart follow the table order.\n";
  }
  {
    std::ofstream csv(out / "summary.csv");
    csv << "method,K,n,psnr,rmse,ssim,de00,clip_frac\n";
    char buf[256];
    for (const auto& s : summary) {
      std::snprintf(buf, sizeof buf, "%s,%d,%zu,%.6f,%.6f,%.6f,%.6f,%.6f\n", s.method.c_str(), s.k, s.n, s.psnr, s.rmse,
                    s.ssim, s.de00, s.clip_frac);
      csv << buf;
    }
  }
  std::vector<double> psnr, ssim, de;
  for (const auto& s : summary) psnr.push_back(s.psnr), ssim.push_back(s.ssim), de.push_back(s.de00);
  write_png(out / "psnr.png", bar_chart(psnr), Transfer::Identity);
  write_png(out / "ssim.png", bar_chart(ssim), Transfer::Identity);
  write_png(out / "de00.png", bar_chart(de), Transfer::Identity);
}

}  // namespace procams
