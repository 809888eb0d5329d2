#include "procams/image_io.hpp"

#include <png.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>

#include "procams/color.hpp"

namespace procams {

namespace {

using FilePtr = std::unique_ptr<std::FILE, int (*)(std::FILE*)>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode), &std::fclose);
  if (!f) throw IoError("cannot open " + path.string());
  return f;
}

const std::array<float, 256>& srgb_decode_table() {
  static const std::array<float, 256> table = [] {
    std::array<float, 256> t{};
    for (int i = 0; i < 256; ++i) t[i] = static_cast<float>(srgb_to_linear(i / 255.0));
    return t;
  }();
  return table;
}

}  // namespace

std::uint8_t encode8(float linear, Transfer transfer) {
  double v = std::clamp(static_cast<double>(linear), 0.0, 1.0);
  if (std::isnan(linear)) v = 0.0;
  if (transfer == Transfer::SRGB) v = linear_to_srgb(v);
  return static_cast<std::uint8_t>(std::lround(v * 255.0));
}

float decode8(std::uint8_t code, Transfer transfer) {
  if (transfer == Transfer::SRGB) return srgb_decode_table()[code];
  return static_cast<float>(code / 255.0);
}

Raster quantize8(const Raster& img, Transfer transfer) {
  Raster out = img;
  for (auto& v : out.samples()) v = decode8(encode8(v, transfer), transfer);
  return out;
}

void write_png(const std::filesystem::path& path, const Raster& img, Transfer transfer) {
  if (img.channels() != 1 && img.channels() != 3)
    throw IoError("write_png supports 1 or 3 channels: " + path.string());
  auto file = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng init failed for " + path.string());
  }
  std::vector<std::uint8_t> row(static_cast<std::size_t>(img.width()) * img.channels());
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng write failed for " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, img.width(), img.height(), 8,
               img.channels() == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x)
      for (int c = 0; c < img.channels(); ++c)
        row[static_cast<std::size_t>(x) * img.channels() + c] = encode8(img(x, y, c), transfer);
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Raster read_png(const std::filesystem::path& path, Transfer transfer) {
  auto file = open_file(path, "rb");
  std::uint8_t sig[8];
  if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8))
    throw IoError("not a PNG file: " + path.string());
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("libpng init failed for " + path.string());
  }
  Raster out;
  std::vector<std::uint8_t> row;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("corrupt PNG: " + path.string());
  }
  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  const int color = png_get_color_type(png, info);
  if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);
  const int width = static_cast<int>(png_get_image_width(png, info));
  const int height = static_cast<int>(png_get_image_height(png, info));
  const int channels = png_get_channels(png, info);
  out = Raster(width, height, channels);
  row.resize(png_get_rowbytes(png, info));
  for (int y = 0; y < height; ++y) {
    png_read_row(png, row.data(), nullptr);
    for (int x = 0; x < width; ++x)
      for (int c = 0; c < channels; ++c)
        out(x, y, c) = decode8(row[static_cast<std::size_t>(x) * channels + c], transfer);
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

void write_pfm(const std::filesystem::path& path, const Raster& img) {
  if (img.channels() != 1 && img.channels() != 3)
    throw IoError("write_pfm supports 1 or 3 channels: " + path.string());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string());
  os << (img.channels() == 3 ? "PF" : "Pf") << "\n" << img.width() << " " << img.height() << "\n-1.0\n";
  // Rows are stored bottom to top.
  for (int y = img.height() - 1; y >= 0; --y)
    os.write(reinterpret_cast<const char*>(img.data() + static_cast<std::size_t>(y) * img.width() * img.channels()),
             static_cast<std::streamsize>(sizeof(float)) * img.width() * img.channels());
  if (!os) throw IoError("write failed: " + path.string());
}

Raster read_pfm(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  std::string magic;
  int width = 0, height = 0;
  double scale = 0;
  is >> magic >> width >> height >> scale;
  if (!is || (magic != "PF" && magic != "Pf") || width < 1 || height < 1)
    throw IoError("malformed PFM header: " + path.string());
  if (scale > 0) throw IoError("big-endian PFM not supported: " + path.string());
  is.get();
  Raster out(width, height, magic == "PF" ? 3 : 1);
  for (int y = height - 1; y >= 0; --y)
    is.read(reinterpret_cast<char*>(&out(0, y, 0)),
            static_cast<std::streamsize>(sizeof(float)) * width * out.channels());
  if (!is) throw IoError("truncated PFM: " + path.string());
  return out;
}

}  // namespace procams
