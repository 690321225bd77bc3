#pragma once

#include "tpsgeom/geometry.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tpsgeom {

/// Maps image coordinates onto a raster: raster = (image - origin) * scale.
/// Raster cell (c, r) has its centre at raster coordinate (c, r).
struct RasterFrame {
  Point origin{};
  double scale = 1.0;

  Point to_raster(Point p) const { return {(p.x - origin.x) * scale, (p.y - origin.y) * scale}; }
  Point to_image(Point q) const { return {origin.x + q.x / scale, origin.y + q.y / scale}; }
};

/// Row-major single-channel image with values in [0, 1].
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<double> values;
  RasterFrame frame;

  double at(int c, int r) const { return values[static_cast<std::size_t>(r) * width + c]; }
};

/// 8-bit quantization used by every export path: round(v * 255), clamped.
std::vector<std::uint8_t> quantize(const GrayImage& img);

/// Binary P5 PGM, maxval 255.
std::string encode_pgm(const GrayImage& img);
/// Parses a P5 PGM with maxval 255; values are returned divided by 255.
GrayImage decode_pgm(std::string_view bytes);

/// Grayscale 8-bit PNG (filter 0 on every row).
std::vector<std::uint8_t> encode_png_gray(int width, int height, std::span<const std::uint8_t> pixels);

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(std::string_view text);

/// Writes through a temporary sibling file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

}  // namespace tpsgeom
