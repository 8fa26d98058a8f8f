#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "prelabel/geometry.hpp"

namespace prelabel {

using Rgb = std::array<std::uint8_t, 3>;

/// Decoded 8-bit RGB raster plus the encoded bytes it came from.
struct Image {
  std::string name;
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;
  std::string encoded;

  Rgb pixel(int x, int y) const {
    const std::size_t i = (static_cast<std::size_t>(y) * width + x) * 3;
    return {rgb[i], rgb[i + 1], rgb[i + 2]};
  }
  void set_pixel(int x, int y, Rgb c) {
    const std::size_t i = (static_cast<std::size_t>(y) * width + x) * 3;
    rgb[i] = c[0];
    rgb[i + 1] = c[1];
    rgb[i + 2] = c[2];
  }
  BBox bounds() const { return {0, 0, static_cast<double>(width), static_cast<double>(height)}; }
};

struct ImageSize {
  int width = 0;
  int height = 0;
};

/// Decodes binary PNM (P5/P6, maxval 255) or PNG. Throws InputError when the
/// bytes are not a complete image.
Image decode_image(std::string bytes, std::string name = {});
Image load_image(const std::filesystem::path& path);

/// Reads only the header; a file with a valid header but a truncated body
/// still probes successfully.
ImageSize probe_image_size(const std::filesystem::path& path);

bool is_image_file(const std::filesystem::path& path);

std::string encode_ppm(const Image& image);
void write_file(const std::filesystem::path& path, std::string_view bytes);
std::string read_file(const std::filesystem::path& path);

/// FNV-1a over dimensions and pixels; identifies image content independent
/// of its file name or container format.
std::uint64_t content_hash(const Image& image);

BBox clip_box(const BBox& box, int width, int height);

}  // namespace prelabel
