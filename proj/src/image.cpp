#include "prelabel/image.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cstring>
#include <fstream>
#include <sstream>

#include "prelabel/errors.hpp"
#include "prelabel/text.hpp"

namespace prelabel {
namespace {

constexpr std::string_view kPngSignature{"\x89PNG\r\n\x1a\n", 8};

struct PnmHeader {
  int channels = 0;
  int width = 0;
  int height = 0;
  int maxval = 0;
  std::size_t data_offset = 0;
};

PnmHeader parse_pnm_header(std::string_view bytes, std::string_view name) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
    throw InputError("unsupported image format: " + std::string(name));
  }
  PnmHeader h;
  h.channels = bytes[1] == '6' ? 3 : 1;
  std::size_t pos = 2;
  int fields[3] = {0, 0, 0};
  for (int& field : fields) {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
    const std::size_t start = pos;
    while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
      field = field * 10 + (bytes[pos] - '0');
      if (field > 1 << 20) throw InputError("image header out of range: " + std::string(name));
      ++pos;
    }
    if (pos == start) throw InputError("malformed PNM header: " + std::string(name));
  }
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
    throw InputError("malformed PNM header: " + std::string(name));
  }
  h.width = fields[0];
  h.height = fields[1];
  h.maxval = fields[2];
  h.data_offset = pos + 1;
  if (h.width < 1 || h.height < 1 || h.maxval < 1 || h.maxval > 255) {
    throw InputError("unsupported PNM dimensions or depth: " + std::string(name));
  }
  return h;
}

Image decode_pnm(std::string bytes, std::string name) {
  const PnmHeader h = parse_pnm_header(bytes, name);
  const std::size_t need = static_cast<std::size_t>(h.width) * h.height * h.channels;
  if (bytes.size() - h.data_offset < need) throw InputError("truncated image data: " + name);
  Image img;
  img.name = std::move(name);
  img.width = h.width;
  img.height = h.height;
  img.rgb.resize(static_cast<std::size_t>(h.width) * h.height * 3);
  const auto* src = reinterpret_cast<const std::uint8_t*>(bytes.data() + h.data_offset);
  for (std::size_t i = 0, n = static_cast<std::size_t>(h.width) * h.height; i < n; ++i) {
    for (int c = 0; c < 3; ++c) {
      const std::uint8_t v = src[i * h.channels + (h.channels == 3 ? c : 0)];
      img.rgb[i * 3 + c] = static_cast<std::uint8_t>(v * 255 / h.maxval);
    }
  }
  img.encoded = std::move(bytes);
  return img;
}

Image decode_png(std::string bytes, std::string name) {
  png_image png;
  std::memset(&png, 0, sizeof png);
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&png, bytes.data(), bytes.size())) {
    throw InputError("undecodable PNG " + name + ": " + png.message);
  }
  png.format = PNG_FORMAT_RGB;
  Image img;
  img.name = std::move(name);
  img.width = static_cast<int>(png.width);
  img.height = static_cast<int>(png.height);
  img.rgb.resize(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, img.rgb.data(), 0, nullptr)) {
    const std::string msg = png.message;
    png_image_free(&png);
    throw InputError("undecodable PNG " + img.name + ": " + msg);
  }
  img.encoded = std::move(bytes);
  return img;
}

}  // namespace

Image decode_image(std::string bytes, std::string name) {
  if (std::string_view(bytes).starts_with(kPngSignature)) {
    return decode_png(std::move(bytes), std::move(name));
  }
  return decode_pnm(std::move(bytes), std::move(name));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

Image load_image(const std::filesystem::path& path) {
  return decode_image(read_file(path), path.filename().string());
}

ImageSize probe_image_size(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::string head(512, '\0');
  in.read(head.data(), static_cast<std::streamsize>(head.size()));
  head.resize(static_cast<std::size_t>(in.gcount()));
  if (std::string_view(head).starts_with(kPngSignature)) {
    // IHDR is always the first chunk: width and height are big-endian u32s.
    if (head.size() < 24) throw InputError("truncated PNG header: " + path.string());
    auto be32 = [&](std::size_t off) {
      std::uint32_t v = 0;
      for (std::size_t i = 0; i < 4; ++i) v = (v << 8) | static_cast<std::uint8_t>(head[off + i]);
      return v;
    };
    const auto w = be32(16);
    const auto h = be32(20);
    if (w < 1 || h < 1 || w > (1u << 20) || h > (1u << 20)) {
      throw InputError("invalid PNG dimensions: " + path.string());
    }
    return {static_cast<int>(w), static_cast<int>(h)};
  }
  const PnmHeader h = parse_pnm_header(head, path.string());
  return {h.width, h.height};
}

bool is_image_file(const std::filesystem::path& path) {
  const std::string ext = to_lower(path.extension().string());
  return ext == ".png" || ext == ".ppm" || ext == ".pgm" || ext == ".pnm";
}

std::string encode_ppm(const Image& image) {
  std::string out = "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) +
                    "\n255\n";
  out.append(reinterpret_cast<const char*>(image.rgb.data()), image.rgb.size());
  return out;
}

std::uint64_t content_hash(const Image& image) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](std::uint8_t b) {
    h ^= b;
    h *= 1099511628211ull;
  };
  for (int v : {image.width, image.height}) {
    for (int i = 0; i < 4; ++i) mix(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  for (std::uint8_t b : image.rgb) mix(b);
  return h;
}

BBox clip_box(const BBox& box, int width, int height) {
  const double w = width;
  const double h = height;
  BBox c{std::clamp(box.x1, 0.0, w), std::clamp(box.y1, 0.0, h), std::clamp(box.x2, 0.0, w),
         std::clamp(box.y2, 0.0, h)};
  c.x2 = std::max(c.x1, c.x2);
  c.y2 = std::max(c.y1, c.y2);
  return c;
}

}  // namespace prelabel
