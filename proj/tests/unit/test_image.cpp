#include <doctest.h>
#include <png.h>

#include "prelabel/errors.hpp"
#include "prelabel/image.hpp"
#include "prelabel/text.hpp"
#include "support.hpp"

using namespace prelabel;

namespace {

std::string png_of(const Image& img) {
  png_image info{};
  info.version = PNG_IMAGE_VERSION;
  info.width = static_cast<png_uint_32>(img.width);
  info.height = static_cast<png_uint_32>(img.height);
  info.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  REQUIRE(png_image_write_to_memory(&info, nullptr, &size, 0, img.rgb.data(), 0, nullptr));
  std::string out(size, '\0');
  REQUIRE(png_image_write_to_memory(&info, out.data(), &size, 0, img.rgb.data(), 0, nullptr));
  out.resize(size);
  return out;
}

}  // namespace

TEST_CASE("labels normalize to one canonical form") {
  CHECK(normalize_label("  Traffic   Light. ") == "traffic light");
  CHECK(normalize_label("CAT") == "cat");
  CHECK(normalize_label("dog!?") == "dog");
  CHECK(normalize_label(" \t ") == "");
  CHECK(normalize_label(normalize_label("Fire  Hydrant,")) == normalize_label("Fire  Hydrant,"));
}

TEST_CASE("file stems and splitting") {
  CHECK(file_stem("a/b/Img.01.JPG") == "Img.01");
  CHECK(file_stem("plain") == "plain");
  CHECK(split("a,,b", ',') == std::vector<std::string>{"a", "", "b"});
}

TEST_CASE("ppm and png decode to the same pixels") {
  const Image src = testing::planted_image(17, 11, {{2, {3, 2, 9, 8}}});
  const Image from_ppm = decode_image(src.encoded, "a.ppm");
  const Image from_png = decode_image(png_of(src), "a.png");
  CHECK(from_ppm.width == 17);
  CHECK(from_ppm.rgb == src.rgb);
  CHECK(from_png.rgb == src.rgb);
  CHECK(content_hash(from_ppm) == content_hash(from_png));
  CHECK(from_ppm.pixel(4, 4) == class_color(2));
}

TEST_CASE("broken images are rejected but still probe") {
  testing::TempDir dir;
  const std::string truncated = "P6\n20 10\n255\n" + std::string(30, '\0');
  CHECK_THROWS_AS(decode_image(truncated), InputError);
  CHECK_THROWS_AS(decode_image("GIF89a"), InputError);
  write_file(dir / "t.ppm", truncated);
  const ImageSize s = probe_image_size(dir / "t.ppm");
  CHECK(s.width == 20);
  CHECK(s.height == 10);
  CHECK(is_image_file("x.PNG"));
  CHECK_FALSE(is_image_file("x.txt"));
}

TEST_CASE("boxes clip to the image") {
  CHECK(clip_box({-5, 2, 50, 8}, 20, 10) == BBox{0, 2, 20, 8});
}
