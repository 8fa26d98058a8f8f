#include "prelabel/synthetic.hpp"

#include <algorithm>
#include <cstdio>
#include <random>

#include <nlohmann/json.hpp>

#include "prelabel/errors.hpp"
#include "prelabel/mock_providers.hpp"

namespace prelabel {

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a ^ (b + 0x9e3779b97f4a7c15ull + (a << 6) + (a >> 2));
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

SyntheticScene make_scene(std::uint64_t seed, std::size_t class_count,
                          const SceneOptions& options) {
  if (class_count == 0) throw InputError("synthetic scene needs at least one class");
  if (options.max_side >= options.width || options.max_side >= options.height ||
      options.min_side < 2 || options.min_side > options.max_side) {
    throw InputError("synthetic scene object size does not fit the canvas");
  }
  std::mt19937_64 rng(mix_seed(seed, 0x5ce7e));
  std::uniform_int_distribution<int> count(options.min_objects, options.max_objects);
  std::uniform_int_distribution<int> side(options.min_side, options.max_side);
  std::uniform_int_distribution<std::size_t> cls(0, class_count - 1);

  SyntheticScene scene;
  scene.image.name = "scene";
  scene.image.width = options.width;
  scene.image.height = options.height;
  scene.image.rgb.resize(static_cast<std::size_t>(options.width) * options.height * 3);
  for (int y = 0; y < options.height; ++y) {
    for (int x = 0; x < options.width; ++x) scene.image.set_pixel(x, y, kBackgroundColor);
  }

  const int wanted = count(rng);
  for (int i = 0; i < wanted; ++i) {
    for (int attempt = 0; attempt < 200; ++attempt) {
      const int w = side(rng);
      const int h = side(rng);
      std::uniform_int_distribution<int> px(0, options.width - w);
      std::uniform_int_distribution<int> py(0, options.height - h);
      const BBox box{double(px(rng)), double(py(rng)), 0, 0};
      const BBox placed{box.x1, box.y1, box.x1 + w, box.y1 + h};
      const BBox padded{placed.x1 - options.gap, placed.y1 - options.gap,
                        placed.x2 + options.gap, placed.y2 + options.gap};
      const bool clear = std::none_of(
          scene.objects.begin(), scene.objects.end(),
          [&](const PlantedObject& o) { return iou(o.box, padded) > 0; });
      if (!clear) continue;
      scene.objects.push_back({cls(rng), placed});
      break;
    }
  }
  for (const auto& o : scene.objects) {
    const Rgb c = class_color(o.class_index);
    for (int y = static_cast<int>(o.box.y1); y < static_cast<int>(o.box.y2); ++y) {
      for (int x = static_cast<int>(o.box.x1); x < static_cast<int>(o.box.x2); ++x) {
        scene.image.set_pixel(x, y, c);
      }
    }
  }
  scene.image.encoded = encode_ppm(scene.image);
  return scene;
}

std::vector<SyntheticScene> write_synthetic_dataset(const std::filesystem::path& dir,
                                                    std::size_t count, std::uint64_t seed,
                                                    const std::vector<std::string>& classes,
                                                    const SceneOptions& options) {
  std::filesystem::create_directories(dir);
  std::vector<SyntheticScene> scenes;
  nlohmann::json truth{{"classes", classes}, {"images", nlohmann::json::array()}};
  for (std::size_t i = 0; i < count; ++i) {
    SyntheticScene scene = make_scene(mix_seed(seed, i), classes.size(), options);
    char name[32];
    std::snprintf(name, sizeof name, "scene_%03zu.ppm", i);
    scene.image.name = name;
    write_file(dir / name, scene.image.encoded);
    nlohmann::json objects = nlohmann::json::array();
    for (const auto& o : scene.objects) {
      objects.push_back({{"class", classes[o.class_index]},
                         {"box", {o.box.x1, o.box.y1, o.box.x2, o.box.y2}}});
    }
    truth["images"].push_back({{"file", name},
                               {"width", scene.image.width},
                               {"height", scene.image.height},
                               {"objects", objects}});
    scenes.push_back(std::move(scene));
  }
  write_file(dir / "ground_truth.json", truth.dump(2));
  return scenes;
}

}  // namespace prelabel
