#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "prelabel/image.hpp"

namespace prelabel {

struct PlantedObject {
  std::size_t class_index = 0;
  BBox box;
};

struct SyntheticScene {
  Image image;
  std::vector<PlantedObject> objects;
};

struct SceneOptions {
  int width = 256;
  int height = 192;
  int min_objects = 1;
  int max_objects = 5;
  int min_side = 16;
  int max_side = 64;
  /// Minimum spacing between planted rectangles, in pixels.
  int gap = 4;
};

/// Non-overlapping class-colored rectangles on a flat background. Same seed,
/// same scene.
SyntheticScene make_scene(std::uint64_t seed, std::size_t class_count,
                          const SceneOptions& options = {});

/// Writes `count` scenes as scene_NNN.ppm plus ground_truth.json into `dir`.
std::vector<SyntheticScene> write_synthetic_dataset(const std::filesystem::path& dir,
                                                    std::size_t count, std::uint64_t seed,
                                                    const std::vector<std::string>& classes,
                                                    const SceneOptions& options = {});

/// splitmix64 finalizer; combines seeds into independent streams.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

}  // namespace prelabel
