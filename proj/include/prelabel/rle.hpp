#pragma once

#include <cstdint>
#include <vector>

#include "prelabel/postprocess.hpp"

namespace prelabel {

/// Uncompressed COCO run-length encoding: column-major runs that alternate
/// background/foreground, starting with a (possibly zero) background run.
struct CocoRle {
  int height = 0;
  int width = 0;
  std::vector<std::uint32_t> counts;
};

CocoRle rle_encode(const BinaryMask& mask);
/// Throws InputError when the runs do not cover exactly height x width.
BinaryMask rle_decode(const CocoRle& rle);

}  // namespace prelabel
