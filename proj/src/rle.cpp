#include "prelabel/rle.hpp"

#include "prelabel/errors.hpp"

namespace prelabel {

CocoRle rle_encode(const BinaryMask& mask) {
  CocoRle rle{mask.height(), mask.width(), {}};
  bool current = false;
  std::uint32_t run = 0;
  for (int x = 0; x < mask.width(); ++x) {
    for (int y = 0; y < mask.height(); ++y) {
      if (mask.at(x, y) != current) {
        rle.counts.push_back(run);
        run = 0;
        current = !current;
      }
      ++run;
    }
  }
  rle.counts.push_back(run);
  return rle;
}

BinaryMask rle_decode(const CocoRle& rle) {
  if (rle.width < 1 || rle.height < 1) throw InputError("RLE size must be positive");
  BinaryMask mask(rle.width, rle.height);
  const std::size_t total = static_cast<std::size_t>(rle.width) * rle.height;
  std::size_t pos = 0;
  bool value = false;
  for (const std::uint32_t run : rle.counts) {
    if (pos + run > total) throw InputError("RLE runs exceed mask size");
    if (value) {
      for (std::size_t i = pos; i < pos + run; ++i) {
        mask.set(static_cast<int>(i / rle.height), static_cast<int>(i % rle.height));
      }
    }
    pos += run;
    value = !value;
  }
  if (pos != total) throw InputError("RLE runs do not cover the mask");
  return mask;
}

}  // namespace prelabel
