#pragma once

#include <cstdint>
#include <vector>

#include "s2s/common.hpp"

namespace s2s {

struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> pixels;  // RGB, row-major, 3 bytes per pixel

  uint8_t* at(int row, int col) { return pixels.data() + 3 * (size_t(row) * width + col); }
  const uint8_t* at(int row, int col) const {
    return pixels.data() + 3 * (size_t(row) * width + col);
  }
};

RgbImage make_rgb(int width, int height, uint8_t r, uint8_t g, uint8_t b);

/// 8-bit truecolor PNG, filter 0, zlib level 6. Byte output is deterministic.
void write_png(const fs::path& path, const RgbImage& img);

/// Reads 8-bit RGB or RGBA non-interlaced PNGs (alpha is dropped).
RgbImage read_png(const fs::path& path);

}  // namespace s2s
