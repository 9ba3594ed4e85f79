#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "s2s/common.hpp"

namespace s2s {

/// Row-major boolean grid.
struct Mask {
  int height = 0;
  int width = 0;
  std::vector<uint8_t> data;

  Mask() = default;
  Mask(int h, int w) : height(h), width(w), data(size_t(h) * size_t(w), 0) {}

  bool at(int r, int c) const { return data[size_t(r) * width + c] != 0; }
  void set(int r, int c, bool v) { data[size_t(r) * width + c] = v ? 1 : 0; }
  long count() const {
    long n = 0;
    for (auto b : data) n += b;
    return n;
  }
};

struct InstanceMask {
  std::string label;
  Mask mask;
};

/// One annotated image: instance masks (index i holds instance id i+1) plus
/// the ground-truth verb-object pair. rgb_path is set on read when the
/// optional `<image_id>.png` rendering exists next to the id map.
struct SceneAnnotation {
  std::string image_id;
  int width = 0;
  int height = 0;
  std::vector<InstanceMask> instances;
  std::string verb;
  std::string object;
  std::optional<std::string> rgb_path;
};

/// Run-length encoding of the true pixels in row-major order:
/// [start, len, start, len, ...] with 0-based starts.
std::vector<int64_t> encode_rle(const Mask& m);
Mask decode_rle(const std::vector<int64_t>& runs, int height, int width);

/// Writes `<image_id>.pgm` (16-bit instance-id map, topmost = highest id) and
/// `<image_id>.json` (labels, VO pair, per-instance RLE). Overlaps between
/// instances survive exactly via the per-instance RLEs; the id map is a
/// flattened convenience view. Output bytes are deterministic.
void write_scene(const fs::path& root, const SceneAnnotation& scene);

/// Reads a scene back and cross-checks the id map against the RLE masks
/// pixel-for-pixel; any disagreement is a ConsistencyError.
SceneAnnotation read_scene(const fs::path& root, const std::string& image_id);

}  // namespace s2s
