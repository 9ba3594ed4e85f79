#pragma once

#include <vector>

#include "s2s/common.hpp"
#include "s2s/maskio.hpp"
#include "s2s/wordvec.hpp"

namespace s2s {

/// H×W×C float field, channels fastest (HWC). Built by stamping per-object
/// word vectors into mask regions and summing; pixels covered by no object
/// stay exactly zero, overlaps hold the vector sum.
struct S2SBlob {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<float> data;

  S2SBlob() = default;
  S2SBlob(int h, int w, int c)
      : height(h), width(w), channels(c), data(size_t(h) * w * c, 0.0f) {}

  float* at(int r, int c) { return data.data() + (size_t(r) * width + c) * channels; }
  const float* at(int r, int c) const {
    return data.data() + (size_t(r) * width + c) * channels;
  }
};

/// Stamps `vector` at every true pixel of `mask`; zero elsewhere.
S2SBlob object_blob(const Mask& mask, const std::vector<float>& vector);

/// Element-wise sum. All blobs must share shape.
S2SBlob aggregate_blobs(const std::vector<S2SBlob>& blobs);
/// Empty-list-safe variant: an empty list yields a zero blob of the given shape.
S2SBlob aggregate_blobs(const std::vector<S2SBlob>& blobs, int height, int width, int channels);

/// Nearest-neighbor resize with pixel-center sampling
/// (src = floor((dst + 0.5) * in / out)); axes scale independently.
Mask resize_mask_nearest(const Mask& m, int out_height, int out_width);

/// Full pipeline for one scene: resize every instance mask to
/// out_size×out_size, stamp each instance's label vector (per instance, not
/// per class), and sum.
S2SBlob build_s2s(const SceneAnnotation& scene, const EmbeddingTable& table, int out_size);

/// Versioned binary dump (magic S2SB, little-endian f32, HWC).
void write_blob(const fs::path& path, const S2SBlob& blob);
S2SBlob read_blob(const fs::path& path);

}  // namespace s2s
