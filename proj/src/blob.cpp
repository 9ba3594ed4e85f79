#include "s2s/blob.hpp"

namespace s2s {

S2SBlob object_blob(const Mask& mask, const std::vector<float>& vector) {
  if (vector.empty()) throw DimensionError("object_blob: empty vector");
  S2SBlob blob(mask.height, mask.width, int(vector.size()));
  for (size_t p = 0; p < mask.data.size(); p++) {
    if (!mask.data[p]) continue;
    float* dst = blob.data.data() + p * vector.size();
    for (size_t c = 0; c < vector.size(); c++) dst[c] = vector[c];
  }
  return blob;
}

S2SBlob aggregate_blobs(const std::vector<S2SBlob>& blobs, int height, int width, int channels) {
  S2SBlob sum(height, width, channels);
  for (const S2SBlob& b : blobs) {
    if (b.height != height || b.width != width || b.channels != channels)
      throw DimensionError("aggregate_blobs: shape mismatch");
    for (size_t i = 0; i < sum.data.size(); i++) sum.data[i] += b.data[i];
  }
  return sum;
}

S2SBlob aggregate_blobs(const std::vector<S2SBlob>& blobs) {
  if (blobs.empty())
    throw DimensionError("aggregate_blobs: empty list needs an explicit shape");
  return aggregate_blobs(blobs, blobs[0].height, blobs[0].width, blobs[0].channels);
}

Mask resize_mask_nearest(const Mask& m, int out_height, int out_width) {
  if (out_height <= 0 || out_width <= 0)
    throw DimensionError("resize_mask_nearest: non-positive output size");
  Mask out(out_height, out_width);
  for (int r = 0; r < out_height; r++) {
    int sr = int(double(r + 0.5) * m.height / out_height);
    if (sr >= m.height) sr = m.height - 1;
    for (int c = 0; c < out_width; c++) {
      int sc = int(double(c + 0.5) * m.width / out_width);
      if (sc >= m.width) sc = m.width - 1;
      out.data[size_t(r) * out_width + c] = m.data[size_t(sr) * m.width + sc];
    }
  }
  return out;
}

S2SBlob build_s2s(const SceneAnnotation& scene, const EmbeddingTable& table, int out_size) {
  if (out_size <= 0) throw DimensionError("build_s2s: non-positive out_size");
  S2SBlob sum(out_size, out_size, table.dim);
  for (const InstanceMask& inst : scene.instances) {
    std::vector<float> vec = embed_label(table, inst.label);
    Mask resized = resize_mask_nearest(inst.mask, out_size, out_size);
    for (size_t p = 0; p < resized.data.size(); p++) {
      if (!resized.data[p]) continue;
      float* dst = sum.data.data() + p * vec.size();
      for (size_t c = 0; c < vec.size(); c++) dst[c] += vec[c];
    }
  }
  return sum;
}

static constexpr char kBlobMagic[4] = {'S', '2', 'S', 'B'};
static constexpr uint32_t kBlobVersion = 1;

void write_blob(const fs::path& path, const S2SBlob& blob) {
  std::string out;
  out.reserve(20 + blob.data.size() * 4);
  out.append(kBlobMagic, 4);
  put_u32(out, kBlobVersion);
  put_u32(out, uint32_t(blob.height));
  put_u32(out, uint32_t(blob.width));
  put_u32(out, uint32_t(blob.channels));
  for (float f : blob.data) put_f32(out, f);
  write_file_bytes(path, out);
}

S2SBlob read_blob(const fs::path& path) {
  std::string bytes = read_file_bytes(path);
  ByteReader r(bytes, "blob " + path.string());
  if (r.bytes(4) != std::string(kBlobMagic, 4))
    throw FormatError("blob " + path.string() + ": bad magic");
  uint32_t ver = r.u32();
  if (ver != kBlobVersion)
    throw FormatError("blob " + path.string() + ": unsupported version " + std::to_string(ver));
  uint32_t h = r.u32(), w = r.u32(), c = r.u32();
  if (h == 0 || w == 0 || c == 0 || uint64_t(h) * w * c > (1ULL << 31))
    throw FormatError("blob " + path.string() + ": implausible shape");
  S2SBlob blob{int(h), int(w), int(c)};
  r.f32_into(blob.data.data(), blob.data.size());
  if (!r.at_end()) throw FormatError("blob " + path.string() + ": trailing bytes");
  return blob;
}

}  // namespace s2s
