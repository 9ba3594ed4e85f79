#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "s2s/blob.hpp"

using namespace s2s;
using testutil::TempDir;

namespace {

// Fused float64 oracle: resize every mask, stamp, and sum in one per-pixel loop.
std::vector<double> fused_oracle(const SceneAnnotation& scene, const EmbeddingTable& table,
                                 int out_size) {
  const int lv = table.dim;
  std::vector<double> acc(size_t(out_size) * out_size * lv, 0.0);
  for (const auto& inst : scene.instances) {
    const auto vec = embed_label(table, inst.label);
    for (int r = 0; r < out_size; r++) {
      const int sr = std::min(int((r + 0.5) * scene.height / out_size), scene.height - 1);
      for (int c = 0; c < out_size; c++) {
        const int sc = std::min(int((c + 0.5) * scene.width / out_size), scene.width - 1);
        if (!inst.mask.at(sr, sc)) continue;
        double* px = acc.data() + (size_t(r) * out_size + c) * lv;
        for (int k = 0; k < lv; k++) px[k] += double(vec[size_t(k)]);
      }
    }
  }
  return acc;
}

double max_abs_diff(const S2SBlob& blob, const std::vector<double>& oracle) {
  double worst = 0.0;
  for (size_t i = 0; i < blob.data.size(); i++)
    worst = std::max(worst, std::abs(double(blob.data[i]) - oracle[i]));
  return worst;
}

}  // namespace

TEST_CASE("object_blob stamps the vector under the mask") {
  std::vector<float> v = {0.5f, -1.25f};
  SUBCASE("all-false mask gives the zero blob") {
    Mask m(3, 4);
    auto blob = object_blob(m, v);
    CHECK(std::all_of(blob.data.begin(), blob.data.end(), [](float x) { return x == 0.0f; }));
  }
  SUBCASE("all-true mask gives a constant field") {
    Mask m(3, 4);
    std::fill(m.data.begin(), m.data.end(), 1);
    auto blob = object_blob(m, v);
    for (int r = 0; r < 3; r++)
      for (int c = 0; c < 4; c++) {
        CHECK(blob.at(r, c)[0] == 0.5f);
        CHECK(blob.at(r, c)[1] == -1.25f);
      }
  }
  SUBCASE("random mask equals the per-pixel loop oracle exactly") {
    Rng rng(31);
    for (int t = 0; t < 20; t++) {
      int h = 2 + int(rng.index(9)), w = 2 + int(rng.index(9));
      auto m = testutil::random_mask(h, w, rng);
      std::vector<float> vec;
      for (int i = 0; i < 5; i++) vec.push_back(float(rng.normal()));
      auto blob = object_blob(m, vec);
      for (int r = 0; r < h; r++)
        for (int c = 0; c < w; c++)
          for (int k = 0; k < 5; k++)
            CHECK(blob.at(r, c)[k] == (m.at(r, c) ? vec[size_t(k)] : 0.0f));
    }
  }
  SUBCASE("empty vector is rejected") {
    Mask m(2, 2);
    m.set(0, 0, true);
    CHECK_THROWS_AS(object_blob(m, {}), DimensionError);
  }
}

TEST_CASE("aggregate_blobs sums element-wise") {
  Mask full(2, 2);
  std::fill(full.data.begin(), full.data.end(), 1);
  auto bu = object_blob(full, {1.0f, 2.0f});
  auto bv = object_blob(full, {0.25f, -1.0f});

  SUBCASE("identity on a single blob") {
    auto out = aggregate_blobs({bu});
    CHECK(out.data == bu.data);
  }
  SUBCASE("full overlap holds u+v at every pixel") {
    auto out = aggregate_blobs({bu, bv});
    for (int r = 0; r < 2; r++)
      for (int c = 0; c < 2; c++) {
        CHECK(out.at(r, c)[0] == 1.25f);
        CHECK(out.at(r, c)[1] == 1.0f);
      }
  }
  SUBCASE("permutation invariance") {
    Rng rng(17);
    std::vector<S2SBlob> blobs;
    for (int i = 0; i < 5; i++) {
      std::vector<float> v = {float(rng.normal()), float(rng.normal()), float(rng.normal())};
      blobs.push_back(object_blob(testutil::random_mask(6, 7, rng), v));
    }
    auto base = aggregate_blobs(blobs);
    auto shuffled = blobs;
    std::reverse(shuffled.begin(), shuffled.end());
    auto out = aggregate_blobs(shuffled);
    for (size_t i = 0; i < base.data.size(); i++)
      CHECK(std::abs(base.data[i] - out.data[i]) < 1e-6f);
  }
  SUBCASE("shape mismatch is rejected") {
    Mask other(3, 2);
    other.set(0, 0, true);
    CHECK_THROWS_AS(aggregate_blobs({bu, object_blob(other, {1.0f, 1.0f})}), DimensionError);
  }
  SUBCASE("empty list with explicit shape gives the zero blob") {
    auto out = aggregate_blobs({}, 4, 5, 3);
    CHECK(out.height == 4);
    CHECK(out.width == 5);
    CHECK(out.channels == 3);
    CHECK(std::all_of(out.data.begin(), out.data.end(), [](float x) { return x == 0.0f; }));
  }
  SUBCASE("empty list without a shape is rejected") {
    CHECK_THROWS_AS(aggregate_blobs({}), DimensionError);
  }
}

TEST_CASE("resize_mask_nearest uses pixel-center sampling") {
  Mask m(2, 2);
  m.set(0, 0, true);
  m.set(1, 1, true);
  auto up = resize_mask_nearest(m, 4, 4);
  // 2x upscale maps each source pixel to a 2x2 block
  for (int r = 0; r < 4; r++)
    for (int c = 0; c < 4; c++) CHECK(up.at(r, c) == m.at(r / 2, c / 2));
  // identity when sizes match
  auto same = resize_mask_nearest(m, 2, 2);
  CHECK(same.data == m.data);
}

TEST_CASE("build_s2s handles the trivial scenes") {
  auto table = testutil::tiny_table();
  SceneAnnotation scene;
  scene.image_id = "x";
  scene.height = 8;
  scene.width = 8;
  scene.verb = "hold";
  scene.object = "cat";

  SUBCASE("no instances gives the zero blob at the requested shape") {
    auto blob = build_s2s(scene, table, 16);
    CHECK(blob.height == 16);
    CHECK(blob.width == 16);
    CHECK(blob.channels == 3);
    CHECK(std::all_of(blob.data.begin(), blob.data.end(), [](float x) { return x == 0.0f; }));
  }
  SUBCASE("one full-frame cat instance gives a constant (1,0,0) field") {
    InstanceMask inst;
    inst.label = "cat";
    inst.mask = Mask(8, 8);
    std::fill(inst.mask.data.begin(), inst.mask.data.end(), 1);
    scene.instances = {inst};
    auto blob = build_s2s(scene, table, 16);
    for (int r = 0; r < 16; r++)
      for (int c = 0; c < 16; c++) {
        CHECK(blob.at(r, c)[0] == 1.0f);
        CHECK(blob.at(r, c)[1] == 0.0f);
        CHECK(blob.at(r, c)[2] == 0.0f);
      }
  }
  SUBCASE("unknown label propagates") {
    InstanceMask inst;
    inst.label = "zebra";
    inst.mask = Mask(8, 8);
    inst.mask.set(0, 0, true);
    scene.instances = {inst};
    CHECK_THROWS_AS(build_s2s(scene, table, 8), UnknownLabelError);
  }
}

TEST_CASE("build_s2s matches the fused float64 oracle on random scenes") {
  auto table = testutil::tiny_table();
  Rng rng(41);
  for (int t = 0; t < 25; t++) {
    int h = 4 + int(rng.index(13)), w = 4 + int(rng.index(13));
    auto scene = testutil::random_scene("s", h, w, 1 + int(rng.index(4)), rng);
    int out = 4 + int(rng.index(3)) * 4;
    auto blob = build_s2s(scene, table, out);
    CHECK(max_abs_diff(blob, fused_oracle(scene, table, out)) < 1e-6);
  }
}

TEST_CASE("build_s2s linearity over disjoint instance lists") {
  auto table = testutil::tiny_table();
  Rng rng(43);
  auto scene = testutil::random_scene("s", 10, 10, 4, rng);
  SceneAnnotation half_a = scene, half_b = scene;
  half_a.instances.assign(scene.instances.begin(), scene.instances.begin() + 2);
  half_b.instances.assign(scene.instances.begin() + 2, scene.instances.end());
  auto whole = build_s2s(scene, table, 12);
  auto parts = aggregate_blobs({build_s2s(half_a, table, 12), build_s2s(half_b, table, 12)});
  for (size_t i = 0; i < whole.data.size(); i++)
    CHECK(std::abs(whole.data[i] - parts.data[i]) < 1e-6f);
}

TEST_CASE("build_s2s support containment and overlap addition") {
  auto table = testutil::tiny_table();
  Rng rng(47);
  auto scene = testutil::random_scene("s", 9, 9, 3, rng);
  const int out = 9;
  auto blob = build_s2s(scene, table, out);
  for (int r = 0; r < out; r++) {
    for (int c = 0; c < out; c++) {
      // covering labels at this pixel (out == in, so no resampling)
      std::vector<float> expect(3, 0.0f);
      bool covered = false;
      for (const auto& inst : scene.instances) {
        if (!inst.mask.at(r, c)) continue;
        covered = true;
        const auto v = embed_label(table, inst.label);
        for (int k = 0; k < 3; k++) expect[size_t(k)] += v[size_t(k)];
      }
      for (int k = 0; k < 3; k++) {
        if (covered) {
          CHECK(blob.at(r, c)[k] == expect[size_t(k)]);  // exact float sum
        } else {
          CHECK(blob.at(r, c)[k] == 0.0f);  // support containment
        }
      }
    }
  }
}

TEST_CASE("blob dump round-trips and validates") {
  TempDir tmp;
  Rng rng(53);
  auto blob = object_blob(testutil::random_mask(5, 6, rng), {1.5f, -0.25f, 3.0f, 0.125f});
  write_blob(tmp.path / "b.s2sb", blob);

  SUBCASE("round-trip is exact") {
    auto back = read_blob(tmp.path / "b.s2sb");
    CHECK(back.height == blob.height);
    CHECK(back.width == blob.width);
    CHECK(back.channels == blob.channels);
    CHECK(back.data == blob.data);
  }
  SUBCASE("bad magic is rejected") {
    auto bytes = read_file_bytes(tmp.path / "b.s2sb");
    bytes[0] = 'X';
    write_file_bytes(tmp.path / "bad.s2sb", bytes);
    CHECK_THROWS_AS(read_blob(tmp.path / "bad.s2sb"), FormatError);
  }
  SUBCASE("trailing bytes are rejected") {
    auto bytes = read_file_bytes(tmp.path / "b.s2sb");
    bytes += '\0';
    write_file_bytes(tmp.path / "long.s2sb", bytes);
    CHECK_THROWS_AS(read_blob(tmp.path / "long.s2sb"), FormatError);
  }
}
