#include <algorithm>

#include "doctest.h"
#include "helpers.hpp"
#include "s2s/maskio.hpp"

using namespace s2s;
using testutil::TempDir;

namespace {

bool scenes_equal(const SceneAnnotation& a, const SceneAnnotation& b) {
  if (a.image_id != b.image_id || a.width != b.width || a.height != b.height ||
      a.verb != b.verb || a.object != b.object || a.instances.size() != b.instances.size())
    return false;
  for (size_t i = 0; i < a.instances.size(); i++) {
    if (a.instances[i].label != b.instances[i].label) return false;
    if (a.instances[i].mask.data != b.instances[i].mask.data) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("encode_rle emits one run for a full-frame mask") {
  Mask m(4, 5);
  std::fill(m.data.begin(), m.data.end(), 1);
  auto runs = encode_rle(m);
  CHECK(runs == std::vector<int64_t>{0, 20});
}

TEST_CASE("encode/decode RLE round-trips random masks") {
  Rng rng(21);
  for (int t = 0; t < 40; t++) {
    int h = 1 + int(rng.index(12)), w = 1 + int(rng.index(12));
    auto m = testutil::random_mask(h, w, rng, rng.uniform(0.05, 0.95));
    auto back = decode_rle(encode_rle(m), h, w);
    CHECK(back.data == m.data);
  }
}

TEST_CASE("decode_rle rejects malformed runs") {
  CHECK_THROWS_AS(decode_rle({0}, 2, 2), FormatError);            // odd count
  CHECK_THROWS_AS(decode_rle({0, 5}, 2, 2), FormatError);         // out of bounds
  CHECK_THROWS_AS(decode_rle({0, 2, 1, 1}, 2, 2), FormatError);   // overlapping/unsorted
  CHECK_THROWS_AS(decode_rle({0, 0}, 2, 2), FormatError);         // empty run
  CHECK_THROWS_AS(decode_rle({-1, 2}, 2, 2), FormatError);        // negative start
}

TEST_CASE("write_scene/read_scene round-trips randomized scenes") {
  TempDir tmp;
  Rng rng(5);
  for (int t = 0; t < 50; t++) {
    int h = 4 + int(rng.index(13)), w = 4 + int(rng.index(13));
    auto scene =
        testutil::random_scene("scene_" + std::to_string(t), h, w, int(rng.index(5)), rng);
    write_scene(tmp.path, scene);
    auto back = read_scene(tmp.path, scene.image_id);
    CHECK(scenes_equal(scene, back));
  }
}

TEST_CASE("overlapping instances survive the round trip exactly") {
  TempDir tmp;
  SceneAnnotation scene;
  scene.image_id = "overlap";
  scene.height = 6;
  scene.width = 6;
  scene.verb = "hold";
  scene.object = "cat";
  InstanceMask a, b;
  a.label = "cat";
  a.mask = Mask(6, 6);
  b.label = "dog";
  b.mask = Mask(6, 6);
  for (int r = 0; r < 4; r++)
    for (int c = 0; c < 4; c++) a.mask.set(r, c, true);
  for (int r = 2; r < 6; r++)
    for (int c = 2; c < 6; c++) b.mask.set(r, c, true);
  scene.instances = {a, b};
  write_scene(tmp.path, scene);
  auto back = read_scene(tmp.path, "overlap");
  REQUIRE(back.instances.size() == 2);
  // the id map keeps only the topmost instance, but the RLE masks keep both
  CHECK(back.instances[0].mask.data == a.mask.data);
  CHECK(back.instances[1].mask.data == b.mask.data);
  CHECK(back.instances[0].mask.at(3, 3));
  CHECK(back.instances[1].mask.at(3, 3));
}

TEST_CASE("background-only scene round-trips") {
  TempDir tmp;
  SceneAnnotation scene;
  scene.image_id = "empty";
  scene.height = 3;
  scene.width = 4;
  scene.verb = "wait";
  scene.object = "nothing";
  write_scene(tmp.path, scene);
  auto back = read_scene(tmp.path, "empty");
  CHECK(back.instances.empty());
  CHECK(back.width == 4);
  CHECK(back.height == 3);
}

TEST_CASE("write_scene output is byte-identical across writes") {
  TempDir t1, t2;
  Rng rng(9);
  auto scene = testutil::random_scene("same", 10, 8, 3, rng);
  write_scene(t1.path, scene);
  write_scene(t2.path, scene);
  CHECK(read_file_bytes(t1.path / "same.pgm") == read_file_bytes(t2.path / "same.pgm"));
  CHECK(read_file_bytes(t1.path / "same.json") == read_file_bytes(t2.path / "same.json"));
}

TEST_CASE("read_scene rejects sidecar/id-map disagreements") {
  TempDir tmp;
  Rng rng(13);
  auto scene = testutil::random_scene("tamper", 6, 6, 1, rng);
  write_scene(tmp.path, scene);

  SUBCASE("sidecar id not present in the map") {
    auto json_text = read_file_bytes(tmp.path / "tamper.json");
    auto pos = json_text.find("\"id\": 1");
    REQUIRE(pos != std::string::npos);
    json_text.replace(pos, 7, "\"id\": 2");
    write_file_bytes(tmp.path / "tamper.json", json_text);
    CHECK_THROWS_AS(read_scene(tmp.path, "tamper"), ConsistencyError);
  }
  SUBCASE("pixel disagreement between map and RLE") {
    auto pgm = read_file_bytes(tmp.path / "tamper.pgm");
    pgm[pgm.size() - 1] = char(pgm[pgm.size() - 1] ^ 1);  // flip one id sample
    write_file_bytes(tmp.path / "tamper.pgm", pgm);
    CHECK_THROWS_AS(read_scene(tmp.path, "tamper"), ConsistencyError);
  }
  SUBCASE("malformed PGM magic") {
    auto pgm = read_file_bytes(tmp.path / "tamper.pgm");
    pgm[1] = '4';
    write_file_bytes(tmp.path / "tamper.pgm", pgm);
    CHECK_THROWS_AS(read_scene(tmp.path, "tamper"), FormatError);
  }
}

TEST_CASE("write_scene validates its input") {
  TempDir tmp;
  SceneAnnotation scene;
  scene.image_id = "bad";
  scene.height = 4;
  scene.width = 4;
  scene.verb = "hold";
  scene.object = "cat";
  InstanceMask inst;
  inst.label = "cat";

  SUBCASE("empty mask rejected") {
    inst.mask = Mask(4, 4);  // no true pixel
    scene.instances = {inst};
    CHECK_THROWS_AS(write_scene(tmp.path, scene), FormatError);
  }
  SUBCASE("mask dims must match the scene") {
    inst.mask = Mask(3, 4);
    inst.mask.set(0, 0, true);
    scene.instances = {inst};
    CHECK_THROWS_AS(write_scene(tmp.path, scene), DimensionError);
  }
  SUBCASE("empty verb rejected") {
    scene.verb = "";
    CHECK_THROWS_AS(write_scene(tmp.path, scene), FormatError);
  }
}
