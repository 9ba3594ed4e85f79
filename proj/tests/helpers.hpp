#pragma once

#include <atomic>
#include <string>
#include <unistd.h>

#include "s2s/common.hpp"
#include "s2s/maskio.hpp"
#include "s2s/synthgen.hpp"
#include "s2s/wordvec.hpp"

namespace testutil {

/// Unique scratch directory, removed at scope exit.
struct TempDir {
  s2s::fs::path path;

  TempDir() {
    static std::atomic<int> counter{0};
    path = s2s::fs::temp_directory_path() /
           ("s2s-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    s2s::fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    s2s::fs::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
};

inline s2s::EmbeddingTable tiny_table() {
  s2s::EmbeddingTable t;
  t.dim = 3;
  t.entries["cat"] = {1.0f, 0.0f, 0.0f};
  t.entries["dog"] = {0.0f, 1.0f, 0.0f};
  t.entries["baseball_bat"] = {0.0f, 0.0f, 1.0f};
  t.entries["hold"] = {0.5f, 0.5f, 0.0f};
  return t;
}

inline s2s::Mask random_mask(int h, int w, s2s::Rng& rng, double density = 0.4) {
  s2s::Mask m(h, w);
  for (auto& px : m.data) px = rng.uniform() < density ? 1 : 0;
  if (m.count() == 0) m.set(int(rng.index(size_t(h))), int(rng.index(size_t(w))), true);
  return m;
}

inline s2s::SceneAnnotation random_scene(const std::string& image_id, int h, int w,
                                         int n_instances, s2s::Rng& rng) {
  static const std::vector<std::string> kLabels = {"cat", "dog", "baseball bat"};
  s2s::SceneAnnotation scene;
  scene.image_id = image_id;
  scene.height = h;
  scene.width = w;
  scene.verb = "hold";
  scene.object = "cat";
  for (int i = 0; i < n_instances; i++) {
    s2s::InstanceMask inst;
    inst.label = kLabels[rng.index(kLabels.size())];
    inst.mask = random_mask(h, w, rng);
    scene.instances.push_back(std::move(inst));
  }
  return scene;
}

/// 4 verbs covering every relation kind, 4 objects covering every family,
/// 2 objects per verb: 8 pairs total, splitting 4/4.
inline s2s::SynthConfig tiny_synth_config(int image_size = 24, int samples_per_pair = 2,
                                           int lv = 16, uint64_t seed = 0) {
  s2s::SynthConfig c;
  c.verbs = {{"lift", "above-contact"},
             {"grab", "overlap-major"},
             {"push", "adjacent-side"},
             {"crush", "beneath-contact"}};
  c.objects = {{"ball", "circle", "small"},
               {"box", "rectangle", "medium"},
               {"cone", "triangle", "large"},
               {"tire", "ring", "medium"}};
  c.objects_per_verb = {{"lift", {"ball", "box"}},
                        {"grab", {"cone", "tire"}},
                        {"push", {"ball", "cone"}},
                        {"crush", {"box", "tire"}}};
  c.image_size = image_size;
  c.samples_per_pair = samples_per_pair;
  c.lv = lv;
  c.seed = seed;
  return c;
}

}  // namespace testutil
