#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "s2s/synthgen.hpp"

using namespace s2s;
using testutil::TempDir;

namespace {

double cosine(const std::vector<float>& a, const std::vector<float>& b) {
  double dot = 0, na = 0, nb = 0;
  for (size_t i = 0; i < a.size(); i++) {
    dot += double(a[i]) * b[i];
    na += double(a[i]) * a[i];
    nb += double(b[i]) * b[i];
  }
  return dot / std::sqrt(na * nb);
}

}  // namespace

TEST_CASE("vt60_default_config has the benchmark's shape") {
  auto cfg = vt60_default_config();
  cfg.validate();
  CHECK(cfg.verbs.size() == 9);
  CHECK(cfg.objects.size() == 37);
  size_t pairs = 0;
  for (const auto& [verb, objs] : cfg.objects_per_verb) pairs += objs.size();
  CHECK(pairs == 60);
}

TEST_CASE("make_split halves VT60 into 30/30 disjoint pairs") {
  auto cfg = vt60_default_config();
  auto split = make_split(cfg.verb_names(), cfg.objects_per_verb, 0);
  CHECK(split.train_pairs.size() == 30);
  CHECK(split.test_pairs.size() == 30);

  std::set<std::pair<std::string, std::string>> train(split.train_pairs.begin(),
                                                      split.train_pairs.end());
  std::set<std::pair<std::string, std::string>> test(split.test_pairs.begin(),
                                                     split.test_pairs.end());
  CHECK(train.size() == 30);
  CHECK(test.size() == 30);
  for (const auto& p : test) CHECK(!train.count(p));

  // every test verb also trains
  std::set<std::string> train_verbs, test_verbs;
  for (const auto& [v, o] : split.train_pairs) train_verbs.insert(v);
  for (const auto& [v, o] : split.test_pairs) test_verbs.insert(v);
  for (const auto& v : test_verbs) CHECK(train_verbs.count(v));
}

TEST_CASE("make_split minimal case and determinism") {
  std::map<std::string, std::vector<std::string>> opv = {{"v", {"a", "b"}}};
  auto s1 = make_split({"v"}, opv, 5);
  auto s2 = make_split({"v"}, opv, 5);
  REQUIRE(s1.train_pairs.size() == 1);
  REQUIRE(s1.test_pairs.size() == 1);
  CHECK(s1.train_pairs == s2.train_pairs);
  CHECK(s1.test_pairs == s2.test_pairs);
  CHECK(s1.train_pairs[0].second != s1.test_pairs[0].second);
  CHECK(s1.in_train("v", s1.train_pairs[0].second));
  CHECK(s1.in_test("v", s1.test_pairs[0].second));
}

TEST_CASE("make_split rejects verbs with fewer than 2 objects") {
  std::map<std::string, std::vector<std::string>> opv = {{"v", {"a"}}};
  CHECK_THROWS_AS(make_split({"v"}, opv, 0), GenerationError);
}

TEST_CASE("generated scenes satisfy exactly their own relation predicate") {
  TempDir tmp;
  auto cfg = testutil::tiny_synth_config(24, 2, 8, 3);
  auto split = make_split(cfg.verb_names(), cfg.objects_per_verb, cfg.seed);
  auto manifest = generate_dataset(cfg, split, tmp.path);
  REQUIRE(manifest.size() == 8 * 2);  // 8 pairs x samples_per_pair

  for (const auto& entry : manifest) {
    auto scene = read_scene(tmp.path, entry.image_id);
    REQUIRE(scene.instances.size() == 2);
    CHECK(scene.instances[0].label == "person");
    CHECK(scene.verb == entry.verb);
    CHECK(scene.object == entry.object);
    const auto& relation = cfg.verb(entry.verb).relation;
    auto preds = eval_relation_predicates(scene.instances[0].mask, scene.instances[1].mask);
    CHECK(preds.only(relation));
    // mutual exclusivity: exactly one predicate holds
    int held = int(preds.above_contact) + int(preds.overlap_major) + int(preds.adjacent_side) +
               int(preds.beneath_contact);
    CHECK(held == 1);
  }
}

TEST_CASE("generate_dataset writes a split-consistent manifest and renders") {
  TempDir tmp;
  auto cfg = testutil::tiny_synth_config(24, 1, 8, 1);
  auto split = make_split(cfg.verb_names(), cfg.objects_per_verb, cfg.seed);
  auto manifest = generate_dataset(cfg, split, tmp.path);
  for (const auto& e : manifest) {
    const bool is_train = e.split == "train";
    CHECK((is_train ? split.in_train(e.verb, e.object) : split.in_test(e.verb, e.object)));
    CHECK(fs::exists(tmp.path / (e.image_id + ".pgm")));
    CHECK(fs::exists(tmp.path / (e.image_id + ".json")));
    CHECK(fs::exists(tmp.path / (e.image_id + ".png")));
  }
  auto loaded = load_manifest(tmp.path);
  CHECK(loaded.size() == manifest.size());
}

TEST_CASE("generate_dataset is byte-identical across regenerations") {
  TempDir t1, t2;
  auto cfg = testutil::tiny_synth_config(24, 2, 8, 9);
  auto split = make_split(cfg.verb_names(), cfg.objects_per_verb, cfg.seed);
  generate_dataset(cfg, split, t1.path);
  generate_dataset(cfg, split, t2.path);
  CHECK(hash_tree(t1.path) == hash_tree(t2.path));
}

TEST_CASE("samples_per_pair=0 yields an empty manifest and no scenes") {
  TempDir tmp;
  auto cfg = testutil::tiny_synth_config(24, 0, 8, 0);
  auto split = make_split(cfg.verb_names(), cfg.objects_per_verb, cfg.seed);
  auto manifest = generate_dataset(cfg, split, tmp.path);
  CHECK(manifest.empty());
  int scene_files = 0;
  for (const auto& e : fs::directory_iterator(tmp.path))
    if (e.path().extension() == ".pgm") scene_files++;
  CHECK(scene_files == 0);
}

TEST_CASE("synthetic word vectors cover all labels and cluster by relation") {
  auto cfg = vt60_default_config();
  auto table = make_synthetic_wordvecs(cfg);
  CHECK(table.dim == cfg.lv);
  for (const auto& label : cfg.all_labels()) CHECK_NOTHROW(embed_label(table, label));

  // verbs sharing a relation sit closer than verbs of different relations
  double worst_intra = 1.0, best_inter = -1.0;
  for (const auto& a : cfg.verbs) {
    for (const auto& b : cfg.verbs) {
      if (a.name == b.name) continue;
      double c = cosine(embed_label(table, a.name), embed_label(table, b.name));
      if (a.relation == b.relation)
        worst_intra = std::min(worst_intra, c);
      else
        best_inter = std::max(best_inter, c);
    }
  }
  CHECK(worst_intra > best_inter + 0.2);

  // determinism
  auto again = make_synthetic_wordvecs(cfg);
  CHECK(table.entries == again.entries);
}

TEST_CASE("control word vectors are pairwise orthonormal") {
  auto cfg = vt60_default_config();
  auto table = make_control_wordvecs(cfg);
  const auto labels = table.labels();
  REQUIRE(labels.size() == 9 + 37 + 1);
  double worst = 0.0;
  for (size_t a = 0; a < labels.size(); a++) {
    for (size_t b = a; b < labels.size(); b++) {
      double dot = 0;
      const auto& va = *table.find(labels[a]);
      const auto& vb = *table.find(labels[b]);
      for (int i = 0; i < table.dim; i++) dot += double(va[size_t(i)]) * vb[size_t(i)];
      worst = std::max(worst, std::abs(dot - (a == b ? 1.0 : 0.0)));
    }
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("SynthConfig::validate rejects inconsistent configs") {
  auto cfg = testutil::tiny_synth_config();
  SUBCASE("unknown relation") {
    cfg.verbs[0].relation = "floating";
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }
  SUBCASE("pair list referencing an unknown object") {
    cfg.objects_per_verb["lift"].push_back("ghost");
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }
  SUBCASE("image too small") {
    cfg.image_size = 8;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }
  SUBCASE("duplicate verb") {
    cfg.verbs.push_back(cfg.verbs[0]);
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }
  SUBCASE("negative word-vector noise") {
    cfg.object_noise = -0.1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }
}
