#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "s2s/dataset.hpp"
#include "s2s/maskio.hpp"
#include "s2s/wordvec.hpp"

namespace s2s {

/// Relation kinds a verb can realize geometrically.
inline const std::vector<std::string>& relation_kinds() {
  static const std::vector<std::string> k = {"above-contact", "overlap-major", "adjacent-side",
                                             "beneath-contact"};
  return k;
}
inline const std::vector<std::string>& shape_families() {
  static const std::vector<std::string> k = {"circle", "rectangle", "triangle", "ring"};
  return k;
}
inline const std::vector<std::string>& size_classes() {
  static const std::vector<std::string> k = {"small", "medium", "large"};
  return k;
}

struct VerbSpec {
  std::string name;
  std::string relation;  // one of relation_kinds()
};

struct ObjectSpec {
  std::string name;
  std::string family;      // one of shape_families()
  std::string size_class;  // one of size_classes()
};

struct SynthConfig {
  std::vector<VerbSpec> verbs;
  std::vector<ObjectSpec> objects;
  // Pair structure: which objects occur with each verb, in declaration order.
  std::map<std::string, std::vector<std::string>> objects_per_verb;
  int image_size = 64;
  int samples_per_pair = 8;
  int lv = 64;  // dimension of the emitted word-vector tables
  uint64_t seed = 0;
  // Per-label noise mixed into the semantic word vectors. Object noise sets
  // how separable same-family-same-size objects are, and with it how often a
  // mismatched query can only be rejected through the verb.
  double verb_noise = 0.35;
  double object_noise = 0.35;

  void validate() const;  // ConfigError on any inconsistency
  const VerbSpec& verb(const std::string& name) const;
  const ObjectSpec& object(const std::string& name) const;
  std::vector<std::string> verb_names() const;
  /// All labels needing word vectors: verbs, objects, "person".
  std::vector<std::string> all_labels() const;
};

/// The VT60-shaped default: 9 verbs / 37 objects / 60 pairs, shape families
/// and size classes assigned per object by name hash.
SynthConfig vt60_default_config();

struct VOSplit {
  std::vector<std::pair<std::string, std::string>> train_pairs;
  std::vector<std::pair<std::string, std::string>> test_pairs;

  bool in_train(const std::string& verb, const std::string& object) const;
  bool in_test(const std::string& verb, const std::string& object) const;
};

/// Per-verb halving of the object lists into disjoint train/test pairs.
/// Odd-sized verbs alternate the extra object between sides to balance the
/// totals. Deterministic in (verb order, object order, seed).
VOSplit make_split(const std::vector<std::string>& verbs,
                   const std::map<std::string, std::vector<std::string>>& objects_per_verb,
                   uint64_t seed);

/// Writes all scenes + RGB renderings + manifest.json under out_root and
/// returns the manifest. Byte-identical regeneration under the same inputs.
std::vector<ManifestEntry> generate_dataset(const SynthConfig& config, const VOSplit& split,
                                            const fs::path& out_root);

/// Structured word vectors: verbs share their relation's basis direction,
/// objects mix family + size directions, all with per-label noise — unseen
/// labels stay inside the span the network saw during training.
EmbeddingTable make_synthetic_wordvecs(const SynthConfig& config);
/// Pairwise-orthonormal control table over the same labels.
EmbeddingTable make_control_wordvecs(const SynthConfig& config);

/// Closed-form geometric predicates over (person, object) masks.
/// Exactly one holds for every generated scene.
struct RelationPredicates {
  bool above_contact = false;
  bool overlap_major = false;
  bool adjacent_side = false;
  bool beneath_contact = false;

  bool only(const std::string& relation) const;
};
RelationPredicates eval_relation_predicates(const Mask& person, const Mask& object);

}  // namespace s2s
