#pragma once

#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "s2s/dataset.hpp"

namespace s2s {

/// Scores one (image, query) combination. image_index refers to the entry
/// list the protocol was given. Abstracting the model behind this lets the
/// protocols be tested with synthetic scorers.
using ScoreFn =
    std::function<double(int image_index, const std::string& verb, const std::string& object)>;

struct PerImageRecord {
  std::string image_id;
  std::string true_verb, true_object;
  std::string pred_verb, pred_object;
  std::vector<double> scores;  // one per candidate, in candidate order
};

struct EvalReport {
  std::string protocol;  // "verb_transfer" | "vo_confusion"
  // Candidate axis: verbs for verb_transfer (object fixed to each image's
  // truth), full VO pairs for vo_confusion.
  std::vector<std::string> candidate_verbs;
  std::vector<std::pair<std::string, std::string>> candidate_pairs;
  std::map<std::string, int> per_class_hits;    // keyed by verb or "verb|object"
  std::map<std::string, int> per_class_totals;
  int total = 0;
  int hits = 0;
  double accuracy = 0.0;
  std::vector<PerImageRecord> records;
};

/// Per image: score (v, true object) for every v in verb_set; argmax wins,
/// ties broken by lowest verb index. Hit iff the true verb wins.
EvalReport verb_transfer_eval(const std::vector<ManifestEntry>& test_entries,
                              const std::vector<std::string>& verb_set, const ScoreFn& score);

/// Per image: score every candidate test pair; argmax wins, ties broken by
/// lexicographically smallest pair. Hit iff the true pair wins.
EvalReport confusion_eval(const std::vector<ManifestEntry>& test_entries,
                          const std::vector<std::pair<std::string, std::string>>& test_pairs,
                          const ScoreFn& score);

void write_report(const EvalReport& report, const fs::path& path);

/// ScoreFn backed by a frozen model, with visual features cached per image
/// and query encodings cached per pair. `entries` is copied; model and cache
/// must outlive the returned closure.
ScoreFn model_scorer(TwoStreamModel& model, DataCache& cache,
                     std::vector<ManifestEntry> entries);

/// Writes `verb,object,matched,f0,...` rows. which selects the feature:
/// vnet (d_v), qnet (d_v), concat_matched / concat_unmatched (2*d_v; the
/// unmatched variant pairs each image with a uniformly drawn other pair).
void dump_features(TwoStreamModel& model, DataCache& cache,
                   const std::vector<ManifestEntry>& entries, const std::string& which,
                   uint64_t seed, const fs::path& out_csv);

/// Reads a feature CSV, embeds rows to 2-D (exact t-SNE, deterministic under
/// seed), writes `x,y,verb,object,matched` rows and a scatter PNG colored by
/// label. Returns true when degenerate input forced a jitter.
bool project_features(const fs::path& features_csv, uint64_t seed, const fs::path& out_csv,
                      const fs::path& out_png);

}  // namespace s2s
