#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "s2s/maskio.hpp"
#include "s2s/model.hpp"

namespace s2s {

struct ManifestEntry {
  std::string image_id;
  std::string verb;
  std::string object;
  std::string split;  // "train" | "test"
};

/// manifest.json under the dataset root: a JSON list of entries.
void save_manifest(const fs::path& root, const std::vector<ManifestEntry>& entries);
std::vector<ManifestEntry> load_manifest(const fs::path& root);

std::vector<ManifestEntry> manifest_side(const std::vector<ManifestEntry>& all,
                                         const std::string& split);
/// Distinct (verb, object) pairs, lexicographically sorted.
std::vector<std::pair<std::string, std::string>> distinct_pairs(
    const std::vector<ManifestEntry>& entries);

/// Loads scenes from a dataset root and prepares per-image network inputs
/// ([C,S,S] CHW tensors) according to the model config, caching by image id.
class DataCache {
 public:
  DataCache(fs::path root, const EmbeddingTable* table, ModelConfig cfg);

  /// Cached network input for one image (no batch dimension).
  const nn::Tensor<float>& input(const std::string& image_id);
  /// Uncached scene read (annotation access for tests/tools).
  SceneAnnotation scene(const std::string& image_id) const;
  const ModelConfig& config() const { return cfg_; }
  const fs::path& root() const { return root_; }
  const EmbeddingTable& table() const { return *table_; }

 private:
  fs::path root_;
  const EmbeddingTable* table_;
  ModelConfig cfg_;
  std::map<std::string, nn::Tensor<float>> cache_;
};

}  // namespace s2s
