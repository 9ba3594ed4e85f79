#include "s2s/dataset.hpp"

#include <algorithm>
#include <set>

#include "json.hpp"
#include "s2s/blob.hpp"
#include "s2s/pngio.hpp"

namespace s2s {

using nlohmann::json;

void save_manifest(const fs::path& root, const std::vector<ManifestEntry>& entries) {
  json arr = json::array();
  for (const auto& e : entries) {
    if (e.split != "train" && e.split != "test")
      throw ConsistencyError("manifest: bad split `" + e.split + "` for " + e.image_id);
    json j;
    j["image_id"] = e.image_id;
    j["verb"] = e.verb;
    j["object"] = e.object;
    j["split"] = e.split;
    arr.push_back(std::move(j));
  }
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) throw IoError("cannot create directory " + root.string() + ": " + ec.message());
  write_file_bytes(root / "manifest.json", arr.dump(2) + "\n");
}

std::vector<ManifestEntry> load_manifest(const fs::path& root) {
  json arr;
  try {
    arr = json::parse(read_file_bytes(root / "manifest.json"));
  } catch (const json::exception& e) {
    throw FormatError("manifest.json parse failed: " + std::string(e.what()));
  }
  if (!arr.is_array()) throw FormatError("manifest.json: expected a JSON array");
  std::vector<ManifestEntry> out;
  std::set<std::string> ids;
  try {
    for (const json& j : arr) {
      ManifestEntry e;
      e.image_id = j.at("image_id").get<std::string>();
      e.verb = j.at("verb").get<std::string>();
      e.object = j.at("object").get<std::string>();
      e.split = j.at("split").get<std::string>();
      if (e.split != "train" && e.split != "test")
        throw FormatError("manifest.json: bad split `" + e.split + "` for " + e.image_id);
      if (!ids.insert(e.image_id).second)
        throw DuplicateKeyError("manifest.json: duplicate image_id " + e.image_id);
      out.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    throw FormatError("manifest.json schema error: " + std::string(e.what()));
  }
  return out;
}

std::vector<ManifestEntry> manifest_side(const std::vector<ManifestEntry>& all,
                                         const std::string& split) {
  std::vector<ManifestEntry> out;
  for (const auto& e : all)
    if (e.split == split) out.push_back(e);
  return out;
}

std::vector<std::pair<std::string, std::string>> distinct_pairs(
    const std::vector<ManifestEntry>& entries) {
  std::set<std::pair<std::string, std::string>> s;
  for (const auto& e : entries) s.insert({e.verb, e.object});
  return {s.begin(), s.end()};
}

DataCache::DataCache(fs::path root, const EmbeddingTable* table, ModelConfig cfg)
    : root_(std::move(root)), table_(table), cfg_(std::move(cfg)) {
  cfg_.validate_and_resolve();
  if (!table_) throw ConfigError("DataCache: an embedding table is required (queries use it)");
  if (table_->dim != cfg_.lv)
    throw DimensionError("DataCache: table dim " + std::to_string(table_->dim) +
                         " != configured lv " + std::to_string(cfg_.lv));
}

const nn::Tensor<float>& DataCache::input(const std::string& image_id) {
  auto it = cache_.find(image_id);
  if (it != cache_.end()) return it->second;
  nn::Tensor<float> x;
  if (cfg_.input_mode == "rgb") {
    x = rgb_input(read_png(root_ / (image_id + ".png")), cfg_.input_size);
  } else {
    SceneAnnotation sc = read_scene(root_, image_id);
    x = blob_input(build_s2s(sc, *table_, cfg_.input_size));
  }
  x.shape = {x.dim(1), x.dim(2), x.dim(3)};  // drop the singleton batch axis
  return cache_.emplace(image_id, std::move(x)).first->second;
}

SceneAnnotation DataCache::scene(const std::string& image_id) const {
  return read_scene(root_, image_id);
}

}  // namespace s2s
