#include "s2s/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <set>
#include <sstream>

#include "json.hpp"

#include "s2s/pngio.hpp"
#include "s2s/tsne.hpp"

namespace s2s {
namespace {

using Pair = std::pair<std::string, std::string>;

int argmax_strict(const std::vector<double>& scores) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(scores.size()); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return best;
}

void finalize(EvalReport& report) {
  for (const auto& [cls, total] : report.per_class_totals) {
    report.total += total;
    report.hits += report.per_class_hits[cls];
  }
  report.accuracy = report.total > 0 ? double(report.hits) / report.total : 0.0;
}

nn::Tensor<float> batch_of_one(const nn::Tensor<float>& chw) {
  nn::Tensor<float> x({1, chw.dim(0), chw.dim(1), chw.dim(2)});
  x.data = chw.data;
  return x;
}

nn::Tensor<float> row_tensor(const std::vector<float>& v) {
  return nn::Tensor<float>({1, static_cast<int>(v.size())}, v);
}

nn::Tensor<float> query_feature(TwoStreamModel& model, const EmbeddingTable& table,
                                const std::string& verb, const std::string& object) {
  const auto vv = embed_label(table, verb);
  const auto vo = embed_label(table, object);
  if (model.config().separate_qnets)
    return model.forward_qnet_separate(row_tensor(vv), row_tensor(vo), nullptr);
  return model.forward_qnet(row_tensor(combine_query(vv, vo, model.config().combiner)), nullptr);
}

}  // namespace

EvalReport verb_transfer_eval(const std::vector<ManifestEntry>& test_entries,
                              const std::vector<std::string>& verb_set, const ScoreFn& score) {
  if (verb_set.empty()) throw ProtocolError("verb_transfer_eval: empty verb set");
  if (test_entries.empty()) throw ProtocolError("verb_transfer_eval: no test images");
  std::set<std::string> seen(verb_set.begin(), verb_set.end());
  if (seen.size() != verb_set.size())
    throw ProtocolError("verb_transfer_eval: duplicate verbs in verb set");

  EvalReport report;
  report.protocol = "verb_transfer";
  report.candidate_verbs = verb_set;
  for (int idx = 0; idx < static_cast<int>(test_entries.size()); ++idx) {
    const auto& e = test_entries[idx];
    if (!seen.count(e.verb))
      throw ProtocolError("verb_transfer_eval: true verb `" + e.verb + "` not in verb set");
    PerImageRecord rec;
    rec.image_id = e.image_id;
    rec.true_verb = e.verb;
    rec.true_object = e.object;
    rec.scores.reserve(verb_set.size());
    for (const auto& v : verb_set) rec.scores.push_back(score(idx, v, e.object));
    rec.pred_verb = verb_set[argmax_strict(rec.scores)];
    rec.pred_object = e.object;
    report.per_class_totals[e.verb]++;
    if (rec.pred_verb == e.verb) report.per_class_hits[e.verb]++;
    report.records.push_back(std::move(rec));
  }
  finalize(report);
  return report;
}

EvalReport confusion_eval(const std::vector<ManifestEntry>& test_entries,
                          const std::vector<Pair>& test_pairs, const ScoreFn& score) {
  if (test_pairs.empty()) throw ProtocolError("confusion_eval: empty candidate pair set");
  if (test_entries.empty()) throw ProtocolError("confusion_eval: no test images");
  // Evaluating in sorted order makes the strict argmax break ties toward the
  // lexicographically smallest pair.
  std::vector<Pair> candidates = test_pairs;
  std::sort(candidates.begin(), candidates.end());
  if (std::adjacent_find(candidates.begin(), candidates.end()) != candidates.end())
    throw ProtocolError("confusion_eval: duplicate candidate pairs");
  std::set<Pair> cand_set(candidates.begin(), candidates.end());

  EvalReport report;
  report.protocol = "vo_confusion";
  report.candidate_pairs = candidates;
  for (int idx = 0; idx < static_cast<int>(test_entries.size()); ++idx) {
    const auto& e = test_entries[idx];
    if (!cand_set.count({e.verb, e.object}))
      throw ProtocolError("confusion_eval: true pair `" + e.verb + "|" + e.object +
                          "` not among candidates");
    PerImageRecord rec;
    rec.image_id = e.image_id;
    rec.true_verb = e.verb;
    rec.true_object = e.object;
    rec.scores.reserve(candidates.size());
    for (const auto& [v, o] : candidates) rec.scores.push_back(score(idx, v, o));
    const auto& pred = candidates[argmax_strict(rec.scores)];
    rec.pred_verb = pred.first;
    rec.pred_object = pred.second;
    const std::string cls = e.verb + "|" + e.object;
    report.per_class_totals[cls]++;
    if (pred.first == e.verb && pred.second == e.object) report.per_class_hits[cls]++;
    report.records.push_back(std::move(rec));
  }
  finalize(report);
  return report;
}

void write_report(const EvalReport& report, const fs::path& path) {
  nlohmann::json j;
  j["protocol"] = report.protocol;
  j["accuracy"] = report.accuracy;
  j["hits"] = report.hits;
  j["total"] = report.total;
  if (!report.candidate_verbs.empty()) j["candidate_verbs"] = report.candidate_verbs;
  if (!report.candidate_pairs.empty()) {
    auto arr = nlohmann::json::array();
    for (const auto& [v, o] : report.candidate_pairs) arr.push_back({v, o});
    j["candidate_pairs"] = arr;
  }
  auto per_class = nlohmann::json::object();
  for (const auto& [cls, total] : report.per_class_totals) {
    const int hits = report.per_class_hits.count(cls) ? report.per_class_hits.at(cls) : 0;
    per_class[cls] = {{"hits", hits}, {"total", total}, {"accuracy", double(hits) / total}};
  }
  j["per_class"] = per_class;
  auto records = nlohmann::json::array();
  for (const auto& r : report.records) {
    records.push_back({{"image_id", r.image_id},
                       {"true_verb", r.true_verb},
                       {"true_object", r.true_object},
                       {"pred_verb", r.pred_verb},
                       {"pred_object", r.pred_object},
                       {"scores", r.scores}});
  }
  j["records"] = records;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

ScoreFn model_scorer(TwoStreamModel& model, DataCache& cache, std::vector<ManifestEntry> entries) {
  auto fv_cache = std::make_shared<std::map<int, nn::Tensor<float>>>();
  auto fq_cache = std::make_shared<std::map<Pair, nn::Tensor<float>>>();
  return [&model, &cache, entries = std::move(entries), fv_cache, fq_cache](
             int idx, const std::string& verb, const std::string& object) -> double {
    if (idx < 0 || idx >= static_cast<int>(entries.size()))
      throw ProtocolError("model_scorer: image index out of range");
    auto fv = fv_cache->find(idx);
    if (fv == fv_cache->end()) {
      auto x = batch_of_one(cache.input(entries[idx].image_id));
      fv = fv_cache->emplace(idx, model.forward_vnet(x, nullptr)).first;
    }
    auto fq = fq_cache->find({verb, object});
    if (fq == fq_cache->end()) {
      fq = fq_cache->emplace(Pair{verb, object}, query_feature(model, cache.table(), verb, object))
               .first;
    }
    return double(model.closeness(fv->second, fq->second, nullptr).data[0]);
  };
}

void dump_features(TwoStreamModel& model, DataCache& cache,
                   const std::vector<ManifestEntry>& entries, const std::string& which,
                   uint64_t seed, const fs::path& out_csv) {
  const bool want_vnet = which == "vnet";
  const bool want_qnet = which == "qnet";
  const bool matched = which == "concat_matched";
  const bool unmatched = which == "concat_unmatched";
  if (!want_vnet && !want_qnet && !matched && !unmatched)
    throw ConfigError("dump_features: unknown feature kind `" + which + "`");
  if (entries.empty()) throw ProtocolError("dump_features: no entries");

  const auto pairs = distinct_pairs(entries);
  if (unmatched && pairs.size() < 2)
    throw SamplingError("dump_features: unmatched rows need at least two distinct pairs");
  Rng rng(splitmix64(seed ^ fnv1a64("dump-unmatched")));

  std::map<Pair, nn::Tensor<float>> fq_cache;
  auto query_of = [&](const Pair& p) -> const nn::Tensor<float>& {
    auto it = fq_cache.find(p);
    if (it == fq_cache.end())
      it = fq_cache.emplace(p, query_feature(model, cache.table(), p.first, p.second)).first;
    return it->second;
  };

  const int d_v = model.config().d_v;
  const int width = want_vnet || want_qnet ? d_v : 2 * d_v;
  std::ofstream out(out_csv, std::ios::binary);
  if (!out) throw IoError("cannot write " + out_csv.string());
  out << "verb,object,matched";
  for (int i = 0; i < width; ++i) out << ",f" << i;
  out << "\n";

  char buf[32];
  for (const auto& e : entries) {
    Pair own{e.verb, e.object};
    Pair query = own;
    int flag = 1;
    if (unmatched) {
      // uniform over the other pairs: skip own index
      const auto own_it = std::lower_bound(pairs.begin(), pairs.end(), own);
      const size_t own_idx = static_cast<size_t>(own_it - pairs.begin());
      size_t pick = rng.index(pairs.size() - 1);
      if (pick >= own_idx) ++pick;
      query = pairs[pick];
      flag = 0;
    }

    std::vector<float> row;
    row.reserve(static_cast<size_t>(width));
    if (!want_qnet) {
      auto x = batch_of_one(cache.input(e.image_id));
      auto fv = model.forward_vnet(x, nullptr);
      row.insert(row.end(), fv.data.begin(), fv.data.end());
    }
    if (!want_vnet) {
      const auto& fq = query_of(query);
      row.insert(row.end(), fq.data.begin(), fq.data.end());
    }
    out << query.first << "," << query.second << "," << flag;
    for (float v : row) {
      std::snprintf(buf, sizeof buf, ",%.9g", double(v));
      out << buf;
    }
    out << "\n";
  }
  if (!out) throw IoError("short write to " + out_csv.string());
}

bool project_features(const fs::path& features_csv, uint64_t seed, const fs::path& out_csv,
                      const fs::path& out_png) {
  std::ifstream in(features_csv, std::ios::binary);
  if (!in) throw IoError("cannot read " + features_csv.string());
  std::string line;
  if (!std::getline(in, line)) throw FormatError(features_csv.string() + ": empty feature file");

  auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!s.empty() && s.back() == ',') cells.push_back("");
    return cells;
  };
  const auto header = split(line);
  if (header.size() < 4 || header[0] != "verb" || header[1] != "object" ||
      header[2] != "matched")
    throw FormatError(features_csv.string() + ": expected verb,object,matched,f0,... header");
  const size_t width = header.size() - 3;

  std::vector<std::vector<double>> rows;
  std::vector<std::array<std::string, 3>> labels;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != header.size())
      throw FormatError(features_csv.string() + ": row with wrong cell count");
    std::vector<double> row(width);
    for (size_t i = 0; i < width; ++i) {
      char* end = nullptr;
      row[i] = std::strtod(cells[i + 3].c_str(), &end);
      if (end == cells[i + 3].c_str() || *end != '\0')
        throw FormatError(features_csv.string() + ": non-numeric feature cell `" + cells[i + 3] +
                          "`");
    }
    rows.push_back(std::move(row));
    labels.push_back({cells[0], cells[1], cells[2]});
  }
  if (rows.size() < 2) throw ProtocolError("project_features: need at least two feature rows");

  const auto tsne = tsne2d(rows, seed);

  std::ofstream out(out_csv, std::ios::binary);
  if (!out) throw IoError("cannot write " + out_csv.string());
  out << "x,y,verb,object,matched\n";
  char buf[96];
  for (size_t i = 0; i < tsne.coords.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.9g,%.9g", tsne.coords[i][0], tsne.coords[i][1]);
    out << buf << "," << labels[i][0] << "," << labels[i][1] << "," << labels[i][2] << "\n";
  }
  if (!out) throw IoError("short write to " + out_csv.string());

  // Scatter raster: one colored square per row, color keyed on the label.
  const int side = 800, half = 3;
  RgbImage img = make_rgb(side, side, 245, 245, 245);
  double min_x = tsne.coords[0][0], max_x = min_x;
  double min_y = tsne.coords[0][1], max_y = min_y;
  for (const auto& c : tsne.coords) {
    min_x = std::min(min_x, c[0]);
    max_x = std::max(max_x, c[0]);
    min_y = std::min(min_y, c[1]);
    max_y = std::max(max_y, c[1]);
  }
  const double span_x = std::max(max_x - min_x, 1e-9);
  const double span_y = std::max(max_y - min_y, 1e-9);
  const double margin = 0.05 * side;
  const double scale = (side - 2.0 * margin);
  for (size_t i = 0; i < tsne.coords.size(); ++i) {
    const std::string key = labels[i][0] + "|" + labels[i][1] + "|" + labels[i][2];
    const uint64_t h = fnv1a64(key);
    const uint8_t r = static_cast<uint8_t>(40 + (h & 0xff) % 176);
    const uint8_t g = static_cast<uint8_t>(40 + ((h >> 8) & 0xff) % 176);
    const uint8_t b = static_cast<uint8_t>(40 + ((h >> 16) & 0xff) % 176);
    const int cx = static_cast<int>(margin + (tsne.coords[i][0] - min_x) / span_x * scale);
    const int cy = static_cast<int>(margin + (tsne.coords[i][1] - min_y) / span_y * scale);
    for (int dy = -half; dy <= half; ++dy) {
      for (int dx = -half; dx <= half; ++dx) {
        const int px = cx + dx, py = cy + dy;
        if (px < 0 || px >= side || py < 0 || py >= side) continue;
        uint8_t* p = img.at(py, px);
        p[0] = r;
        p[1] = g;
        p[2] = b;
      }
    }
  }
  write_png(out_png, img);
  return tsne.jittered;
}

}  // namespace s2s
