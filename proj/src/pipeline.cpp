#include "s2s/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace s2s {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string fmt_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::map<std::string, std::string> model_config_kv(const ModelConfig& m) {
  return {{"mode", m.input_mode},
          {"backbone", m.backbone},
          {"combiner", m.combiner},
          {"separate_qnets", m.separate_qnets ? "1" : "0"},
          {"lv", std::to_string(m.lv)},
          {"in_channels", std::to_string(m.in_channels)},
          {"d_v", std::to_string(m.d_v)},
          {"q_hidden", std::to_string(m.q_hidden)},
          {"c_hidden", std::to_string(m.c_hidden)},
          {"input_size", std::to_string(m.input_size)}};
}

std::map<std::string, std::string> train_config_kv(const TrainConfig& t) {
  return {{"lr0", fmt_real(t.lr0)},
          {"anneal_factor", fmt_real(t.anneal_factor)},
          {"anneal_every", std::to_string(t.anneal_every)},
          {"weight_decay", fmt_real(t.weight_decay)},
          {"batch_size", std::to_string(t.batch_size)},
          {"iterations", std::to_string(t.iterations)},
          {"train_seed", std::to_string(t.seed)},
          {"episode_classes", std::to_string(t.episode_classes)},
          {"negatives_per_positive", std::to_string(t.negatives_per_positive)},
          {"log_every", std::to_string(t.log_every)}};
}

void echo_config(std::map<std::string, std::string> kv, const fs::path& out_dir,
                 const std::string& command) {
  kv["command"] = command;
  fs::create_directories(out_dir);
  write_kv_file(kv, out_dir / ("config_" + command + ".txt"));
}

std::vector<std::string> sorted_verbs(const std::vector<ManifestEntry>& entries) {
  std::set<std::string> verbs;
  for (const auto& e : entries) verbs.insert(e.verb);
  return {verbs.begin(), verbs.end()};
}

}  // namespace

std::map<std::string, std::string> parse_kv_text(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError("config line " + std::to_string(lineno) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError("config line " + std::to_string(lineno) + ": empty key");
    if (kv.count(key)) throw DuplicateKeyError("config: duplicate key `" + key + "`");
    kv[key] = value;
  }
  return kv;
}

std::map<std::string, std::string> parse_kv_file(const fs::path& path) {
  return parse_kv_text(read_file_bytes(path));
}

void write_kv_file(const std::map<std::string, std::string>& kv, const fs::path& path) {
  std::string out;
  for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
  write_file_bytes(path, out);
}

fs::path wordvec_path(const fs::path& data_root, const std::string& mode) {
  if (mode == "rgb" || mode == "s2s") return data_root / "wordvecs.txt";
  if (mode == "orthovec2s") return data_root / "wordvecs_ortho.txt";
  throw ConfigError("unknown input mode `" + mode + "`");
}

GenDataResult run_gen_data(const GenDataOptions& opt) {
  if (opt.out.empty()) throw ConfigError("gen-data: missing output directory");
  opt.synth.validate();
  GenDataResult result;
  result.split = make_split(opt.synth.verb_names(), opt.synth.objects_per_verb, opt.synth.seed);
  result.manifest = generate_dataset(opt.synth, result.split, opt.out);
  save_embeddings(make_synthetic_wordvecs(opt.synth), opt.out / "wordvecs.txt");
  save_embeddings(make_control_wordvecs(opt.synth), opt.out / "wordvecs_ortho.txt");

  std::map<std::string, std::string> kv = {
      {"image_size", std::to_string(opt.synth.image_size)},
      {"samples_per_pair", std::to_string(opt.synth.samples_per_pair)},
      {"lv", std::to_string(opt.synth.lv)},
      {"seed", std::to_string(opt.synth.seed)},
      {"verbs", std::to_string(opt.synth.verbs.size())},
      {"objects", std::to_string(opt.synth.objects.size())},
      {"train_pairs", std::to_string(result.split.train_pairs.size())},
      {"test_pairs", std::to_string(result.split.test_pairs.size())},
      {"images", std::to_string(result.manifest.size())}};
  echo_config(std::move(kv), opt.out, "gen_data");
  return result;
}

TrainResult run_train(const TrainOptions& opt) {
  if (opt.out.empty()) throw ConfigError("train: missing output directory");
  const auto all = load_manifest(opt.data_root);
  const auto train_entries = manifest_side(all, "train");
  if (train_entries.empty()) throw ProtocolError("train: no train entries in manifest");

  ModelConfig cfg = opt.model;
  int64_t start_iteration = 0;
  std::optional<TwoStreamModel> model;
  if (!opt.resume.empty()) {
    model.emplace(load_checkpoint<float>(opt.resume, &start_iteration));
    cfg = model->config();  // the checkpoint's architecture is authoritative
  }

  const EmbeddingTable table = load_embeddings(wordvec_path(opt.data_root, cfg.input_mode));
  if (opt.resume.empty()) {
    if (opt.lv_from_table) cfg.lv = table.dim;
    cfg.in_channels = 0;  // re-derive for the resolved lv
    model.emplace(cfg, opt.model_seed);
    cfg = model->config();
  } else if (cfg.lv != table.dim) {
    throw ConfigError("train: checkpoint lv=" + std::to_string(cfg.lv) +
                      " does not match table dimension " + std::to_string(table.dim));
  }

  DataCache cache(opt.data_root, &table, cfg);
  fs::create_directories(opt.out);
  auto kv = model_config_kv(cfg);
  auto tkv = train_config_kv(opt.train);
  kv.insert(tkv.begin(), tkv.end());
  kv["data_root"] = opt.data_root.string();
  kv["model_seed"] = std::to_string(opt.model_seed);
  kv["resume"] = opt.resume.string();
  kv["start_iteration"] = std::to_string(start_iteration);
  echo_config(std::move(kv), opt.out, "train");

  return train_loop(*model, cache, train_entries, opt.train, opt.out / "metrics.csv",
                    opt.out / "checkpoint.s2sm", start_iteration);
}

EvalResult run_eval(const EvalOptions& opt) {
  if (opt.out.empty()) throw ConfigError("eval: missing output directory");
  const bool want_vt = opt.protocol == "verb_transfer" || opt.protocol == "both";
  const bool want_conf = opt.protocol == "vo_confusion" || opt.protocol == "both";
  if (!want_vt && !want_conf) throw ConfigError("eval: unknown protocol `" + opt.protocol + "`");

  TwoStreamModel model = load_checkpoint<float>(opt.checkpoint);
  const EmbeddingTable table =
      load_embeddings(wordvec_path(opt.data_root, model.config().input_mode));
  DataCache cache(opt.data_root, &table, model.config());
  const auto all = load_manifest(opt.data_root);
  const auto test_entries = manifest_side(all, "test");
  const auto scorer = model_scorer(model, cache, test_entries);

  fs::create_directories(opt.out);
  EvalResult result;
  if (want_vt) {
    result.verb_transfer = verb_transfer_eval(test_entries, sorted_verbs(all), scorer);
    write_report(*result.verb_transfer, opt.out / "report_verb_transfer.json");
  }
  if (want_conf) {
    result.vo_confusion = confusion_eval(test_entries, distinct_pairs(test_entries), scorer);
    write_report(*result.vo_confusion, opt.out / "report_vo_confusion.json");
  }

  auto kv = model_config_kv(model.config());
  kv["data_root"] = opt.data_root.string();
  kv["checkpoint"] = opt.checkpoint.string();
  kv["protocol"] = opt.protocol;
  echo_config(std::move(kv), opt.out, "eval");
  return result;
}

AblateResult run_ablate(const AblateOptions& opt) {
  if (opt.out.empty()) throw ConfigError("ablate: missing output directory");
  static const std::vector<std::string> kModes = {"rgb", "s2s", "orthovec2s"};
  static const std::vector<std::string> kCombiners = {"sum", "catV", "catH", "hadamard"};

  fs::create_directories(opt.out / "cells");
  AblateResult result;
  for (const auto& mode : kModes) {
    for (const auto& combiner : kCombiners) {
      for (const bool separate : {false, true}) {
        AblateCell cell;
        cell.mode = mode;
        cell.combiner = combiner;
        cell.separate_qnets = separate;

        ModelConfig cfg = opt.model;
        cfg.input_mode = mode;
        cfg.combiner = combiner;
        cfg.separate_qnets = separate;
        cfg.in_channels = 0;

        // The cache key covers everything that shapes the cell's outcome.
        auto key_kv = model_config_kv(cfg);
        auto tkv = train_config_kv(opt.train);
        key_kv.insert(tkv.begin(), tkv.end());
        key_kv["model_seed"] = std::to_string(opt.model_seed);
        key_kv["data_root"] = fs::absolute(opt.data_root).lexically_normal().string();
        key_kv.erase("in_channels");  // derived after the table is loaded
        key_kv.erase("lv");
        std::string key;
        for (const auto& [k, v] : key_kv) key += k + "=" + v + ";";
        char hash_hex[17];
        std::snprintf(hash_hex, sizeof hash_hex, "%016llx",
                      static_cast<unsigned long long>(fnv1a64(key)));
        cell.cell_dir = opt.out / "cells" /
                        (mode + "-" + combiner + "-" + (separate ? "separate" : "single") + "-" +
                         std::string(hash_hex).substr(0, 8));

        const fs::path result_path = cell.cell_dir / "result.json";
        bool reused = false;
        if (fs::exists(result_path)) {
          try {
            const auto j = nlohmann::json::parse(read_file_bytes(result_path));
            if (j.at("key").get<std::string>() == key) {
              cell.verb_transfer_acc = j.at("verb_transfer_accuracy").get<double>();
              cell.vo_confusion_acc = j.at("vo_confusion_accuracy").get<double>();
              reused = true;
            }
          } catch (const std::exception&) {
            reused = false;  // stale or corrupt cache entry: recompute
          }
        }

        if (!reused) {
          TrainOptions topt;
          topt.data_root = opt.data_root;
          topt.out = cell.cell_dir;
          topt.model = cfg;
          topt.train = opt.train;
          topt.model_seed = opt.model_seed;
          run_train(topt);

          EvalOptions eopt;
          eopt.data_root = opt.data_root;
          eopt.checkpoint = cell.cell_dir / "checkpoint.s2sm";
          eopt.out = cell.cell_dir;
          eopt.protocol = "both";
          const auto ev = run_eval(eopt);
          cell.verb_transfer_acc = ev.verb_transfer->accuracy;
          cell.vo_confusion_acc = ev.vo_confusion->accuracy;

          nlohmann::json j = {{"key", key},
                              {"verb_transfer_accuracy", cell.verb_transfer_acc},
                              {"vo_confusion_accuracy", cell.vo_confusion_acc}};
          write_file_bytes(result_path, j.dump(2) + "\n");
          result.trained++;
        } else {
          result.reused++;
        }
        cell.reused = reused;
        result.cells.push_back(std::move(cell));
      }
    }
  }

  std::string csv = "mode,combiner,qnets,verb_transfer_accuracy,vo_confusion_accuracy,cell_dir\n";
  for (const auto& c : result.cells) {
    csv += c.mode + "," + c.combiner + "," + (c.separate_qnets ? "separate" : "single") + "," +
           fmt_real(c.verb_transfer_acc) + "," + fmt_real(c.vo_confusion_acc) + "," +
           c.cell_dir.filename().string() + "\n";
  }
  write_file_bytes(opt.out / "results.csv", csv);

  auto kv = model_config_kv(opt.model);
  auto tkv = train_config_kv(opt.train);
  kv.insert(tkv.begin(), tkv.end());
  kv["data_root"] = opt.data_root.string();
  kv["model_seed"] = std::to_string(opt.model_seed);
  echo_config(std::move(kv), opt.out, "ablate");
  return result;
}

void run_dump_features(const DumpFeaturesOptions& opt) {
  TwoStreamModel model = load_checkpoint<float>(opt.checkpoint);
  const EmbeddingTable table =
      load_embeddings(wordvec_path(opt.data_root, model.config().input_mode));
  DataCache cache(opt.data_root, &table, model.config());
  const auto all = load_manifest(opt.data_root);
  std::vector<ManifestEntry> entries;
  if (opt.split == "all") {
    entries = all;
  } else if (opt.split == "train" || opt.split == "test") {
    entries = manifest_side(all, opt.split);
  } else {
    throw ConfigError("dump-features: unknown split `" + opt.split + "`");
  }
  if (!opt.out_csv.parent_path().empty()) fs::create_directories(opt.out_csv.parent_path());
  dump_features(model, cache, entries, opt.which, opt.seed, opt.out_csv);

  auto kv = model_config_kv(model.config());
  kv["data_root"] = opt.data_root.string();
  kv["checkpoint"] = opt.checkpoint.string();
  kv["which"] = opt.which;
  kv["split"] = opt.split;
  kv["seed"] = std::to_string(opt.seed);
  kv["out_csv"] = opt.out_csv.string();
  const fs::path dir = opt.out_csv.parent_path().empty() ? "." : opt.out_csv.parent_path();
  echo_config(std::move(kv), dir, "dump_features");
}

bool run_plot(const PlotOptions& opt) {
  if (!opt.out_csv.parent_path().empty()) fs::create_directories(opt.out_csv.parent_path());
  if (!opt.out_png.parent_path().empty()) fs::create_directories(opt.out_png.parent_path());
  const bool jittered = project_features(opt.features_csv, opt.seed, opt.out_csv, opt.out_png);
  std::map<std::string, std::string> kv = {{"features_csv", opt.features_csv.string()},
                                           {"seed", std::to_string(opt.seed)},
                                           {"out_csv", opt.out_csv.string()},
                                           {"out_png", opt.out_png.string()},
                                           {"jittered", jittered ? "1" : "0"}};
  const fs::path dir = opt.out_csv.parent_path().empty() ? "." : opt.out_csv.parent_path();
  echo_config(std::move(kv), dir, "plot");
  return jittered;
}

}  // namespace s2s
