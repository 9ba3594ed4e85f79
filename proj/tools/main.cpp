// Command-line front end: gen-data, train, eval, ablate, dump-features, plot.
// Every subcommand accepts --config <file> with flat key=value lines (keys are
// the long option names); explicit flags override file values. Exit codes:
// 0 success, 1 runtime failure, 2 usage error.

#include <algorithm>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "s2s/pipeline.hpp"

namespace {

// CLI11 only processes config files attached to the root app, so splice the
// file's key=value lines in as `--key=value` tokens right behind the
// subcommand name. Every option takes its last value, so explicit flags win.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  if (args.empty() || args.front().empty() || args.front()[0] == '-') return args;
  std::string file;
  for (size_t i = 1; i < args.size(); i++) {
    if (args[i] == "--config" && i + 1 < args.size())
      file = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0)
      file = args[i].substr(9);
  }
  if (file.empty()) return args;

  auto trim = [](const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return std::string();
    return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
  };
  std::ifstream in(file);
  if (!in) throw s2s::ConfigError("cannot open config file: " + file);
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw s2s::ConfigError("config file " + file + ": line without `=`: " + t);
    std::string key = trim(t.substr(0, eq)), value = trim(t.substr(eq + 1));
    if (key.empty()) throw s2s::ConfigError("config file " + file + ": empty key");
    if (key == "config") continue;
    tokens.push_back("--" + key + "=" + value);
  }
  args.insert(args.begin() + 1, tokens.begin(), tokens.end());
  return args;
}

struct GenDataArgs {
  std::string out;
  uint64_t seed = 0;
  int image_size = 64;
  int samples_per_pair = 8;
  int lv = 64;
  double verb_noise = 0.35;
  double object_noise = 0.35;
};

struct TrainArgs {
  std::string data, out, resume;
  std::string mode = "s2s";
  std::string backbone = "tiny";
  std::string combiner = "sum";
  bool separate_qnets = false;
  int lv = 0;  // 0 = adopt the word-vector table's dimension
  int d_v = 64;
  int q_hidden = 0;
  int c_hidden = 0;
  int input_size = 64;
  double lr0 = 1e-5;
  double anneal_factor = 0.5;
  int64_t anneal_every = 200000;
  double weight_decay = 1e-5;
  int batch_size = 32;
  int64_t iterations = 2000;
  int episode_classes = 8;
  int negatives = 1;
  int64_t log_every = 100;
  uint64_t seed = 0;
  int64_t model_seed = -1;  // -1 = follow --seed
};

s2s::ModelConfig model_config_of(const TrainArgs& a) {
  s2s::ModelConfig m;
  m.input_mode = a.mode;
  m.backbone = a.backbone;
  m.combiner = a.combiner;
  m.separate_qnets = a.separate_qnets;
  if (a.lv > 0) m.lv = a.lv;
  m.d_v = a.d_v;
  m.q_hidden = a.q_hidden;
  m.c_hidden = a.c_hidden;
  m.input_size = a.input_size;
  return m;
}

s2s::TrainConfig train_config_of(const TrainArgs& a) {
  s2s::TrainConfig t;
  t.lr0 = a.lr0;
  t.anneal_factor = a.anneal_factor;
  t.anneal_every = a.anneal_every;
  t.weight_decay = a.weight_decay;
  t.batch_size = a.batch_size;
  t.iterations = a.iterations;
  t.seed = a.seed;
  t.episode_classes = a.episode_classes;
  t.negatives_per_positive = a.negatives;
  t.log_every = a.log_every;
  return t;
}

void add_model_options(CLI::App* cmd, TrainArgs& a, bool per_cell_fields) {
  if (per_cell_fields) {
    cmd->add_option("--mode", a.mode, "input pathway")
        ->check(CLI::IsMember({"rgb", "s2s", "orthovec2s"}));
    cmd->add_option("--combiner", a.combiner, "verb/object query combiner")
        ->check(CLI::IsMember({"sum", "catV", "catH", "hadamard"}));
    cmd->add_flag("--separate-qnets", a.separate_qnets, "encode verb and object separately");
  }
  cmd->add_option("--backbone", a.backbone, "visual encoder")
      ->check(CLI::IsMember({"tiny", "paper18", "paper34", "paper50"}));
  cmd->add_option("--lv", a.lv, "word-vector dimension (0 = from table)");
  cmd->add_option("--d-v", a.d_v, "visual feature dimension");
  cmd->add_option("--q-hidden", a.q_hidden, "Q-Net hidden width (0 = d_v)");
  cmd->add_option("--c-hidden", a.c_hidden, "C-Net hidden width (0 = 2*d_v)");
  cmd->add_option("--input-size", a.input_size, "encoder input resolution");
}

void add_train_options(CLI::App* cmd, TrainArgs& a) {
  cmd->add_option("--lr0", a.lr0, "initial learning rate");
  cmd->add_option("--anneal-factor", a.anneal_factor, "lr multiplier per anneal step");
  cmd->add_option("--anneal-every", a.anneal_every, "iterations per anneal step");
  cmd->add_option("--weight-decay", a.weight_decay, "L2 penalty on Q-Net affine parameters");
  cmd->add_option("--batch-size", a.batch_size, "samples per iteration");
  cmd->add_option("--iterations", a.iterations, "training iterations");
  cmd->add_option("--episode-classes", a.episode_classes, "VO pairs per episode");
  cmd->add_option("--negatives", a.negatives, "unmatched samples per matched sample");
  cmd->add_option("--log-every", a.log_every, "metrics cadence");
  cmd->add_option("--seed", a.seed, "sampling seed");
  cmd->add_option("--model-seed", a.model_seed, "parameter init seed (-1 = follow --seed)");
}

uint64_t resolved_model_seed(const TrainArgs& a) {
  return a.model_seed < 0 ? a.seed : static_cast<uint64_t>(a.model_seed);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"semantics-to-space zero-shot verb-object inference"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  std::string config_file;
  auto add_config = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_file, "flat key=value option file");
  };

  // gen-data ------------------------------------------------------------------
  GenDataArgs gen;
  auto* cmd_gen = app.add_subcommand("gen-data", "generate the synthetic benchmark");
  add_config(cmd_gen);
  cmd_gen->add_option("--out", gen.out, "dataset root to create")->required();
  cmd_gen->add_option("--seed", gen.seed, "generation seed");
  cmd_gen->add_option("--image-size", gen.image_size, "square scene resolution");
  cmd_gen->add_option("--samples-per-pair", gen.samples_per_pair, "images per VO pair");
  cmd_gen->add_option("--lv", gen.lv, "word-vector dimension");
  cmd_gen->add_option("--verb-noise", gen.verb_noise, "per-verb word-vector noise scale");
  cmd_gen->add_option("--object-noise", gen.object_noise, "per-object word-vector noise scale");
  cmd_gen->callback([&] {
    s2s::GenDataOptions opt;
    opt.synth = s2s::vt60_default_config();
    opt.synth.seed = gen.seed;
    opt.synth.image_size = gen.image_size;
    opt.synth.samples_per_pair = gen.samples_per_pair;
    opt.synth.lv = gen.lv;
    opt.synth.verb_noise = gen.verb_noise;
    opt.synth.object_noise = gen.object_noise;
    opt.out = gen.out;
    const auto res = s2s::run_gen_data(opt);
    std::printf("generated %zu images (%zu train pairs, %zu test pairs) under %s\n",
                res.manifest.size(), res.split.train_pairs.size(), res.split.test_pairs.size(),
                gen.out.c_str());
  });

  // train ---------------------------------------------------------------------
  TrainArgs tr;
  auto* cmd_train = app.add_subcommand("train", "train a matching model");
  add_config(cmd_train);
  cmd_train->add_option("--data", tr.data, "dataset root")->required();
  cmd_train->add_option("--out", tr.out, "run output directory")->required();
  cmd_train->add_option("--resume", tr.resume, "checkpoint to continue from");
  add_model_options(cmd_train, tr, true);
  add_train_options(cmd_train, tr);
  cmd_train->callback([&] {
    s2s::TrainOptions opt;
    opt.data_root = tr.data;
    opt.out = tr.out;
    opt.resume = tr.resume;
    opt.model = model_config_of(tr);
    opt.train = train_config_of(tr);
    opt.model_seed = resolved_model_seed(tr);
    opt.lv_from_table = tr.lv == 0;
    const auto res = s2s::run_train(opt);
    std::printf("trained to iteration %lld (final loss %.9g); checkpoint at %s\n",
                static_cast<long long>(res.final_iteration), res.final_loss,
                (opt.out / "checkpoint.s2sm").c_str());
  });

  // eval ----------------------------------------------------------------------
  std::string ev_data, ev_ckpt, ev_out, ev_protocol = "both";
  auto* cmd_eval = app.add_subcommand("eval", "run zero-shot evaluation protocols");
  add_config(cmd_eval);
  cmd_eval->add_option("--data", ev_data, "dataset root")->required();
  cmd_eval->add_option("--checkpoint", ev_ckpt, "trained model")->required();
  cmd_eval->add_option("--out", ev_out, "report output directory")->required();
  cmd_eval->add_option("--protocol", ev_protocol, "which protocol(s) to run")
      ->check(CLI::IsMember({"verb_transfer", "vo_confusion", "both"}));
  cmd_eval->callback([&] {
    s2s::EvalOptions opt;
    opt.data_root = ev_data;
    opt.checkpoint = ev_ckpt;
    opt.out = ev_out;
    opt.protocol = ev_protocol;
    const auto res = s2s::run_eval(opt);
    if (res.verb_transfer)
      std::printf("verb_transfer accuracy: %.4f (%d/%d)\n", res.verb_transfer->accuracy,
                  res.verb_transfer->hits, res.verb_transfer->total);
    if (res.vo_confusion)
      std::printf("vo_confusion accuracy: %.4f (%d/%d)\n", res.vo_confusion->accuracy,
                  res.vo_confusion->hits, res.vo_confusion->total);
  });

  // ablate --------------------------------------------------------------------
  TrainArgs ab;
  auto* cmd_ablate = app.add_subcommand(
      "ablate", "train/eval the full mode x combiner x Q-Net layout grid");
  add_config(cmd_ablate);
  cmd_ablate->add_option("--data", ab.data, "dataset root")->required();
  cmd_ablate->add_option("--out", ab.out, "grid output directory")->required();
  add_model_options(cmd_ablate, ab, false);
  add_train_options(cmd_ablate, ab);
  cmd_ablate->callback([&] {
    s2s::AblateOptions opt;
    opt.data_root = ab.data;
    opt.out = ab.out;
    opt.model = model_config_of(ab);
    opt.train = train_config_of(ab);
    opt.model_seed = resolved_model_seed(ab);
    const auto res = s2s::run_ablate(opt);
    std::printf("%-12s %-10s %-10s %-14s %-14s\n", "mode", "combiner", "qnets", "verb_transfer",
                "vo_confusion");
    for (const auto& c : res.cells) {
      std::printf("%-12s %-10s %-10s %-14.4f %-14.4f%s\n", c.mode.c_str(), c.combiner.c_str(),
                  c.separate_qnets ? "separate" : "single", c.verb_transfer_acc,
                  c.vo_confusion_acc, c.reused ? "  (cached)" : "");
    }
    std::printf("%d cells trained, %d reused; table at %s\n", res.trained, res.reused,
                (opt.out / "results.csv").c_str());
  });

  // dump-features ---------------------------------------------------------------
  std::string df_data, df_ckpt, df_out, df_which = "concat_matched", df_split = "test";
  uint64_t df_seed = 0;
  auto* cmd_dump = app.add_subcommand("dump-features", "export per-image feature rows");
  add_config(cmd_dump);
  cmd_dump->add_option("--data", df_data, "dataset root")->required();
  cmd_dump->add_option("--checkpoint", df_ckpt, "trained model")->required();
  cmd_dump->add_option("--out", df_out, "feature CSV to write")->required();
  cmd_dump->add_option("--which", df_which, "feature kind")
      ->check(CLI::IsMember({"vnet", "qnet", "concat_matched", "concat_unmatched"}));
  cmd_dump->add_option("--split", df_split, "manifest side")
      ->check(CLI::IsMember({"train", "test", "all"}));
  cmd_dump->add_option("--seed", df_seed, "unmatched-pair sampling seed");
  cmd_dump->callback([&] {
    s2s::DumpFeaturesOptions opt;
    opt.data_root = df_data;
    opt.checkpoint = df_ckpt;
    opt.out_csv = df_out;
    opt.which = df_which;
    opt.split = df_split;
    opt.seed = df_seed;
    s2s::run_dump_features(opt);
    std::printf("features written to %s\n", df_out.c_str());
  });

  // plot ----------------------------------------------------------------------
  std::string pl_features, pl_csv, pl_png;
  uint64_t pl_seed = 0;
  auto* cmd_plot = app.add_subcommand("plot", "project a feature dump to 2-D");
  add_config(cmd_plot);
  cmd_plot->add_option("--features", pl_features, "feature CSV from dump-features")->required();
  cmd_plot->add_option("--out-csv", pl_csv, "coordinates CSV to write")->required();
  cmd_plot->add_option("--out-png", pl_png, "scatter raster to write")->required();
  cmd_plot->add_option("--seed", pl_seed, "embedding seed");
  cmd_plot->callback([&] {
    s2s::PlotOptions opt;
    opt.features_csv = pl_features;
    opt.out_csv = pl_csv;
    opt.out_png = pl_png;
    opt.seed = pl_seed;
    const bool jittered = s2s::run_plot(opt);
    std::printf("projection written to %s and %s%s\n", pl_csv.c_str(), pl_png.c_str(),
                jittered ? " (degenerate input was jittered)" : "");
  });

  try {
    std::vector<std::string> args = expand_config({argv + 1, argv + argc});
    std::reverse(args.begin(), args.end());  // CLI11 consumes from the back
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);  // prints help or the usage error
    return code == 0 ? 0 : 2;
  } catch (const s2s::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
