// End-to-end tests of the command-line tool: exit codes, file outputs,
// config-file handling, resume, and the ablation grid cache.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "json.hpp"
#include "s2s/dataset.hpp"
#include "s2s/model.hpp"
#include "s2s/pipeline.hpp"

using namespace s2s;

namespace {

struct CmdResult {
  int code = -1;
  std::string output;  // stdout + stderr
};

CmdResult run_cli(const std::string& args, const fs::path& workdir) {
  static int counter = 0;
  fs::path log = workdir / ("cli-log-" + std::to_string(counter++) + ".txt");
  std::string cmd =
      std::string(SEM2SPACE_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  int rc = std::system(cmd.c_str());
  CmdResult res;
  res.code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  std::ifstream in(log);
  res.output.assign((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return res;
}

size_t count_lines(const fs::path& path) {
  std::ifstream in(path);
  REQUIRE(bool(in));
  size_t n = 0;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) n++;
  return n;
}

size_t count_occurrences(const std::string& text, const std::string& needle) {
  size_t n = 0;
  for (size_t at = text.find(needle); at != std::string::npos; at = text.find(needle, at + 1)) n++;
  return n;
}

// One shared 16x16 dataset for the train/eval/ablate cases. The VT60-analog
// vocabulary has 47 labels, so the control table needs lv >= 47.
struct SharedData {
  testutil::TempDir tmp;
  fs::path data;

  SharedData() {
    data = tmp.path / "data";
    auto res = run_cli("gen-data --out " + data.string() +
                           " --image-size 16 --samples-per-pair 2 --lv 48 --seed 1",
                       tmp.path);
    if (res.code != 0) throw std::runtime_error("shared gen-data failed:\n" + res.output);
  }
};

SharedData& shared() {
  static SharedData s;
  return s;
}

const std::string kTinyTrainFlags =
    " --iterations 3 --d-v 8 --input-size 16 --batch-size 4 --episode-classes 2 "
    "--lr0 1e-3 --seed 5";

}  // namespace

TEST_CASE("usage errors exit 2, help exits 0") {
  testutil::TempDir tmp;
  CHECK(run_cli("", tmp.path).code == 2);
  CHECK(run_cli("--help", tmp.path).code == 0);
  CHECK(run_cli("frobnicate", tmp.path).code == 2);
  CHECK(run_cli("gen-data", tmp.path).code == 2);  // --out is required
  CHECK(run_cli("gen-data --out x --bogus 1", tmp.path).code == 2);
  CHECK(run_cli("train --data d", tmp.path).code == 2);  // --out is required

  auto help = run_cli("train --help", tmp.path);
  CHECK(help.code == 0);
  CHECK(help.output.find("--lr0") != std::string::npos);
}

TEST_CASE("gen-data writes the benchmark deterministically") {
  testutil::TempDir tmp;
  const std::string flags = " --image-size 24 --samples-per-pair 1 --lv 48 --seed 3";
  fs::path d1 = tmp.path / "d1", d2 = tmp.path / "d2", d3 = tmp.path / "d3";
  auto r1 = run_cli("gen-data --out " + d1.string() + flags, tmp.path);
  REQUIRE(r1.code == 0);
  CHECK(r1.output.find("generated 60 images (30 train pairs, 30 test pairs)") !=
        std::string::npos);

  CHECK(fs::exists(d1 / "manifest.json"));
  CHECK(fs::exists(d1 / "wordvecs.txt"));
  CHECK(fs::exists(d1 / "wordvecs_ortho.txt"));
  CHECK(fs::exists(d1 / "config_gen_data.txt"));

  auto manifest = load_manifest(d1);
  CHECK(manifest.size() == 60);  // 60 VO pairs, one sample each
  CHECK(distinct_pairs(manifest_side(manifest, "train")).size() == 30);
  CHECK(distinct_pairs(manifest_side(manifest, "test")).size() == 30);

  REQUIRE(run_cli("gen-data --out " + d2.string() + flags, tmp.path).code == 0);
  CHECK(hash_tree(d1) == hash_tree(d2));
  REQUIRE(run_cli("gen-data --out " + d3.string() +
                      " --image-size 24 --samples-per-pair 1 --lv 48 --seed 4",
                  tmp.path)
              .code == 0);
  CHECK(hash_tree(d1) != hash_tree(d3));

  // Config validation failures surface as runtime errors (exit 1).
  auto bad = run_cli("gen-data --out " + (tmp.path / "d4").string() + " --image-size 8", tmp.path);
  CHECK(bad.code == 1);
  CHECK(bad.output.find("error:") != std::string::npos);
}

TEST_CASE("train produces a checkpoint, metrics, and a config echo") {
  auto& sh = shared();
  fs::path run1 = sh.tmp.path / "run1";
  auto res = run_cli("train --data " + sh.data.string() + " --out " + run1.string() +
                         kTinyTrainFlags,
                     sh.tmp.path);
  REQUIRE(res.code == 0);
  CHECK(res.output.find("trained to iteration 3") != std::string::npos);
  CHECK(fs::exists(run1 / "checkpoint.s2sm"));
  CHECK(fs::exists(run1 / "config_train.txt"));
  CHECK(count_lines(run1 / "metrics.csv") == 2);  // iterations 0 and 2 (last)

  int64_t iter = -1;
  auto model = load_checkpoint<float>(run1 / "checkpoint.s2sm", &iter);
  CHECK(iter == 3);
  CHECK(model.config().lv == 48);  // adopted from the word-vector table
  CHECK(model.config().in_channels == 48);
  CHECK(model.config().d_v == 8);

  auto echoed = parse_kv_file(run1 / "config_train.txt");
  CHECK(echoed.at("command") == "train");
  CHECK(echoed.at("iterations") == "3");
  CHECK(echoed.at("lv") == "48");
}

TEST_CASE("eval writes reports for both protocols") {
  auto& sh = shared();
  fs::path run1 = sh.tmp.path / "run1";
  REQUIRE(fs::exists(run1 / "checkpoint.s2sm"));  // from the train case

  fs::path eval1 = sh.tmp.path / "eval1";
  auto res = run_cli("eval --data " + sh.data.string() + " --checkpoint " +
                         (run1 / "checkpoint.s2sm").string() + " --out " + eval1.string(),
                     sh.tmp.path);
  REQUIRE(res.code == 0);
  CHECK(res.output.find("verb_transfer accuracy:") != std::string::npos);
  CHECK(res.output.find("vo_confusion accuracy:") != std::string::npos);

  for (const char* name : {"report_verb_transfer.json", "report_vo_confusion.json"}) {
    fs::path report = eval1 / name;
    REQUIRE(fs::exists(report));
    std::ifstream in(report);
    nlohmann::json j = nlohmann::json::parse(in);
    double acc = j.at("accuracy").get<double>();
    CHECK(acc >= 0.0);
    CHECK(acc <= 1.0);
    CHECK(j.at("total").get<int>() == 60);  // 30 test pairs x 2 samples
  }

  fs::path eval2 = sh.tmp.path / "eval2";
  REQUIRE(run_cli("eval --data " + sh.data.string() + " --checkpoint " +
                      (run1 / "checkpoint.s2sm").string() + " --out " + eval2.string() +
                      " --protocol verb_transfer",
                  sh.tmp.path)
              .code == 0);
  CHECK(fs::exists(eval2 / "report_verb_transfer.json"));
  CHECK_FALSE(fs::exists(eval2 / "report_vo_confusion.json"));

  auto missing = run_cli("eval --data " + sh.data.string() + " --checkpoint " +
                             (sh.tmp.path / "nope.s2sm").string() + " --out " +
                             (sh.tmp.path / "eval3").string(),
                         sh.tmp.path);
  CHECK(missing.code == 1);
  CHECK(missing.output.find("error:") != std::string::npos);
}

TEST_CASE("resume continues from the stored iteration") {
  auto& sh = shared();
  fs::path run1 = sh.tmp.path / "run1";
  REQUIRE(fs::exists(run1 / "checkpoint.s2sm"));
  fs::path run2 = sh.tmp.path / "run2";

  auto res = run_cli("train --data " + sh.data.string() + " --out " + run2.string() +
                         " --resume " + (run1 / "checkpoint.s2sm").string() +
                         " --iterations 6 --batch-size 4 --episode-classes 2 --lr0 1e-3 --seed 5",
                     sh.tmp.path);
  REQUIRE(res.code == 0);
  CHECK(res.output.find("trained to iteration 6") != std::string::npos);

  int64_t iter = -1;
  auto model = load_checkpoint<float>(run2 / "checkpoint.s2sm", &iter);
  CHECK(iter == 6);
  CHECK(model.config().d_v == 8);  // model geometry comes from the checkpoint
}

TEST_CASE("divergent training exits 1 with a clear message") {
  auto& sh = shared();
  auto res = run_cli("train --data " + sh.data.string() + " --out " +
                         (sh.tmp.path / "run-div").string() + kTinyTrainFlags +
                         " --weight-decay 1e308",
                     sh.tmp.path);
  CHECK(res.code == 1);
  CHECK(res.output.find("error:") != std::string::npos);
  CHECK(res.output.find("diverged") != std::string::npos);
}

TEST_CASE("config files feed options and flags take precedence") {
  auto& sh = shared();
  fs::path cfg = sh.tmp.path / "train.cfg";
  {
    std::ofstream out(cfg);
    out << "iterations=2\n";
    out << "lr0=0.002\n";
    out << "d-v=8\n";
    out << "input-size=16\n";
    out << "batch-size=4\n";
    out << "episode-classes=2\n";
  }
  fs::path run4 = sh.tmp.path / "run4";
  auto res = run_cli("train --config " + cfg.string() + " --data " + sh.data.string() +
                         " --out " + run4.string() + " --iterations 4",
                     sh.tmp.path);
  REQUIRE(res.code == 0);

  auto echoed = parse_kv_file(run4 / "config_train.txt");
  CHECK(echoed.at("iterations") == "4");  // command line wins
  CHECK(echoed.at("lr0") == "0.002");     // config file fills the rest
  CHECK(echoed.at("batch_size") == "4");

  auto missing = run_cli("train --config " + (sh.tmp.path / "nope.cfg").string() + " --data " +
                             sh.data.string() + " --out " + (sh.tmp.path / "run5").string(),
                         sh.tmp.path);
  CHECK(missing.code == 1);
  CHECK(missing.output.find("cannot open config file") != std::string::npos);
}

TEST_CASE("dump-features and plot produce aligned artifacts") {
  auto& sh = shared();
  fs::path run1 = sh.tmp.path / "run1";
  REQUIRE(fs::exists(run1 / "checkpoint.s2sm"));

  fs::path feat = run1 / "features.csv";
  auto res = run_cli("dump-features --data " + sh.data.string() + " --checkpoint " +
                         (run1 / "checkpoint.s2sm").string() + " --out " + feat.string() +
                         " --seed 9",
                     sh.tmp.path);
  REQUIRE(res.code == 0);
  CHECK(count_lines(feat) == 61);  // 60 test rows + header

  auto bad = run_cli("dump-features --data " + sh.data.string() + " --checkpoint " +
                         (run1 / "checkpoint.s2sm").string() + " --out " + feat.string() +
                         " --which pca",
                     sh.tmp.path);
  CHECK(bad.code == 2);  // rejected by flag validation

  fs::path coords = run1 / "coords.csv";
  fs::path png = run1 / "tsne.png";
  auto plot = run_cli("plot --features " + feat.string() + " --out-csv " + coords.string() +
                          " --out-png " + png.string() + " --seed 4",
                      sh.tmp.path);
  REQUIRE(plot.code == 0);
  CHECK(count_lines(coords) == 61);
  CHECK(fs::exists(png));
  CHECK(fs::file_size(png) > 0);
}

TEST_CASE("ablate runs the full grid once and reuses it afterwards") {
  auto& sh = shared();
  fs::path ab = sh.tmp.path / "ablate";
  const std::string flags = "ablate --data " + sh.data.string() + " --out " + ab.string() +
                            " --iterations 1 --d-v 8 --input-size 16 --batch-size 4 "
                            "--episode-classes 2 --lr0 1e-3 --seed 3";

  auto first = run_cli(flags, sh.tmp.path);
  REQUIRE(first.code == 0);
  CHECK(first.output.find("24 cells trained, 0 reused") != std::string::npos);
  CHECK(count_occurrences(first.output, "(cached)") == 0);
  CHECK(count_lines(ab / "results.csv") == 25);  // header + 24 cells
  CHECK(fs::exists(ab / "config_ablate.txt"));

  size_t cell_dirs = 0;
  for (const auto& e : fs::directory_iterator(ab / "cells"))
    if (e.is_directory()) cell_dirs++;
  CHECK(cell_dirs == 24);

  auto second = run_cli(flags, sh.tmp.path);
  REQUIRE(second.code == 0);
  CHECK(second.output.find("0 cells trained, 24 reused") != std::string::npos);
  CHECK(count_occurrences(second.output, "(cached)") == 24);
}
