#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "s2s/eval.hpp"
#include "s2s/synthgen.hpp"
#include "s2s/train.hpp"

namespace s2s {

// --- flat key=value config text ----------------------------------------------

/// Parses `key=value` lines; '#' starts a comment, blank lines are skipped,
/// surrounding whitespace is trimmed. Duplicate keys are an error.
std::map<std::string, std::string> parse_kv_text(const std::string& text);
std::map<std::string, std::string> parse_kv_file(const fs::path& path);
void write_kv_file(const std::map<std::string, std::string>& kv, const fs::path& path);

/// Word-vector table used by an input mode: the semantic table for rgb/s2s,
/// the orthonormal control table for orthovec2s.
fs::path wordvec_path(const fs::path& data_root, const std::string& mode);

// --- gen-data -----------------------------------------------------------------

struct GenDataOptions {
  SynthConfig synth;  // callers start from vt60_default_config()
  fs::path out;
};
struct GenDataResult {
  std::vector<ManifestEntry> manifest;
  VOSplit split;
};
/// Splits pairs, renders the dataset, and writes both word-vector tables plus
/// the resolved config echo under out.
GenDataResult run_gen_data(const GenDataOptions& opt);

// --- train ----------------------------------------------------------------------

struct TrainOptions {
  fs::path data_root;
  fs::path out;      // metrics.csv, checkpoint.s2sm, config echo
  fs::path resume;   // optional checkpoint to continue from
  ModelConfig model; // input_mode selects the pathway (rgb | s2s | orthovec2s)
  TrainConfig train;
  uint64_t model_seed = 0;
  bool lv_from_table = true;  // adopt the table's dimension as model.lv
};
TrainResult run_train(const TrainOptions& opt);

// --- eval -----------------------------------------------------------------------

struct EvalOptions {
  fs::path data_root;
  fs::path checkpoint;
  fs::path out;                   // report_<protocol>.json lands here
  std::string protocol = "both";  // verb_transfer | vo_confusion | both
};
struct EvalResult {
  std::optional<EvalReport> verb_transfer;
  std::optional<EvalReport> vo_confusion;
};
EvalResult run_eval(const EvalOptions& opt);

// --- ablate ---------------------------------------------------------------------

struct AblateOptions {
  fs::path data_root;
  fs::path out;
  ModelConfig model;  // base; input_mode/combiner/separate_qnets set per cell
  TrainConfig train;
  uint64_t model_seed = 0;
};
struct AblateCell {
  std::string mode;
  std::string combiner;
  bool separate_qnets = false;
  double verb_transfer_acc = 0.0;
  double vo_confusion_acc = 0.0;
  bool reused = false;  // cell result loaded from a previous run
  fs::path cell_dir;
};
struct AblateResult {
  std::vector<AblateCell> cells;  // 3 modes x 4 combiners x 2 q-net layouts
  int trained = 0;
  int reused = 0;
};
/// Runs the full grid, caching finished cells under out/cells/<name> keyed by
/// the cell's resolved config; writes out/results.csv.
AblateResult run_ablate(const AblateOptions& opt);

// --- feature dump / plot ----------------------------------------------------------

struct DumpFeaturesOptions {
  fs::path data_root;
  fs::path checkpoint;
  fs::path out_csv;
  std::string which = "concat_matched";  // vnet | qnet | concat_matched | concat_unmatched
  std::string split = "test";            // train | test | all
  uint64_t seed = 0;
};
void run_dump_features(const DumpFeaturesOptions& opt);

struct PlotOptions {
  fs::path features_csv;
  fs::path out_csv;
  fs::path out_png;
  uint64_t seed = 0;
};
/// Returns true when degenerate input forced a jitter.
bool run_plot(const PlotOptions& opt);

}  // namespace s2s
