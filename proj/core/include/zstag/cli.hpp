#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "zstag/evaluation.hpp"
#include "zstag/synth.hpp"
#include "zstag/trainer.hpp"

namespace zstag::cli {

// One flat configuration shared by all subcommands; flag defaults reproduce
// the reference training setup so an empty config file changes nothing.
struct RunConfig {
  DimensionConfig dims;
  TrainConfig train;
  std::vector<std::uint64_t> seeds = {1};
  std::vector<Method> methods = {Method::kAttention};

  std::string train_path;
  std::string dev_path;
  std::string test_path;
  std::string embeddings_path;  // optional
  std::string out_dir = "zstag-out";
  std::string data_format = "token";  // token | sentence
  std::vector<std::string> positive_labels = {"1"};
  int min_count = 1;

  MapMode map_mode = MapMode::kSkipNoPositive;
  bool map_global = false;

  // eval / label / visualize inputs
  std::string checkpoint_path;
  std::string tagger_checkpoint_path;
  std::string relfreq_path;
  std::string label_method = "attention";
  std::string viz_method = "attention";
  std::string viz_out;  // defaults to <out_dir>/heatmap.html

  SyntheticSpec synth;
};

// Trains the artifacts required by the selected methods (classifier for
// attention/backprop, tagger for supervised, count table for relfreq), one
// model per seed, and writes checkpoints plus history files to out_dir.
void cmd_train(const RunConfig& config, std::ostream& log);

// One table row per evaluated method; writes <out_dir>/report.json with the
// metric values at full precision and prints a 4-decimal table to `out`.
std::vector<MethodEvaluation> cmd_eval(const RunConfig& config, std::ostream& out,
                                       std::ostream& log);

// Prediction dump for one method: <out_dir>/predictions.tsv.
void cmd_label(const RunConfig& config, std::ostream& log);

// Static HTML heatmap of per-token scores.
void cmd_visualize(const RunConfig& config, std::ostream& log);

// Synthetic train/dev/test TSV files in out_dir.
void cmd_synth(const RunConfig& config, std::ostream& log);

}  // namespace zstag::cli
