#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "zstag/corpus.hpp"
#include "zstag/embeddings.hpp"
#include "zstag/evaluation.hpp"
#include "zstag/labelers.hpp"
#include "zstag/metrics.hpp"
#include "zstag/model.hpp"
#include "zstag/objectives.hpp"

namespace zstag {

enum class SelectionMetric {
  kSentenceF1,        // headline sentence metric (default)
  kSentenceAccuracy,  // fraction of correct sentence predictions
  kDevLoss,           // negated dev combined loss; useful when F1 saturates
};

struct TrainConfig {
  int batch_size = 32;
  double dropout = 0.5;
  double gamma = 0.01;
  double learning_rate = 1.0;
  int patience = 7;
  int max_epochs = 100;
  AttentionKind attention = AttentionKind::kLogistic;
  Reduction reduction = Reduction::kSum;
  SelectionMetric selection = SelectionMetric::kSentenceF1;
  double adadelta_rho = 0.95;
  double adadelta_eps = 1e-6;
  double grad_clip = 0.0;  // disabled
  int c_max = 32;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;  // 1-based
  LossBreakdown train_loss;
  double dev_metric = 0.0;
  bool improved = false;
  double seconds = 0.0;  // wall clock; not part of the serialized history
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  double best_metric = 0.0;
};

struct TrainResult {
  ModelParams params;  // snapshot of the best epoch
  TrainHistory history;
};

// Improvement is strictly-greater; stops after `patience` consecutive epochs
// without a new best.
class EarlyStopper {
 public:
  explicit EarlyStopper(int patience);
  bool observe(double metric);  // returns true on a new best
  bool should_stop() const { return since_best_ >= patience_; }
  int best_epoch() const { return best_epoch_; }
  double best_metric() const { return best_metric_; }

 private:
  int patience_;
  int epoch_ = 0;
  int best_epoch_ = 0;
  int since_best_ = 0;
  double best_metric_;
};

// --- per-batch gradients ------------------------------------------------------

struct BatchGradients {
  ModelParams grads;
  // Gradient of the loss at each sentence's word representations w_i.
  std::vector<std::vector<Eigen::VectorXd>> word_rep_grads;
  LossBreakdown loss;
};

BatchGradients classifier_batch_gradients(const Batch& batch, const ModelParams& params,
                                          AttentionKind attention, double gamma,
                                          Reduction reduction, Mode mode, double dropout = 0.0,
                                          Rng* dropout_rng = nullptr);
LossBreakdown classifier_batch_loss(const Batch& batch, const ModelParams& params,
                                    AttentionKind attention, double gamma, Reduction reduction);

BatchGradients tagger_batch_gradients(const Batch& batch, const ModelParams& params, Mode mode,
                                      double dropout = 0.0, Rng* dropout_rng = nullptr);
double tagger_batch_loss(const Batch& batch, const ModelParams& params);

// --- training loop ------------------------------------------------------------

struct TrainRun {
  TrainConfig config;
  DimensionConfig dims;
  ModelKind kind = ModelKind::kSentenceClassifier;
  std::uint64_t seed = 1;
  const EmbeddingLoad* pretrained = nullptr;  // rows found in the file override init
};

// One optimization run: per epoch shuffle, batch, gradients, AdaDelta update,
// dev evaluation in eval mode; early stopping on the dev metric; returns the
// snapshot of the best epoch. Classifiers select on the sentence metric,
// taggers on dev token F1.
TrainResult train(const TrainRun& run, const Dataset& train_data, const Dataset& dev_data,
                  const Vocab& vocab, std::ostream* log = nullptr);

// History as line-delimited JSON, one record per epoch. Deterministic for a
// fixed (config, seed, data); wall-clock timings are deliberately excluded.
std::string history_to_jsonl(const TrainHistory& history);

// --- multi-seed driver ----------------------------------------------------------

struct ExperimentConfig {
  TrainConfig train;
  DimensionConfig dims;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  std::vector<Method> methods = {Method::kAttention};
  MapMode map_mode = MapMode::kSkipNoPositive;
  bool map_global = false;
  int min_count = 1;
  const EmbeddingLoad* pretrained = nullptr;
  bool parallel_seeds = true;
};

struct SeedOutcome {
  std::uint64_t seed = 0;
  std::optional<TrainResult> classifier;
  std::optional<TrainResult> tagger;
  std::map<Method, EvalReport> reports;
};

struct ExperimentResult {
  Vocab vocab;
  RelFreqModel relfreq;  // populated when the relfreq method is requested
  std::vector<SeedOutcome> seeds;
  std::map<Method, EvalReport> averaged;
};

// Each seed gets independent initialization, dropout and shuffle streams;
// seeds run as independent jobs over the shared immutable datasets. The final
// report per method is the arithmetic mean over seeds.
ExperimentResult run_seeds(const ExperimentConfig& config, const Dataset& train_data,
                           const Dataset& dev_data, const Dataset& test_data,
                           std::ostream* log = nullptr);

}  // namespace zstag
