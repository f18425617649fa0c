#pragma once

#include <span>
#include <vector>

#include "zstag/corpus.hpp"
#include "zstag/labelers.hpp"
#include "zstag/metrics.hpp"
#include "zstag/model.hpp"

namespace zstag {

struct EvalOptions {
  AttentionKind attention = AttentionKind::kLogistic;
  MapMode map_mode = MapMode::kSkipNoPositive;
  bool map_global = false;
  int batch_size = 32;
  int c_max = 32;
};

struct MethodEvaluation {
  Method method;
  EvalReport report;
  std::vector<std::vector<TokenPrediction>> token_predictions;  // per sentence
  std::vector<int> sentence_predictions;
};

struct EvalModels {
  const ModelParams* classifier = nullptr;  // attention and backprop methods
  const Vocab* classifier_vocab = nullptr;
  const ModelParams* tagger = nullptr;  // supervised method
  const Vocab* tagger_vocab = nullptr;
  const RelFreqModel* relfreq = nullptr;
};

// Runs each requested method over the dataset and scores it against the gold
// token labels. Methods whose model is missing are silently dropped from the
// result (callers warn). Sentence-level predictions come from the classifier
// score for attention/backprop and from any-positive-token for
// relfreq/supervised.
std::vector<MethodEvaluation> evaluate_methods(const EvalModels& models, const Dataset& data,
                                               std::span<const Method> methods,
                                               const EvalOptions& options = {});

}  // namespace zstag
