#include "zstag/evaluation.hpp"

#include <algorithm>

#include "zstag/errors.hpp"

namespace zstag {

namespace {

struct FlatGold {
  std::vector<int> sentence;
  std::vector<std::vector<int>> tokens;
};

FlatGold gold_of(const Dataset& data) {
  FlatGold g;
  for (const Sentence& s : data.sentences) {
    if (!s.token_labels) throw ContractError("evaluation requires gold token labels");
    if (!s.sentence_label) throw ContractError("evaluation requires gold sentence labels");
    g.sentence.push_back(*s.sentence_label);
    g.tokens.push_back(*s.token_labels);
  }
  return g;
}

EvalReport score(const std::vector<std::vector<TokenPrediction>>& predictions,
                 const std::vector<int>& sentence_pred, const FlatGold& gold,
                 const EvalOptions& options) {
  std::vector<int> flat_pred, flat_gold;
  std::vector<std::vector<double>> scores(predictions.size());
  for (std::size_t j = 0; j < predictions.size(); ++j) {
    for (const TokenPrediction& p : predictions[j]) {
      flat_pred.push_back(p.label);
      scores[j].push_back(p.score);
    }
    flat_gold.insert(flat_gold.end(), gold.tokens[j].begin(), gold.tokens[j].end());
  }
  EvalReport report;
  const Prf token = binary_prf(flat_pred, flat_gold);
  report.token_precision = token.precision;
  report.token_recall = token.recall;
  report.token_f1 = token.f1;
  report.token_counts = token.counts;
  const Prf sent = binary_prf(sentence_pred, gold.sentence);
  report.sentence_f1 = sent.f1;
  report.sentence_counts = sent.counts;
  report.token_map = options.map_global
                         ? global_average_precision(scores, gold.tokens)
                         : mean_average_precision(scores, gold.tokens, options.map_mode);
  return report;
}

}  // namespace

std::vector<MethodEvaluation> evaluate_methods(const EvalModels& models, const Dataset& data,
                                               std::span<const Method> methods,
                                               const EvalOptions& options) {
  const FlatGold gold = gold_of(data);
  std::vector<MethodEvaluation> out;

  // Classifier forwards are shared by the attention and backprop methods.
  const bool needs_classifier =
      std::any_of(methods.begin(), methods.end(), [](Method m) {
        return m == Method::kAttention || m == Method::kBackprop;
      });
  std::vector<ForwardTrace> traces;
  if (needs_classifier && models.classifier != nullptr) {
    for (const Batch& batch : make_batches(data, *models.classifier_vocab, options.batch_size,
                                           std::nullopt, options.c_max)) {
      std::vector<ForwardTrace> batch_traces =
          forward(batch, *models.classifier, Mode::kEval, options.attention);
      for (auto& t : batch_traces) traces.push_back(std::move(t));
    }
  }

  for (Method method : methods) {
    MethodEvaluation ev;
    ev.method = method;
    switch (method) {
      case Method::kAttention: {
        if (models.classifier == nullptr) continue;
        if (options.attention != AttentionKind::kLogistic) {
          throw ContractError("attention labeling requires logistic attention");
        }
        for (std::size_t j = 0; j < traces.size(); ++j) {
          ev.token_predictions.push_back(label_by_attention(traces[j]));
          ev.sentence_predictions.push_back(traces[j].y > 0.5 ? 1 : 0);
        }
        break;
      }
      case Method::kBackprop: {
        if (models.classifier == nullptr) continue;
        BackpropLabeler labeler(*models.classifier, *models.classifier_vocab, options.attention,
                                options.c_max);
        for (std::size_t j = 0; j < data.size(); ++j) {
          ev.token_predictions.push_back(labeler.label(data.sentences[j]));
          ev.sentence_predictions.push_back(traces[j].y > 0.5 ? 1 : 0);
        }
        break;
      }
      case Method::kRelFreq: {
        if (models.relfreq == nullptr) continue;
        for (const Sentence& s : data.sentences) {
          auto preds = relfreq_score(*models.relfreq, s);
          int any = 0;
          for (const auto& p : preds) any |= p.label;
          ev.token_predictions.push_back(std::move(preds));
          ev.sentence_predictions.push_back(any);
        }
        break;
      }
      case Method::kSupervised: {
        if (models.tagger == nullptr) continue;
        for (const Batch& batch : make_batches(data, *models.tagger_vocab, options.batch_size,
                                               std::nullopt, options.c_max)) {
          for (const Mat& probs : supervised_forward(batch, *models.tagger, Mode::kEval)) {
            auto preds = label_supervised(probs);
            int any = 0;
            for (const auto& p : preds) any |= p.label;
            ev.token_predictions.push_back(std::move(preds));
            ev.sentence_predictions.push_back(any);
          }
        }
        break;
      }
    }
    ev.report = score(ev.token_predictions, ev.sentence_predictions, gold, options);
    out.push_back(std::move(ev));
  }
  return out;
}

}  // namespace zstag
