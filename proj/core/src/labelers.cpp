#include "zstag/labelers.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "zstag/errors.hpp"

namespace zstag {

std::string method_name(Method m) {
  switch (m) {
    case Method::kAttention: return "attention";
    case Method::kBackprop: return "backprop";
    case Method::kRelFreq: return "relfreq";
    case Method::kSupervised: return "supervised";
  }
  return "?";
}

Method method_from_name(const std::string& name) {
  if (name == "attention") return Method::kAttention;
  if (name == "backprop") return Method::kBackprop;
  if (name == "relfreq") return Method::kRelFreq;
  if (name == "supervised") return Method::kSupervised;
  throw ContractError("unknown method: " + name);
}

std::vector<TokenPrediction> label_by_attention(const ForwardTrace& trace) {
  if (trace.attention != AttentionKind::kLogistic) {
    throw ContractError("label_by_attention requires a logistic-attention trace");
  }
  std::vector<TokenPrediction> out;
  out.reserve(trace.a_tilde.size());
  for (Eigen::Index i = 0; i < trace.a_tilde.size(); ++i) {
    const double score = trace.a_tilde(i);
    out.push_back({score, score > 0.5 ? 1 : 0, Method::kAttention});
  }
  return out;
}

std::vector<int> outlier_labels(std::span<const double> magnitudes, double z) {
  const std::size_t n = magnitudes.size();
  if (n == 0) return {};
  double mean = 0.0;
  for (double m : magnitudes) mean += m;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double m : magnitudes) var += (m - mean) * (m - mean);
  var /= static_cast<double>(n);  // population variance
  const double threshold = mean + z * std::sqrt(var);
  std::vector<int> labels(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (magnitudes[i] > threshold) labels[i] = 1;
  }
  return labels;
}

BackpropLabeler::BackpropLabeler(const ModelParams& params, const Vocab& vocab,
                                 AttentionKind attention, int c_max)
    : params_(params), vocab_(vocab), attention_(attention), c_max_(c_max) {
  if (params.kind != ModelKind::kSentenceClassifier) {
    throw ContractError("BackpropLabeler requires a sentence classifier");
  }
}

std::vector<double> BackpropLabeler::gradient_magnitudes(const Sentence& sentence) const {
  Dataset tmp;
  tmp.sentences.push_back(sentence);
  std::vector<Batch> batches = make_batches(tmp, vocab_, 1, std::nullopt, c_max_);
  const Batch& batch = batches.front();

  ad::Tape tape;
  ModelGraph graph(tape, params_, nullptr, Mode::kEval);
  ModelGraph::SentenceVars vars = graph.build_classifier(batch, 0, attention_);
  // Squared sentence loss against pseudo-label 0, independent of the true label.
  ad::Var loss = tape.square(tape.sub(vars.y, tape.scalar(0.0)));
  tape.backward(loss);

  std::vector<double> magnitudes;
  magnitudes.reserve(vars.word_reps.size());
  for (ad::Var w : vars.word_reps) magnitudes.push_back(tape.grad(w).norm());
  return magnitudes;
}

std::vector<TokenPrediction> BackpropLabeler::label(const Sentence& sentence) const {
  const std::vector<double> magnitudes = gradient_magnitudes(sentence);
  const std::vector<int> labels = outlier_labels(magnitudes);
  std::vector<TokenPrediction> out;
  out.reserve(magnitudes.size());
  for (std::size_t i = 0; i < magnitudes.size(); ++i) {
    out.push_back({magnitudes[i], labels[i], Method::kBackprop});
  }
  return out;
}

double RelFreqModel::ratio(const std::string& feature) const {
  auto it = counts.find(feature);
  if (it == counts.end()) throw ContractError("ratio of unseen feature: " + feature);
  const double pos = static_cast<double>(it->second.positive) + smoothing_alpha;
  const double neg = static_cast<double>(it->second.negative) + smoothing_alpha;
  return pos / (pos + neg);
}

std::string ngram_key(std::span<const std::string> tokens) {
  std::string key;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) key.push_back('\x1f');
    key += tokens[i];
  }
  return key;
}

namespace {

// Stream with one boundary marker on each side, tokens lowercased.
std::vector<std::string> padded_stream(const std::vector<std::string>& tokens) {
  std::vector<std::string> stream;
  stream.reserve(tokens.size() + 2);
  stream.push_back(kSentenceStart);
  for (const std::string& t : tokens) stream.push_back(lowercase_ascii(t));
  stream.push_back(kSentenceEnd);
  return stream;
}

}  // namespace

std::vector<std::string> sentence_features(const std::vector<std::string>& tokens) {
  const std::vector<std::string> stream = padded_stream(tokens);
  std::set<std::string> features;
  for (int n = 1; n <= 3; ++n) {
    for (std::size_t i = 0; i + n <= stream.size(); ++i) {
      features.insert(ngram_key(std::span(stream).subspan(i, n)));
    }
  }
  return {features.begin(), features.end()};
}

std::vector<std::vector<std::string>> features_per_position(
    const std::vector<std::string>& tokens) {
  const std::vector<std::string> stream = padded_stream(tokens);
  std::vector<std::vector<std::string>> per_position(tokens.size());
  for (int n = 1; n <= 3; ++n) {
    for (std::size_t i = 0; i + n <= stream.size(); ++i) {
      std::string key = ngram_key(std::span(stream).subspan(i, n));
      // Stream position p corresponds to token p - 1.
      for (std::size_t p = i; p < i + n; ++p) {
        if (p >= 1 && p <= tokens.size()) per_position[p - 1].push_back(key);
      }
    }
  }
  return per_position;
}

RelFreqModel relfreq_train(const Dataset& train) {
  RelFreqModel model;
  for (const Sentence& s : train.sentences) {
    if (!s.sentence_label) throw ContractError("relfreq_train: sentence lacks a label");
    const bool positive = *s.sentence_label == 1;
    for (const std::string& f : sentence_features(s.tokens)) {
      auto& c = model.counts[f];
      if (positive) {
        ++c.positive;
      } else {
        ++c.negative;
      }
    }
  }
  return model;
}

std::vector<TokenPrediction> relfreq_score(const RelFreqModel& model, const Sentence& sentence) {
  const auto per_position = features_per_position(sentence.tokens);
  std::vector<TokenPrediction> out;
  out.reserve(per_position.size());
  for (const auto& features : per_position) {
    double log_sum = 0.0;
    long seen = 0;
    bool has_zero = false;
    for (const std::string& f : features) {
      if (!model.seen(f)) continue;
      const double r = model.ratio(f);
      ++seen;
      if (r == 0.0) {
        has_zero = true;
      } else {
        log_sum += std::log(r);
      }
    }
    double score = 0.0;
    if (seen > 0) {
      score = has_zero ? 0.0 : std::exp(log_sum / static_cast<double>(seen));
    }
    out.push_back({score, score > 0.5 ? 1 : 0, Method::kRelFreq});
  }
  return out;
}

std::vector<TokenPrediction> label_supervised(const Mat& distributions) {
  if (distributions.cols() != 2) throw ContractError("label_supervised: expected T x 2 matrix");
  std::vector<TokenPrediction> out;
  out.reserve(distributions.rows());
  for (Eigen::Index t = 0; t < distributions.rows(); ++t) {
    const double p = distributions(t, 1);
    out.push_back({p, p > 0.5 ? 1 : 0, Method::kSupervised});
  }
  return out;
}

void write_predictions_tsv(const std::filesystem::path& path, const Dataset& dataset,
                           const std::vector<std::vector<TokenPrediction>>& predictions) {
  if (dataset.size() != predictions.size()) {
    throw ContractError("write_predictions_tsv: size mismatch");
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  char buf[64];
  for (std::size_t j = 0; j < dataset.size(); ++j) {
    const Sentence& s = dataset.sentences[j];
    if (s.tokens.size() != predictions[j].size()) {
      throw ContractError("write_predictions_tsv: token count mismatch");
    }
    for (std::size_t t = 0; t < s.tokens.size(); ++t) {
      const TokenPrediction& p = predictions[j][t];
      std::snprintf(buf, sizeof(buf), "%.10g", p.score);
      out << s.tokens[t] << '\t'
          << (s.token_labels ? std::to_string((*s.token_labels)[t]) : std::string("-")) << '\t'
          << method_name(p.method) << '\t' << buf << '\t' << p.label << '\n';
    }
    if (j + 1 < dataset.size()) out << '\n';
  }
}

}  // namespace zstag
