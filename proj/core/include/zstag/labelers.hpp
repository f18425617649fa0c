#pragma once

#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "zstag/corpus.hpp"
#include "zstag/model.hpp"

namespace zstag {

enum class Method { kAttention, kBackprop, kRelFreq, kSupervised };

std::string method_name(Method m);
Method method_from_name(const std::string& name);

struct TokenPrediction {
  double score = 0.0;
  int label = 0;
  Method method = Method::kAttention;
};

// Unnormalized logistic attention weights as token scores; positive iff the
// weight exceeds 0.5 strictly.
std::vector<TokenPrediction> label_by_attention(const ForwardTrace& trace);

// The outlier rule shared by the gradient labeler: positive iff the magnitude
// exceeds mean + z * population standard deviation (strict). With all-equal
// magnitudes nothing crosses the threshold.
std::vector<int> outlier_labels(std::span<const double> magnitudes, double z = 1.5);

// Gradient-based labeling: forward pass, then the gradient of the squared
// sentence loss against a pseudo-label of 0 is taken at each word
// representation (after the character features are concatenated in). The
// token score is the Euclidean norm of that gradient.
class BackpropLabeler {
 public:
  BackpropLabeler(const ModelParams& params, const Vocab& vocab,
                  AttentionKind attention = AttentionKind::kLogistic, int c_max = 32);

  std::vector<double> gradient_magnitudes(const Sentence& sentence) const;
  std::vector<TokenPrediction> label(const Sentence& sentence) const;

 private:
  const ModelParams& params_;
  const Vocab& vocab_;
  AttentionKind attention_;
  int c_max_;
};

// Counts of n-gram features (n in {1,2,3}, over the token stream padded with
// sentence boundary markers) in positive and negative sentences. Presence
// counting: one count per sentence containing the feature.
struct RelFreqModel {
  struct Counts {
    long positive = 0;
    long negative = 0;
  };
  std::unordered_map<std::string, Counts> counts;
  double smoothing_alpha = 0.0;  // add-alpha on both counts; 0 disables

  double ratio(const std::string& feature) const;
  bool seen(const std::string& feature) const { return counts.count(feature) > 0; }
};

inline constexpr const char* kSentenceStart = "<s>";
inline constexpr const char* kSentenceEnd = "</s>";

// Feature key for a token n-gram (tokens already lowercased).
std::string ngram_key(std::span<const std::string> tokens);

// All n-gram features of a sentence (deduplicated) and, separately, the
// features covering each token position.
std::vector<std::string> sentence_features(const std::vector<std::string>& tokens);
std::vector<std::vector<std::string>> features_per_position(
    const std::vector<std::string>& tokens);

RelFreqModel relfreq_train(const Dataset& train);

// score_i = geometric mean of r_k over seen features covering position i;
// 0 when no covering feature was seen. Positive iff score > 0.5.
std::vector<TokenPrediction> relfreq_score(const RelFreqModel& model, const Sentence& sentence);

// Most probable label per token from a supervised tagger distribution
// (T x 2, column 1 positive); score = p(positive), ties map to negative.
std::vector<TokenPrediction> label_supervised(const Mat& distributions);

// Prediction dump: token, gold (or -), method, score, label; sentences
// separated by blank lines.
void write_predictions_tsv(const std::filesystem::path& path, const Dataset& dataset,
                           const std::vector<std::vector<TokenPrediction>>& predictions);

}  // namespace zstag
