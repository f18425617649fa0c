#pragma once

#include <Eigen/Core>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "zstag/autodiff.hpp"
#include "zstag/corpus.hpp"
#include "zstag/rng.hpp"

namespace zstag {

using Mat = Eigen::MatrixXd;

struct DimensionConfig {
  int word_emb_dim = 300;
  int char_emb_dim = 100;
  int char_hidden = 100;  // per direction
  int word_hidden = 300;  // per direction
  int combined_h = 200;
  int attention_e = 100;
  int sentence_d = 50;

  int word_rep_dim() const { return word_emb_dim + 2 * char_hidden; }
  void validate() const;
};

enum class ModelKind { kSentenceClassifier, kTokenTagger };
enum class AttentionKind { kLogistic, kExp };
enum class Mode { kTrain, kEval };

struct LstmParams {
  Mat w;  // 4H x (input + H), gate rows ordered i, f, o, g
  Mat b;  // 4H x 1, forget-gate rows initialized to 1
};

Mat glorot_uniform(int rows, int cols, Rng& rng);

// All trainable tensors of one model. The same struct doubles as gradient
// and optimizer-state storage via zeros_like().
struct ModelParams {
  DimensionConfig dims;
  ModelKind kind = ModelKind::kSentenceClassifier;

  Mat word_emb;  // word_rows x word_emb_dim
  Mat char_emb;  // char_rows x char_emb_dim
  LstmParams char_fwd, char_bwd;
  LstmParams word_fwd, word_bwd;
  Mat w_h, b_h;  // combined projection

  // classifier head
  Mat w_e, b_e;            // attention hidden layer
  Mat w_escore, b_escore;  // scalar attention score
  Mat w_d, b_d;            // sentence hidden layer
  Mat w_y, b_y;            // sentence output

  // tagger head
  Mat w_tag, b_tag;  // per-token 2-way projection

  static ModelParams init(const DimensionConfig& dims, ModelKind kind, int word_rows,
                          int char_rows, Rng& rng);
  static ModelParams zeros_like(const ModelParams& other);

  template <typename Fn>
  void visit(Fn&& fn) {
    visit_impl(*this, fn);
  }
  template <typename Fn>
  void visit(Fn&& fn) const {
    visit_impl(*this, fn);
  }

  // Name of the first tensor containing a non-finite value, if any.
  std::optional<std::string> first_non_finite() const;

 private:
  template <typename Self, typename Fn>
  static void visit_impl(Self& self, Fn&& fn) {
    fn("word_emb", self.word_emb);
    fn("char_emb", self.char_emb);
    fn("char_fwd.w", self.char_fwd.w);
    fn("char_fwd.b", self.char_fwd.b);
    fn("char_bwd.w", self.char_bwd.w);
    fn("char_bwd.b", self.char_bwd.b);
    fn("word_fwd.w", self.word_fwd.w);
    fn("word_fwd.b", self.word_fwd.b);
    fn("word_bwd.w", self.word_bwd.w);
    fn("word_bwd.b", self.word_bwd.b);
    fn("w_h", self.w_h);
    fn("b_h", self.b_h);
    if (self.kind == ModelKind::kSentenceClassifier) {
      fn("w_e", self.w_e);
      fn("b_e", self.b_e);
      fn("w_escore", self.w_escore);
      fn("b_escore", self.b_escore);
      fn("w_d", self.w_d);
      fn("b_d", self.b_d);
      fn("w_y", self.w_y);
      fn("b_y", self.b_y);
    } else {
      fn("w_tag", self.w_tag);
      fn("b_tag", self.b_tag);
    }
  }
};

// Per-sentence forward outputs (numeric snapshot of the graph).
struct ForwardTrace {
  Mat h;                    // T x combined_h, row per token
  Eigen::VectorXd e_tilde;  // T
  Eigen::VectorXd a_tilde;  // T; empty under exp attention
  Eigen::VectorXd a;        // T, sums to 1
  Eigen::VectorXd c;        // combined_h
  Eigen::VectorXd d;        // sentence_d
  double y = 0.0;           // in [0, 1]
  AttentionKind attention = AttentionKind::kLogistic;
  bool uniform_fallback = false;
};

// Builds per-sentence computation graphs on a caller-owned tape. Parameter
// leaves bind gradient sinks when `grad_sink` is non-null. Character
// encodings are shared between identical tokens on the same tape.
class ModelGraph {
 public:
  ModelGraph(ad::Tape& tape, const ModelParams& params, ModelParams* grad_sink, Mode mode,
             double dropout_prob = 0.0, Rng* dropout_rng = nullptr);

  struct SentenceVars {
    std::vector<ad::Var> word_reps;  // pre-dropout w_i, for input-gradient readout
    ad::Var h_matrix;                // combined_h x T
    ad::Var e_tilde;                 // T x 1
    ad::Var a_tilde;                 // T x 1; invalid under exp attention
    ad::Var a;                       // T x 1
    ad::Var c, d, y;
    bool uniform_fallback = false;
  };

  struct TaggerVars {
    std::vector<ad::Var> word_reps;
    ad::Var h_matrix;
    std::vector<ad::Var> log_probs;  // per token, 2 x 1
  };

  ad::Var char_encode(std::span<const int> char_ids);
  std::vector<ad::Var> token_reps(const Batch& batch, int b);
  ad::Var encode_sentence(std::span<const ad::Var> word_reps);
  ad::Var attention_scores(ad::Var h_matrix);

  struct SoftAttention {
    ad::Var a_tilde, a;
    bool uniform_fallback = false;
  };
  SoftAttention soft_attention(ad::Var e_tilde);
  ad::Var exp_attention(ad::Var e_tilde);

  ad::Var sentence_representation(ad::Var a, ad::Var h_matrix);
  struct Score {
    ad::Var d, y;
  };
  Score sentence_score(ad::Var c);

  SentenceVars build_classifier(const Batch& batch, int b, AttentionKind attention);
  SentenceVars classifier_from_reps(std::span<const ad::Var> word_reps, AttentionKind attention);
  TaggerVars build_tagger(const Batch& batch, int b);

  ad::Tape& tape() { return tape_; }

 private:
  struct LstmLeaves {
    ad::Var w, b;
    int hidden = 0;
  };

  std::vector<ad::Var> lstm_run(std::span<const ad::Var> inputs, const LstmLeaves& p,
                                bool reverse);
  ad::Var zero_state(int size);
  Mat draw_dropout_mask(Eigen::Index rows, Eigen::Index cols);

  ad::Tape& tape_;
  const ModelParams& params_;
  Mode mode_;
  double dropout_;
  Rng* dropout_rng_;

  LstmLeaves char_fwd_, char_bwd_, word_fwd_, word_bwd_;
  ad::Var w_h_, b_h_;
  ad::Var w_e_, b_e_, w_escore_, b_escore_, w_d_, b_d_, w_y_, b_y_;
  ad::Var w_tag_, b_tag_;
  Mat* emb_sink_ = nullptr;
  Mat* char_emb_sink_ = nullptr;
  std::map<int, ad::Var> zero_states_;
  std::map<std::string, ad::Var> char_cache_;
};

// Forward pass over a batch; one trace per sentence. Padded positions take no
// part in any computation. Train mode applies inverted dropout at the word
// representations and the combined representations; eval mode is
// deterministic. Non-finite trace values raise NumericalFault naming the
// first non-finite parameter block.
std::vector<ForwardTrace> forward(const Batch& batch, const ModelParams& params, Mode mode,
                                  AttentionKind attention, double dropout_prob = 0.0,
                                  Rng* dropout_rng = nullptr);

// Per-token probability distributions over {0, 1}, one T x 2 matrix per
// sentence (column 1 = positive class).
std::vector<Mat> supervised_forward(const Batch& batch, const ModelParams& params, Mode mode,
                                    double dropout_prob = 0.0, Rng* dropout_rng = nullptr);

}  // namespace zstag
