#include "zstag/model.hpp"

#include <cmath>

#include "zstag/errors.hpp"

namespace zstag {

namespace {

constexpr double kAttentionSumFloor = 1e-12;

bool finite(const Mat& m) { return m.allFinite(); }

}  // namespace

void DimensionConfig::validate() const {
  const int values[] = {word_emb_dim, char_emb_dim, char_hidden,
                        word_hidden,  combined_h,   attention_e, sentence_d};
  for (int v : values) {
    if (v <= 0) throw ContractError("DimensionConfig: all dimensions must be positive");
  }
}

Mat glorot_uniform(int rows, int cols, Rng& rng) {
  const double limit = std::sqrt(6.0 / (rows + cols));
  Mat m(rows, cols);
  for (int j = 0; j < cols; ++j) {
    for (int i = 0; i < rows; ++i) m(i, j) = rng.uniform(-limit, limit);
  }
  return m;
}

namespace {

LstmParams init_lstm(int input, int hidden, Rng& rng) {
  LstmParams p;
  p.w = glorot_uniform(4 * hidden, input + hidden, rng);
  p.b = Mat::Zero(4 * hidden, 1);
  p.b.block(hidden, 0, hidden, 1).setOnes();  // forget gate bias
  return p;
}

}  // namespace

ModelParams ModelParams::init(const DimensionConfig& dims, ModelKind kind, int word_rows,
                              int char_rows, Rng& rng) {
  dims.validate();
  ModelParams p;
  p.dims = dims;
  p.kind = kind;
  p.word_emb = glorot_uniform(word_rows, dims.word_emb_dim, rng);
  p.word_emb.row(Vocab::kPadId).setZero();
  p.char_emb = glorot_uniform(char_rows, dims.char_emb_dim, rng);
  p.char_emb.row(Vocab::kPadId).setZero();
  p.char_fwd = init_lstm(dims.char_emb_dim, dims.char_hidden, rng);
  p.char_bwd = init_lstm(dims.char_emb_dim, dims.char_hidden, rng);
  p.word_fwd = init_lstm(dims.word_rep_dim(), dims.word_hidden, rng);
  p.word_bwd = init_lstm(dims.word_rep_dim(), dims.word_hidden, rng);
  p.w_h = glorot_uniform(dims.combined_h, 2 * dims.word_hidden, rng);
  p.b_h = Mat::Zero(dims.combined_h, 1);
  if (kind == ModelKind::kSentenceClassifier) {
    p.w_e = glorot_uniform(dims.attention_e, dims.combined_h, rng);
    p.b_e = Mat::Zero(dims.attention_e, 1);
    p.w_escore = glorot_uniform(1, dims.attention_e, rng);
    p.b_escore = Mat::Zero(1, 1);
    p.w_d = glorot_uniform(dims.sentence_d, dims.combined_h, rng);
    p.b_d = Mat::Zero(dims.sentence_d, 1);
    p.w_y = glorot_uniform(1, dims.sentence_d, rng);
    p.b_y = Mat::Zero(1, 1);
  } else {
    p.w_tag = glorot_uniform(2, dims.combined_h, rng);
    p.b_tag = Mat::Zero(2, 1);
  }
  return p;
}

ModelParams ModelParams::zeros_like(const ModelParams& other) {
  ModelParams p;
  p.dims = other.dims;
  p.kind = other.kind;
  other.visit([&p](const char* name, const Mat& m) {
    p.visit([&](const char* n, Mat& target) {
      if (std::string_view(n) == name) target = Mat::Zero(m.rows(), m.cols());
    });
  });
  return p;
}

std::optional<std::string> ModelParams::first_non_finite() const {
  std::optional<std::string> bad;
  visit([&bad](const char* name, const Mat& m) {
    if (!bad && !finite(m)) bad = name;
  });
  return bad;
}

ModelGraph::ModelGraph(ad::Tape& tape, const ModelParams& params, ModelParams* grad_sink,
                       Mode mode, double dropout_prob, Rng* dropout_rng)
    : tape_(tape), params_(params), mode_(mode), dropout_(dropout_prob),
      dropout_rng_(dropout_rng) {
  if (mode_ == Mode::kTrain && dropout_ > 0.0 && dropout_rng_ == nullptr) {
    throw ContractError("ModelGraph: train-mode dropout requires an rng");
  }
  auto sink = [&](Mat ModelParams::* member) -> Mat* {
    return grad_sink ? &(grad_sink->*member) : nullptr;
  };
  auto leaf = [&](const Mat& m, Mat* s) { return tape_.leaf(m, s); };

  char_fwd_ = {leaf(params.char_fwd.w, grad_sink ? &grad_sink->char_fwd.w : nullptr),
               leaf(params.char_fwd.b, grad_sink ? &grad_sink->char_fwd.b : nullptr),
               params.dims.char_hidden};
  char_bwd_ = {leaf(params.char_bwd.w, grad_sink ? &grad_sink->char_bwd.w : nullptr),
               leaf(params.char_bwd.b, grad_sink ? &grad_sink->char_bwd.b : nullptr),
               params.dims.char_hidden};
  word_fwd_ = {leaf(params.word_fwd.w, grad_sink ? &grad_sink->word_fwd.w : nullptr),
               leaf(params.word_fwd.b, grad_sink ? &grad_sink->word_fwd.b : nullptr),
               params.dims.word_hidden};
  word_bwd_ = {leaf(params.word_bwd.w, grad_sink ? &grad_sink->word_bwd.w : nullptr),
               leaf(params.word_bwd.b, grad_sink ? &grad_sink->word_bwd.b : nullptr),
               params.dims.word_hidden};
  w_h_ = leaf(params.w_h, sink(&ModelParams::w_h));
  b_h_ = leaf(params.b_h, sink(&ModelParams::b_h));
  if (params.kind == ModelKind::kSentenceClassifier) {
    w_e_ = leaf(params.w_e, sink(&ModelParams::w_e));
    b_e_ = leaf(params.b_e, sink(&ModelParams::b_e));
    w_escore_ = leaf(params.w_escore, sink(&ModelParams::w_escore));
    b_escore_ = leaf(params.b_escore, sink(&ModelParams::b_escore));
    w_d_ = leaf(params.w_d, sink(&ModelParams::w_d));
    b_d_ = leaf(params.b_d, sink(&ModelParams::b_d));
    w_y_ = leaf(params.w_y, sink(&ModelParams::w_y));
    b_y_ = leaf(params.b_y, sink(&ModelParams::b_y));
  } else {
    w_tag_ = leaf(params.w_tag, sink(&ModelParams::w_tag));
    b_tag_ = leaf(params.b_tag, sink(&ModelParams::b_tag));
  }
  emb_sink_ = grad_sink ? &grad_sink->word_emb : nullptr;
  char_emb_sink_ = grad_sink ? &grad_sink->char_emb : nullptr;
}

ad::Var ModelGraph::zero_state(int size) {
  auto it = zero_states_.find(size);
  if (it != zero_states_.end()) return it->second;
  ad::Var v = tape_.leaf(Mat::Zero(size, 1));
  zero_states_[size] = v;
  return v;
}

Mat ModelGraph::draw_dropout_mask(Eigen::Index rows, Eigen::Index cols) {
  Mat mask(rows, cols);
  const double keep_scale = 1.0 / (1.0 - dropout_);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      mask(i, j) = dropout_rng_->next_double() < dropout_ ? 0.0 : keep_scale;
    }
  }
  return mask;
}

std::vector<ad::Var> ModelGraph::lstm_run(std::span<const ad::Var> inputs, const LstmLeaves& p,
                                          bool reverse) {
  const int h = p.hidden;
  std::vector<ad::Var> states(inputs.size());
  ad::Var prev_h = zero_state(h);
  ad::Var prev_c = zero_state(h);
  const int n = static_cast<int>(inputs.size());
  for (int step = 0; step < n; ++step) {
    const int pos = reverse ? n - 1 - step : step;
    ad::Var xh = tape_.concat_rows(inputs[pos], prev_h);
    ad::Var z = tape_.add(tape_.matmul(p.w, xh), p.b);
    ad::Var gi = tape_.sigmoid(tape_.slice_rows(z, 0, h));
    ad::Var gf = tape_.sigmoid(tape_.slice_rows(z, h, h));
    ad::Var go = tape_.sigmoid(tape_.slice_rows(z, 2 * h, h));
    ad::Var gc = tape_.tanh(tape_.slice_rows(z, 3 * h, h));
    ad::Var c = tape_.add(tape_.cmul(gf, prev_c), tape_.cmul(gi, gc));
    ad::Var hid = tape_.cmul(go, tape_.tanh(c));
    states[pos] = hid;
    prev_h = hid;
    prev_c = c;
  }
  return states;
}

ad::Var ModelGraph::char_encode(std::span<const int> char_ids) {
  if (char_ids.empty()) throw ContractError("char_encode: empty character sequence");
  std::string key;
  key.reserve(char_ids.size() * 2);
  for (int id : char_ids) {
    key.push_back(static_cast<char>(id & 0xff));
    key.push_back(static_cast<char>((id >> 8) & 0xff));
  }
  auto it = char_cache_.find(key);
  if (it != char_cache_.end()) return it->second;

  std::vector<ad::Var> embs;
  embs.reserve(char_ids.size());
  for (int id : char_ids) embs.push_back(tape_.lookup_row(params_.char_emb, char_emb_sink_, id));
  std::vector<ad::Var> fwd = lstm_run(embs, char_fwd_, false);
  std::vector<ad::Var> bwd = lstm_run(embs, char_bwd_, true);
  ad::Var rep = tape_.concat_rows(fwd.back(), bwd.front());
  char_cache_[key] = rep;
  return rep;
}

std::vector<ad::Var> ModelGraph::token_reps(const Batch& batch, int b) {
  const int len = batch.lengths[b];
  std::vector<ad::Var> reps;
  reps.reserve(len);
  for (int t = 0; t < len; ++t) {
    ad::Var emb = tape_.lookup_row(params_.word_emb, emb_sink_, batch.word_ids(b, t));
    const int clen = batch.char_lengths[b][t];
    std::vector<int> ids(clen);
    for (int c = 0; c < clen; ++c) ids[c] = batch.char_ids[b](t, c);
    reps.push_back(tape_.concat_rows(emb, char_encode(ids)));
  }
  return reps;
}

ad::Var ModelGraph::encode_sentence(std::span<const ad::Var> word_reps) {
  if (word_reps.empty()) throw ContractError("encode_sentence: empty sentence");
  ad::Var wmat = tape_.hstack(word_reps);
  if (mode_ == Mode::kTrain && dropout_ > 0.0) {
    wmat = tape_.cmul_const(wmat, draw_dropout_mask(tape_.value(wmat).rows(),
                                                    tape_.value(wmat).cols()));
  }
  const int n = static_cast<int>(word_reps.size());
  std::vector<ad::Var> xs(n);
  for (int t = 0; t < n; ++t) xs[t] = tape_.col(wmat, t);
  std::vector<ad::Var> fwd = lstm_run(xs, word_fwd_, false);
  std::vector<ad::Var> bwd = lstm_run(xs, word_bwd_, true);
  std::vector<ad::Var> both(n);
  for (int t = 0; t < n; ++t) both[t] = tape_.concat_rows(fwd[t], bwd[t]);
  ad::Var h = tape_.tanh(tape_.add_broadcast(tape_.matmul(w_h_, tape_.hstack(both)), b_h_));
  if (mode_ == Mode::kTrain && dropout_ > 0.0) {
    h = tape_.cmul_const(h, draw_dropout_mask(tape_.value(h).rows(), tape_.value(h).cols()));
  }
  return h;
}

ad::Var ModelGraph::attention_scores(ad::Var h_matrix) {
  ad::Var e = tape_.tanh(tape_.add_broadcast(tape_.matmul(w_e_, h_matrix), b_e_));
  ad::Var scores = tape_.add_broadcast(tape_.matmul(w_escore_, e), b_escore_);
  return tape_.transpose(scores);
}

ModelGraph::SoftAttention ModelGraph::soft_attention(ad::Var e_tilde) {
  SoftAttention out;
  out.a_tilde = tape_.sigmoid(e_tilde);
  ad::Var total = tape_.sum_all(out.a_tilde);
  if (tape_.value(total)(0, 0) < kAttentionSumFloor) {
    // Degenerate sentence: every weight underflowed. Fall back to uniform
    // attention; gradients flow only through the a_tilde branch.
    const Eigen::Index n = tape_.value(e_tilde).rows();
    out.a = tape_.leaf(Mat::Constant(n, 1, 1.0 / static_cast<double>(n)));
    out.uniform_fallback = true;
    return out;
  }
  out.a = tape_.div_by_scalar(out.a_tilde, total);
  return out;
}

ad::Var ModelGraph::exp_attention(ad::Var e_tilde) { return tape_.softmax(e_tilde); }

ad::Var ModelGraph::sentence_representation(ad::Var a, ad::Var h_matrix) {
  return tape_.matmul(h_matrix, a);
}

ModelGraph::Score ModelGraph::sentence_score(ad::Var c) {
  Score s;
  s.d = tape_.tanh(tape_.add(tape_.matmul(w_d_, c), b_d_));
  s.y = tape_.sigmoid(tape_.add(tape_.matmul(w_y_, s.d), b_y_));
  return s;
}

ModelGraph::SentenceVars ModelGraph::build_classifier(const Batch& batch, int b,
                                                      AttentionKind attention) {
  return classifier_from_reps(token_reps(batch, b), attention);
}

ModelGraph::SentenceVars ModelGraph::classifier_from_reps(std::span<const ad::Var> word_reps,
                                                          AttentionKind attention) {
  if (params_.kind != ModelKind::kSentenceClassifier) {
    throw ContractError("classifier graph requested from tagger parameters");
  }
  SentenceVars out;
  out.word_reps.assign(word_reps.begin(), word_reps.end());
  out.h_matrix = encode_sentence(word_reps);
  out.e_tilde = attention_scores(out.h_matrix);
  if (attention == AttentionKind::kLogistic) {
    SoftAttention sa = soft_attention(out.e_tilde);
    out.a_tilde = sa.a_tilde;
    out.a = sa.a;
    out.uniform_fallback = sa.uniform_fallback;
  } else {
    out.a = exp_attention(out.e_tilde);
  }
  out.c = sentence_representation(out.a, out.h_matrix);
  Score s = sentence_score(out.c);
  out.d = s.d;
  out.y = s.y;
  return out;
}

ModelGraph::TaggerVars ModelGraph::build_tagger(const Batch& batch, int b) {
  if (params_.kind != ModelKind::kTokenTagger) {
    throw ContractError("tagger graph requested from classifier parameters");
  }
  TaggerVars out;
  out.word_reps = token_reps(batch, b);
  out.h_matrix = encode_sentence(out.word_reps);
  const int len = batch.lengths[b];
  out.log_probs.reserve(len);
  for (int t = 0; t < len; ++t) {
    ad::Var logits = tape_.add(tape_.matmul(w_tag_, tape_.col(out.h_matrix, t)), b_tag_);
    out.log_probs.push_back(tape_.log_softmax(logits));
  }
  return out;
}

namespace {

[[noreturn]] void raise_numerical_fault(const ModelParams& params, int sentence_index) {
  const auto bad = params.first_non_finite();
  std::string msg = "non-finite value in forward trace (batch sentence " +
                    std::to_string(sentence_index) + "); ";
  msg += bad ? "first non-finite parameter block: " + *bad
             : "all parameter blocks finite; fault arose during composition";
  throw NumericalFault(msg);
}

}  // namespace

std::vector<ForwardTrace> forward(const Batch& batch, const ModelParams& params, Mode mode,
                                  AttentionKind attention, double dropout_prob,
                                  Rng* dropout_rng) {
  ad::Tape tape;
  ModelGraph graph(tape, params, nullptr, mode, dropout_prob, dropout_rng);
  std::vector<ForwardTrace> traces;
  traces.reserve(batch.size());
  for (int b = 0; b < batch.size(); ++b) {
    ModelGraph::SentenceVars vars = graph.build_classifier(batch, b, attention);
    ForwardTrace t;
    t.h = tape.value(vars.h_matrix).transpose();
    t.e_tilde = tape.value(vars.e_tilde).col(0);
    if (attention == AttentionKind::kLogistic) t.a_tilde = tape.value(vars.a_tilde).col(0);
    t.a = tape.value(vars.a).col(0);
    t.c = tape.value(vars.c).col(0);
    t.d = tape.value(vars.d).col(0);
    t.y = tape.value(vars.y)(0, 0);
    t.attention = attention;
    t.uniform_fallback = vars.uniform_fallback;
    if (!std::isfinite(t.y) || !t.h.allFinite() || !t.a.allFinite()) {
      raise_numerical_fault(params, b);
    }
    traces.push_back(std::move(t));
  }
  return traces;
}

std::vector<Mat> supervised_forward(const Batch& batch, const ModelParams& params, Mode mode,
                                    double dropout_prob, Rng* dropout_rng) {
  ad::Tape tape;
  ModelGraph graph(tape, params, nullptr, mode, dropout_prob, dropout_rng);
  std::vector<Mat> out;
  out.reserve(batch.size());
  for (int b = 0; b < batch.size(); ++b) {
    ModelGraph::TaggerVars vars = graph.build_tagger(batch, b);
    Mat probs(batch.lengths[b], 2);
    for (int t = 0; t < batch.lengths[b]; ++t) {
      const Mat& lp = tape.value(vars.log_probs[t]);
      probs(t, 0) = std::exp(lp(0, 0));
      probs(t, 1) = std::exp(lp(1, 0));
    }
    if (!probs.allFinite()) raise_numerical_fault(params, b);
    out.push_back(std::move(probs));
  }
  return out;
}

}  // namespace zstag
