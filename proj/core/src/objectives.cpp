#include "zstag/objectives.hpp"

#include <algorithm>
#include <cmath>

#include "zstag/errors.hpp"

namespace zstag {

double loss_l1(std::span<const double> y, std::span<const int> gold) {
  if (y.size() != gold.size()) throw ContractError("loss_l1: length mismatch");
  double total = 0.0;
  for (std::size_t j = 0; j < y.size(); ++j) {
    const double diff = y[j] - gold[j];
    total += diff * diff;
  }
  return total;
}

double loss_l2(const std::vector<std::vector<double>>& a_tilde) {
  double total = 0.0;
  for (const auto& sent : a_tilde) {
    if (sent.empty()) throw ContractError("loss_l2: sentence with no unmasked tokens");
    const double mn = *std::min_element(sent.begin(), sent.end());
    total += mn * mn;
  }
  return total;
}

double loss_l3(const std::vector<std::vector<double>>& a_tilde, std::span<const int> gold) {
  if (a_tilde.size() != gold.size()) throw ContractError("loss_l3: length mismatch");
  double total = 0.0;
  for (std::size_t j = 0; j < a_tilde.size(); ++j) {
    if (a_tilde[j].empty()) throw ContractError("loss_l3: sentence with no unmasked tokens");
    const double mx = *std::max_element(a_tilde[j].begin(), a_tilde[j].end());
    const double diff = mx - gold[j];
    total += diff * diff;
  }
  return total;
}

LossBreakdown combined_loss(const std::vector<ForwardTrace>& traces, std::span<const int> gold,
                            double gamma, Reduction reduction) {
  if (traces.size() != gold.size()) throw ContractError("combined_loss: length mismatch");
  if (gamma < 0.0) throw ContractError("combined_loss: gamma must be nonnegative");
  LossBreakdown out;
  out.gamma = gamma;
  const bool logistic =
      traces.empty() || traces.front().attention == AttentionKind::kLogistic;
  std::vector<double> ys;
  std::vector<std::vector<double>> a_tilde;
  for (const ForwardTrace& t : traces) {
    if ((t.attention == AttentionKind::kLogistic) != logistic) {
      throw ContractError("combined_loss: mixed attention modes in one batch");
    }
    ys.push_back(t.y);
    if (logistic) {
      a_tilde.emplace_back(t.a_tilde.data(), t.a_tilde.data() + t.a_tilde.size());
    }
  }
  out.l1 = loss_l1(ys, gold);
  if (logistic) {
    out.l2 = loss_l2(a_tilde);
    out.l3 = loss_l3(a_tilde, gold);
  }
  if (reduction == Reduction::kMean && !traces.empty()) {
    const double n = static_cast<double>(traces.size());
    out.l1 /= n;
    out.l2 /= n;
    out.l3 /= n;
  }
  out.total = out.l1 + gamma * (out.l2 + out.l3);
  return out;
}

double token_cross_entropy(const std::vector<Mat>& distributions,
                           const std::vector<std::vector<int>>& gold) {
  if (distributions.size() != gold.size()) {
    throw ContractError("token_cross_entropy: length mismatch");
  }
  double total = 0.0;
  long count = 0;
  for (std::size_t j = 0; j < distributions.size(); ++j) {
    const Mat& dist = distributions[j];
    if (static_cast<std::size_t>(dist.rows()) != gold[j].size()) {
      throw ContractError("token_cross_entropy: token count mismatch");
    }
    for (Eigen::Index t = 0; t < dist.rows(); ++t) {
      const double p = std::max(dist(t, gold[j][t]), 1e-12);
      total += -std::log(p);
      ++count;
    }
  }
  if (count == 0) throw ContractError("token_cross_entropy: no tokens");
  return total / static_cast<double>(count);
}

LossVars build_combined_loss(ad::Tape& tape, std::span<const ModelGraph::SentenceVars> sentences,
                             std::span<const int> gold, double gamma, Reduction reduction) {
  if (sentences.size() != gold.size()) throw ContractError("build_combined_loss: length mismatch");
  if (sentences.empty()) throw ContractError("build_combined_loss: empty batch");
  if (gamma < 0.0) throw ContractError("build_combined_loss: gamma must be nonnegative");

  ad::Var l1, l2, l3;
  const bool logistic = sentences[0].a_tilde.valid();
  for (std::size_t j = 0; j < sentences.size(); ++j) {
    const auto& s = sentences[j];
    if (gold[j] != 0 && gold[j] != 1) throw ContractError("gold sentence label must be 0 or 1");
    ad::Var term1 = tape.square(tape.sub(s.y, tape.scalar(gold[j])));
    l1 = l1.valid() ? tape.add(l1, term1) : term1;
    if (logistic) {
      ad::Var term2 = tape.square(tape.min_all(s.a_tilde));
      ad::Var term3 = tape.square(tape.sub(tape.max_all(s.a_tilde), tape.scalar(gold[j])));
      l2 = l2.valid() ? tape.add(l2, term2) : term2;
      l3 = l3.valid() ? tape.add(l3, term3) : term3;
    }
  }
  if (reduction == Reduction::kMean) {
    const double inv = 1.0 / static_cast<double>(sentences.size());
    l1 = tape.scale(l1, inv);
    if (logistic) {
      l2 = tape.scale(l2, inv);
      l3 = tape.scale(l3, inv);
    }
  }
  LossVars out;
  out.l1 = l1;
  out.l2 = logistic ? l2 : tape.scalar(0.0);
  out.l3 = logistic ? l3 : tape.scalar(0.0);
  out.total = logistic ? tape.add(l1, tape.scale(tape.add(l2, l3), gamma)) : l1;
  return out;
}

ad::Var build_token_cross_entropy(ad::Tape& tape,
                                  std::span<const ModelGraph::TaggerVars> sentences,
                                  const std::vector<std::vector<int>>& gold) {
  if (sentences.size() != gold.size()) {
    throw ContractError("build_token_cross_entropy: length mismatch");
  }
  ad::Var sum;
  long count = 0;
  for (std::size_t j = 0; j < sentences.size(); ++j) {
    const auto& s = sentences[j];
    if (s.log_probs.size() != gold[j].size()) {
      throw ContractError("build_token_cross_entropy: token count mismatch");
    }
    for (std::size_t t = 0; t < s.log_probs.size(); ++t) {
      ad::Var nll = tape.scale(tape.pick(s.log_probs[t], gold[j][t]), -1.0);
      sum = sum.valid() ? tape.add(sum, nll) : nll;
      ++count;
    }
  }
  if (count == 0) throw ContractError("build_token_cross_entropy: no tokens");
  return tape.scale(sum, 1.0 / static_cast<double>(count));
}

}  // namespace zstag
