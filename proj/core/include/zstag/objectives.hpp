#pragma once

#include <span>
#include <vector>

#include "zstag/autodiff.hpp"
#include "zstag/model.hpp"

namespace zstag {

enum class Reduction { kSum, kMean };

struct LossBreakdown {
  double l1 = 0.0;
  double l2 = 0.0;
  double l3 = 0.0;
  double gamma = 0.0;
  double total = 0.0;  // l1 + gamma * (l2 + l3)
};

// --- numeric losses (reporting and tests) -----------------------------------

// Sum over the batch of (y - gold)^2.
double loss_l1(std::span<const double> y, std::span<const int> gold);

// Sum over sentences of (min unnormalized attention weight)^2. Vectors hold
// only unmasked positions.
double loss_l2(const std::vector<std::vector<double>>& a_tilde);

// Sum over sentences of (max unnormalized attention weight - gold)^2.
double loss_l3(const std::vector<std::vector<double>>& a_tilde, std::span<const int> gold);

LossBreakdown combined_loss(const std::vector<ForwardTrace>& traces, std::span<const int> gold,
                            double gamma, Reduction reduction = Reduction::kSum);

// Mean over unmasked tokens of -log p(gold label); probabilities clamped at
// 1e-12 before the log. Rows of each matrix are tokens, column 1 the positive
// class.
double token_cross_entropy(const std::vector<Mat>& distributions,
                           const std::vector<std::vector<int>>& gold);

// --- differentiable losses (training) ----------------------------------------

struct LossVars {
  ad::Var total, l1, l2, l3;
};

// The attention-range auxiliary losses are defined on the unnormalized
// logistic weights; under exp attention only the sentence loss applies.
LossVars build_combined_loss(ad::Tape& tape, std::span<const ModelGraph::SentenceVars> sentences,
                             std::span<const int> gold, double gamma,
                             Reduction reduction = Reduction::kSum);

ad::Var build_token_cross_entropy(ad::Tape& tape,
                                  std::span<const ModelGraph::TaggerVars> sentences,
                                  const std::vector<std::vector<int>>& gold);

}  // namespace zstag
