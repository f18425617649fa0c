#pragma once

#include "zstag/model.hpp"

namespace zstag {

// AdaDelta: per-parameter adaptive learning rates from decayed accumulators
// of squared gradients and squared updates.
//
//   Eg   <- rho * Eg + (1 - rho) * g^2
//   dx   <- -sqrt(Ex + eps) / sqrt(Eg + eps) * g
//   Ex   <- rho * Ex + (1 - rho) * dx^2
//   p    <- p + lr * dx
class AdaDelta {
 public:
  struct State {
    ModelParams acc_grad_sq;
    ModelParams acc_update_sq;
  };

  explicit AdaDelta(double learning_rate = 1.0, double rho = 0.95, double eps = 1e-6)
      : lr_(learning_rate), rho_(rho), eps_(eps) {}

  State make_state(const ModelParams& params) const {
    return {ModelParams::zeros_like(params), ModelParams::zeros_like(params)};
  }

  // Applies one update in place. A non-finite gradient raises NumericalFault
  // naming the offending tensor.
  void update(ModelParams& params, const ModelParams& grads, State& state) const;

  double learning_rate() const { return lr_; }
  double rho() const { return rho_; }
  double eps() const { return eps_; }

 private:
  double lr_, rho_, eps_;
};

// Scales all gradient tensors by clip/norm when the global L2 norm exceeds
// clip. clip <= 0 disables.
void clip_gradients(ModelParams& grads, double clip);

}  // namespace zstag
