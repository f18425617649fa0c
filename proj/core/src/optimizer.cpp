#include "zstag/optimizer.hpp"

#include <cmath>
#include <string>

#include "zstag/errors.hpp"

namespace zstag {

void AdaDelta::update(ModelParams& params, const ModelParams& grads, State& state) const {
  grads.visit([](const char* name, const Mat& g) {
    if (!g.allFinite()) {
      throw NumericalFault(std::string("non-finite gradient in tensor ") + name +
                           "; aborting epoch");
    }
  });

  params.visit([&](const char* name, Mat& p) {
    const Mat* g = nullptr;
    grads.visit([&](const char* n, const Mat& m) {
      if (std::string_view(n) == name) g = &m;
    });
    Mat* eg = nullptr;
    Mat* ex = nullptr;
    state.acc_grad_sq.visit([&](const char* n, Mat& m) {
      if (std::string_view(n) == name) eg = &m;
    });
    state.acc_update_sq.visit([&](const char* n, Mat& m) {
      if (std::string_view(n) == name) ex = &m;
    });

    eg->array() = rho_ * eg->array() + (1.0 - rho_) * g->array().square();
    const Eigen::ArrayXXd dx =
        -((ex->array() + eps_).sqrt() / (eg->array() + eps_).sqrt()) * g->array();
    ex->array() = rho_ * ex->array() + (1.0 - rho_) * dx.square();
    p.array() += lr_ * dx;
  });
}

void clip_gradients(ModelParams& grads, double clip) {
  if (clip <= 0.0) return;
  double sq = 0.0;
  grads.visit([&sq](const char*, const Mat& g) { sq += g.squaredNorm(); });
  const double norm = std::sqrt(sq);
  if (norm <= clip || norm == 0.0) return;
  const double scale = clip / norm;
  grads.visit([scale](const char*, Mat& g) { g *= scale; });
}

}  // namespace zstag
