#include "pursuit/autodiff/adam.hpp"

#include <cmath>

namespace pursuit::ad {

void adam_step(std::span<Parameter* const> params, AdamState& state, const AdamConfig& cfg) {
  if (state.m.empty()) {
    for (const Parameter* p : params) {
      state.m.emplace_back(p->value.rows(), p->value.cols());
      state.v.emplace_back(p->value.rows(), p->value.cols());
    }
  }
  if (state.m.size() != params.size()) throw ShapeError("adam state does not match parameter list");
  ++state.step;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter& p = *params[k];
    Matrix& m = state.m[k];
    Matrix& v = state.v[k];
    if (!m.same_shape(p.value) || !p.grad.same_shape(p.value)) throw ShapeError("adam shape mismatch for " + p.name);
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
      p.value[i] -= cfg.lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg.eps);
    }
  }
}

}  // namespace pursuit::ad
