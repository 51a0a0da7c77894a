#pragma once

#include <span>
#include <vector>

#include "pursuit/autodiff/tape.hpp"

namespace pursuit::ad {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  long step = 0;
  std::vector<Matrix> m;
  std::vector<Matrix> v;
};

// Bias-corrected Adam update of every parameter from its accumulated grad.
// The state is sized on first use.
void adam_step(std::span<Parameter* const> params, AdamState& state, const AdamConfig& cfg);

}  // namespace pursuit::ad
