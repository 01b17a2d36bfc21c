#pragma once

#include <cstdint>

#include "tse/network.hpp"

namespace tse {

struct AdamConfig {
  double rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double clip_norm = 0.0;  // 0 disables global-norm gradient clipping
};

struct AdamState {
  std::uint64_t step = 0;
  ParamBlock m;  // first-moment accumulator
  ParamBlock v;  // second-moment accumulator
  AdamConfig config;
};

AdamState init_adam(const NetworkParams& params, const AdamConfig& config);

// One bias-corrected update: m <- b1 m + (1-b1) g, v <- b2 v + (1-b2) g^2,
// theta <- theta - rate * m_hat / (sqrt(v_hat) + eps). Deterministic.
void adam_step(NetworkParams& params, const ParamBlock& grads, AdamState& state);

}  // namespace tse
