#include "tse/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace tse {

AdamState init_adam(const NetworkParams& params, const AdamConfig& config) {
  AdamState state;
  state.m = zeros_like(params);
  state.v = zeros_like(params);
  state.config = config;
  return state;
}

void adam_step(NetworkParams& params, const ParamBlock& grads, AdamState& state) {
  if (!same_shape(params, grads) || !same_shape(params, state.m) ||
      !same_shape(params, state.v))
    throw std::invalid_argument("adam_step: shape mismatch");

  double scale = 1.0;
  if (state.config.clip_norm > 0.0) {
    double sq = 0.0;
    for (std::size_t l = 0; l < grads.weights.size(); ++l) {
      for (std::size_t i = 0; i < grads.weights[l].size(); ++i) {
        const double g = grads.weights[l].data()[i];
        sq += g * g;
      }
      for (double g : grads.biases[l]) sq += g * g;
    }
    const double norm = std::sqrt(sq);
    if (norm > state.config.clip_norm) scale = state.config.clip_norm / norm;
  }

  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.config.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.config.beta2, static_cast<double>(state.step));
  const AdamConfig& cfg = state.config;

  auto update = [&](double* theta, const double* grad, double* m, double* v, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
      const double g = grad[i] * scale;
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      theta[i] -= cfg.rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
  };

  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    update(params.weights[l].data(), grads.weights[l].data(), state.m.weights[l].data(),
           state.v.weights[l].data(), params.weights[l].size());
    update(params.biases[l].data(), grads.biases[l].data(), state.m.biases[l].data(),
           state.v.biases[l].data(), params.biases[l].size());
  }
}

}  // namespace tse
