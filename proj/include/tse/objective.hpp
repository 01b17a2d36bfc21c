#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tse/matrix.hpp"
#include "tse/network.hpp"

namespace tse {

// A layer covariance that stays singular even after jitter.
class DegenerateCovarianceError : public std::runtime_error {
 public:
  DegenerateCovarianceError(std::size_t layer, std::size_t pivot)
      : std::runtime_error("degenerate layer covariance (layer " + std::to_string(layer) +
                           ", pivot " + std::to_string(pivot) + ")"),
        layer_(layer) {}
  std::size_t layer() const { return layer_; }

 private:
  std::size_t layer_;
};

struct ObjectiveConfig {
  std::vector<double> c;  // temporal-smoothing weight per layer
  std::vector<double> d;  // entropy weight per layer
  double jitter = 1e-6;   // ridge added to every layer covariance
};

struct ObjectiveValue {
  double f_ts = 0.0;
  double f_e = 0.0;
  double f_total = 0.0;  // always computed as f_ts - f_e
  std::vector<double> per_layer_ts;      // weighted contribution, sums to f_ts
  std::vector<double> per_layer_logdet;  // raw log det per layer; NaN where d == 0
};

struct TsResult {
  double value = 0.0;
  std::vector<double> per_layer;
  std::vector<Matrix> adjoints;  // d value / d activation, per layer
};

// Sum over clips of squared frame-to-frame activation differences,
// weighted per layer. Differences never straddle clip boundaries.
TsResult ts_value_and_adjoints(const ActivationTrace& trace, std::span<const double> c);

struct EntropyResult {
  double value = 0.0;
  std::vector<double> per_layer_logdet;
  std::vector<Matrix> adjoints;
};

// Weighted sum over layers of log det of the jittered activation
// covariance, pooled over all frames of all clips. The adjoint of frame
// vector a_t is d_l * (2/(T-1)) * C^-1 (a_t - mean); the mean's own
// dependence on a_t drops out because the centered frames sum to zero.
// Layers with d == 0 are skipped entirely (no factorization), so runs
// with the entropy term disabled survive collapsed activations.
EntropyResult entropy_value_and_adjoints(const ActivationTrace& trace,
                                         std::span<const double> d, double jitter);

struct StepResult {
  ObjectiveValue value;
  ParamBlock gradients;
};

// Forward pass, combined per-layer adjoints (smoothing minus entropy),
// backward pass. Returns the objective breakdown and d f_total / d params.
StepResult tse_step_gradient(const NetworkParams& params, const Matrix& inputs,
                             const std::vector<std::size_t>& clip_boundaries,
                             const ObjectiveConfig& config);

// Objective value only (no adjoints); used by finite-difference checks.
ObjectiveValue tse_value(const NetworkParams& params, const Matrix& inputs,
                         const std::vector<std::size_t>& clip_boundaries,
                         const ObjectiveConfig& config);

}  // namespace tse
