#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "tse/matrix.hpp"

namespace tse {

enum class Activation { kTanh, kLinear };

struct LayerSpec {
  std::size_t units;
  Activation activation = Activation::kTanh;
};

struct NetworkParams {
  std::size_t input_dim = 0;
  std::vector<Matrix> weights;              // layer l: N_l x N_{l-1}
  std::vector<std::vector<double>> biases;  // layer l: length N_l
  std::vector<Activation> activations;

  std::size_t layer_count() const { return weights.size(); }
  std::size_t units(std::size_t layer) const { return weights[layer].rows(); }
  std::size_t parameter_count() const;
};

// Gradients and optimizer moments share the parameter shapes.
struct ParamBlock {
  std::vector<Matrix> weights;
  std::vector<std::vector<double>> biases;
};

ParamBlock zeros_like(const NetworkParams& params);
bool same_shape(const NetworkParams& params, const ParamBlock& block);

// Every unit's activation at every time step of a batch, per layer, plus
// the inputs that produced them. Both training objectives are functions
// of this record.
struct ActivationTrace {
  Matrix inputs;                              // T x N_0
  std::vector<Matrix> layers;                 // layer l: T x N_l
  std::vector<std::size_t> clip_boundaries;   // first frame of each clip; starts at 0

  std::size_t frames() const { return inputs.rows(); }
};

// Frame-local forward pass recording all activations. Frames are rows;
// each layer is one matrix product over the whole batch.
ActivationTrace forward(const NetworkParams& params, Matrix inputs,
                        std::vector<std::size_t> clip_boundaries);

// Convenience when only the last layer is needed (evaluation paths).
Matrix forward_output(const NetworkParams& params, const Matrix& inputs);

// Reverse accumulation of d(sum_l sum_{t,k} adjoint[l](t,k) * a[l](t,k))
// w.r.t. the parameters. `adjoints` supplies an external adjoint on every
// layer's activations; the running adjoint at layer l adds what flows back
// from layer l+1 before crossing the activation derivative.
ParamBlock backward(const NetworkParams& params, const ActivationTrace& trace,
                    const std::vector<Matrix>& adjoints);

// Glorot-uniform weights (bound sqrt(6/(fan_in+fan_out))), zero biases.
// Deterministic per seed.
NetworkParams init_params(std::size_t input_dim, const std::vector<LayerSpec>& layer_specs,
                          std::uint64_t seed);

}  // namespace tse
