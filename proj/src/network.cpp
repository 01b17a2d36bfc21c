#include "tse/network.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace tse {

std::size_t NetworkParams::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l)
    n += weights[l].size() + biases[l].size();
  return n;
}

ParamBlock zeros_like(const NetworkParams& params) {
  ParamBlock block;
  block.weights.reserve(params.weights.size());
  block.biases.reserve(params.biases.size());
  for (std::size_t l = 0; l < params.layer_count(); ++l) {
    block.weights.emplace_back(params.weights[l].rows(), params.weights[l].cols());
    block.biases.emplace_back(params.biases[l].size(), 0.0);
  }
  return block;
}

bool same_shape(const NetworkParams& params, const ParamBlock& block) {
  if (block.weights.size() != params.weights.size() ||
      block.biases.size() != params.biases.size())
    return false;
  for (std::size_t l = 0; l < params.layer_count(); ++l) {
    if (!block.weights[l].same_shape(params.weights[l])) return false;
    if (block.biases[l].size() != params.biases[l].size()) return false;
  }
  return true;
}

namespace {

void validate_boundaries(const std::vector<std::size_t>& boundaries, std::size_t frames) {
  if (boundaries.empty() || boundaries.front() != 0)
    throw std::invalid_argument("clip_boundaries must start at 0");
  for (std::size_t i = 1; i < boundaries.size(); ++i)
    if (boundaries[i] <= boundaries[i - 1])
      throw std::invalid_argument("clip_boundaries must be strictly increasing");
  if (boundaries.back() >= frames && frames > 0)
    throw std::invalid_argument("clip boundary beyond frame count");
}

}  // namespace

ActivationTrace forward(const NetworkParams& params, Matrix inputs,
                        std::vector<std::size_t> clip_boundaries) {
  if (inputs.cols() != params.input_dim)
    throw std::invalid_argument("forward: input dimension mismatch");
  if (!inputs.all_finite())
    throw std::invalid_argument("forward: non-finite input");
  validate_boundaries(clip_boundaries, inputs.rows());

  ActivationTrace trace;
  trace.clip_boundaries = std::move(clip_boundaries);
  trace.layers.reserve(params.layer_count());

  const Matrix* below = &inputs;
  for (std::size_t l = 0; l < params.layer_count(); ++l) {
    Matrix act = matmul_transposed_b(*below, params.weights[l]);  // T x N_l
    const std::vector<double>& bias = params.biases[l];
    const bool is_tanh = params.activations[l] == Activation::kTanh;
    for (std::size_t t = 0; t < act.rows(); ++t) {
      auto row = act.row(t);
      for (std::size_t k = 0; k < row.size(); ++k) {
        const double z = row[k] + bias[k];
        row[k] = is_tanh ? std::tanh(z) : z;
      }
    }
    trace.layers.push_back(std::move(act));
    below = &trace.layers.back();
  }
  trace.inputs = std::move(inputs);
  return trace;
}

Matrix forward_output(const NetworkParams& params, const Matrix& inputs) {
  if (inputs.cols() != params.input_dim)
    throw std::invalid_argument("forward_output: input dimension mismatch");
  Matrix current = inputs;
  for (std::size_t l = 0; l < params.layer_count(); ++l) {
    Matrix act = matmul_transposed_b(current, params.weights[l]);
    const std::vector<double>& bias = params.biases[l];
    const bool is_tanh = params.activations[l] == Activation::kTanh;
    for (std::size_t t = 0; t < act.rows(); ++t) {
      auto row = act.row(t);
      for (std::size_t k = 0; k < row.size(); ++k) {
        const double z = row[k] + bias[k];
        row[k] = is_tanh ? std::tanh(z) : z;
      }
    }
    current = std::move(act);
  }
  return current;
}

ParamBlock backward(const NetworkParams& params, const ActivationTrace& trace,
                    const std::vector<Matrix>& adjoints) {
  const std::size_t depth = params.layer_count();
  if (trace.layers.size() != depth || adjoints.size() != depth)
    throw std::invalid_argument("backward: layer count mismatch");
  for (std::size_t l = 0; l < depth; ++l)
    if (!adjoints[l].same_shape(trace.layers[l]))
      throw std::invalid_argument("backward: adjoint shape mismatch");

  ParamBlock grads = zeros_like(params);
  Matrix delta;  // pre-activation adjoint of the layer above, T x N_{l+1}
  for (std::size_t l = depth; l-- > 0;) {
    Matrix running = adjoints[l];
    if (l + 1 < depth) {
      // Add the contribution flowing back from layer l+1.
      const Matrix& w_above = params.weights[l + 1];  // N_{l+1} x N_l
      Matrix back = matmul(delta, w_above);           // T x N_l
      for (std::size_t i = 0; i < running.size(); ++i)
        running.data()[i] += back.data()[i];
    }
    const Matrix& act = trace.layers[l];
    if (params.activations[l] == Activation::kTanh) {
      for (std::size_t i = 0; i < running.size(); ++i) {
        const double a = act.data()[i];
        running.data()[i] *= 1.0 - a * a;
      }
    }
    const Matrix& below = (l == 0) ? trace.inputs : trace.layers[l - 1];
    grads.weights[l] = matmul_transposed_a(running, below);  // N_l x N_{l-1}
    std::vector<double>& gb = grads.biases[l];
    for (std::size_t t = 0; t < running.rows(); ++t) {
      auto row = running.row(t);
      for (std::size_t k = 0; k < row.size(); ++k) gb[k] += row[k];
    }
    delta = std::move(running);
  }
  return grads;
}

NetworkParams init_params(std::size_t input_dim, const std::vector<LayerSpec>& layer_specs,
                          std::uint64_t seed) {
  if (layer_specs.empty()) throw std::invalid_argument("init_params: need at least one layer");
  if (input_dim == 0) throw std::invalid_argument("init_params: input_dim must be positive");

  NetworkParams params;
  params.input_dim = input_dim;
  std::mt19937_64 rng(seed);
  std::size_t fan_in = input_dim;
  for (const LayerSpec& spec : layer_specs) {
    if (spec.units == 0) throw std::invalid_argument("init_params: layer with zero units");
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + spec.units));
    std::uniform_real_distribution<double> uniform(-bound, bound);
    Matrix w(spec.units, fan_in);
    for (std::size_t i = 0; i < w.size(); ++i) w.data()[i] = uniform(rng);
    params.weights.push_back(std::move(w));
    params.biases.emplace_back(spec.units, 0.0);
    params.activations.push_back(spec.activation);
    fan_in = spec.units;
  }
  return params;
}

}  // namespace tse
