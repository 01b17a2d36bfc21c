#include "tse/objective.hpp"

#include <cmath>
#include <limits>

#include "tse/numerics.hpp"

namespace tse {

namespace {

void check_layer_weights(const ActivationTrace& trace, std::span<const double> weights,
                         const char* which) {
  if (weights.size() != trace.layers.size())
    throw std::invalid_argument(std::string(which) + ": weight count does not match layer count");
}

std::vector<std::size_t> clip_ends(const ActivationTrace& trace) {
  std::vector<std::size_t> ends(trace.clip_boundaries.begin() + 1, trace.clip_boundaries.end());
  ends.push_back(trace.frames());
  return ends;
}

}  // namespace

TsResult ts_value_and_adjoints(const ActivationTrace& trace, std::span<const double> c) {
  check_layer_weights(trace, c, "ts_value_and_adjoints");
  const std::vector<std::size_t>& starts = trace.clip_boundaries;
  const std::vector<std::size_t> ends = clip_ends(trace);
  for (std::size_t i = 0; i < starts.size(); ++i)
    if (ends[i] - starts[i] < 2)
      throw std::invalid_argument("clip too short for temporal differencing");

  TsResult result;
  result.per_layer.assign(trace.layers.size(), 0.0);
  result.adjoints.reserve(trace.layers.size());

  for (std::size_t l = 0; l < trace.layers.size(); ++l) {
    const Matrix& act = trace.layers[l];
    Matrix adj(act.rows(), act.cols());
    const double cl = c[l];
    double layer_sum = 0.0;
    for (std::size_t i = 0; i < starts.size(); ++i) {
      for (std::size_t t = starts[i] + 1; t < ends[i]; ++t) {
        auto cur = act.row(t);
        auto prev = act.row(t - 1);
        auto adj_cur = adj.row(t);
        auto adj_prev = adj.row(t - 1);
        for (std::size_t k = 0; k < cur.size(); ++k) {
          const double diff = cur[k] - prev[k];
          layer_sum += diff * diff;
          adj_cur[k] += 2.0 * cl * diff;
          adj_prev[k] -= 2.0 * cl * diff;
        }
      }
    }
    result.per_layer[l] = cl * layer_sum;
    result.value += cl * layer_sum;
    result.adjoints.push_back(std::move(adj));
  }
  return result;
}

EntropyResult entropy_value_and_adjoints(const ActivationTrace& trace,
                                         std::span<const double> d, double jitter) {
  check_layer_weights(trace, d, "entropy_value_and_adjoints");
  const std::size_t frames = trace.frames();
  if (frames < 2)
    throw std::invalid_argument("entropy_value_and_adjoints: need at least 2 frames");

  EntropyResult result;
  result.per_layer_logdet.assign(trace.layers.size(),
                                 std::numeric_limits<double>::quiet_NaN());
  result.adjoints.reserve(trace.layers.size());

  for (std::size_t l = 0; l < trace.layers.size(); ++l) {
    const Matrix& act = trace.layers[l];
    if (d[l] == 0.0) {
      result.adjoints.emplace_back(act.rows(), act.cols());
      continue;
    }

    CovarianceEstimate est = covariance(act);
    Matrix chol;
    try {
      chol = cholesky(est.matrix, jitter);
    } catch (const NotPositiveDefiniteError& e) {
      throw DegenerateCovarianceError(l, e.pivot());
    }
    const double logdet = logdet_from_cholesky(chol);
    result.per_layer_logdet[l] = logdet;
    result.value += d[l] * logdet;

    const Matrix inv = inverse_from_cholesky(chol);
    Matrix centered(act.rows(), act.cols());
    for (std::size_t t = 0; t < act.rows(); ++t) {
      auto src = act.row(t);
      auto dst = centered.row(t);
      for (std::size_t k = 0; k < src.size(); ++k) dst[k] = src[k] - est.mean[k];
    }
    Matrix adj = matmul(centered, inv);  // C^-1 is symmetric
    const double factor = d[l] * 2.0 / static_cast<double>(frames - 1);
    for (std::size_t i = 0; i < adj.size(); ++i) adj.data()[i] *= factor;
    result.adjoints.push_back(std::move(adj));
  }
  return result;
}

StepResult tse_step_gradient(const NetworkParams& params, const Matrix& inputs,
                             const std::vector<std::size_t>& clip_boundaries,
                             const ObjectiveConfig& config) {
  if (config.c.size() != params.layer_count() || config.d.size() != params.layer_count())
    throw std::invalid_argument("tse_step_gradient: objective weights do not match network depth");

  ActivationTrace trace = forward(params, inputs, clip_boundaries);
  TsResult ts = ts_value_and_adjoints(trace, config.c);
  EntropyResult entropy = entropy_value_and_adjoints(trace, config.d, config.jitter);

  std::vector<Matrix> combined;
  combined.reserve(trace.layers.size());
  for (std::size_t l = 0; l < trace.layers.size(); ++l) {
    Matrix adj = std::move(ts.adjoints[l]);
    const Matrix& ent = entropy.adjoints[l];
    for (std::size_t i = 0; i < adj.size(); ++i) adj.data()[i] -= ent.data()[i];
    entropy.adjoints[l] = Matrix();  // release; large batches are memory-bound
    combined.push_back(std::move(adj));
  }

  StepResult result;
  result.value.f_ts = ts.value;
  result.value.f_e = entropy.value;
  result.value.f_total = ts.value - entropy.value;
  result.value.per_layer_ts = std::move(ts.per_layer);
  result.value.per_layer_logdet = std::move(entropy.per_layer_logdet);
  result.gradients = backward(params, trace, combined);
  return result;
}

ObjectiveValue tse_value(const NetworkParams& params, const Matrix& inputs,
                         const std::vector<std::size_t>& clip_boundaries,
                         const ObjectiveConfig& config) {
  if (config.c.size() != params.layer_count() || config.d.size() != params.layer_count())
    throw std::invalid_argument("tse_value: objective weights do not match network depth");

  ActivationTrace trace = forward(params, inputs, clip_boundaries);
  TsResult ts = ts_value_and_adjoints(trace, config.c);
  EntropyResult entropy = entropy_value_and_adjoints(trace, config.d, config.jitter);

  ObjectiveValue value;
  value.f_ts = ts.value;
  value.f_e = entropy.value;
  value.f_total = ts.value - entropy.value;
  value.per_layer_ts = std::move(ts.per_layer);
  value.per_layer_logdet = std::move(entropy.per_layer_logdet);
  return value;
}

}  // namespace tse
