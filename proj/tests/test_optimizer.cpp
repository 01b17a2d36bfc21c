#include <doctest.h>

#include <cmath>

#include "testutil.hpp"
#include "tse/optimizer.hpp"

using tse::Activation;
using tse::Matrix;

TEST_SUITE_BEGIN("optimizer");

namespace {

// A single scalar parameter dressed up as a network.
tse::NetworkParams scalar_param(double value) {
  tse::NetworkParams params;
  params.input_dim = 1;
  params.weights.push_back(Matrix(1, 1, value));
  params.biases.emplace_back();
  params.activations.push_back(Activation::kLinear);
  return params;
}

tse::ParamBlock scalar_grad(const tse::NetworkParams& params, double g) {
  tse::ParamBlock block = tse::zeros_like(params);
  block.weights[0](0, 0) = g;
  return block;
}

}  // namespace

TEST_CASE("zero gradient leaves parameters unchanged but advances the step") {
  tse::NetworkParams params = scalar_param(0.25);
  tse::AdamState state = tse::init_adam(params, {});
  tse::adam_step(params, scalar_grad(params, 0.0), state);
  CHECK(params.weights[0](0, 0) == 0.25);
  CHECK(state.step == 1);
}

TEST_CASE("first step with unit gradient moves by almost exactly the rate") {
  tse::NetworkParams params = scalar_param(0.0);
  tse::AdamState state = tse::init_adam(params, {.rate = 0.001});
  tse::adam_step(params, scalar_grad(params, 1.0), state);
  // Bias correction makes m_hat = v_hat = 1 at step 1.
  CHECK(params.weights[0](0, 0) == doctest::Approx(-0.001).epsilon(1e-6));
}

TEST_CASE("ADAM minimizes a convex scalar") {
  tse::NetworkParams params = scalar_param(1.0);
  tse::AdamState state = tse::init_adam(params, {.rate = 0.05});
  // |theta| shrinks monotonically after burn-in until it reaches the
  // dither floor near the optimum, and settles well inside 0.2.
  double prev = 1.0;
  bool monotone_descent = true;
  bool reached_floor = false;
  for (int i = 0; i < 100; ++i) {
    const double theta = params.weights[0](0, 0);
    tse::adam_step(params, scalar_grad(params, 2.0 * theta), state);
    const double now = std::abs(params.weights[0](0, 0));
    if (now < 0.1) reached_floor = true;
    if (i >= 10 && !reached_floor && now > prev) monotone_descent = false;
    prev = now;
  }
  CHECK(monotone_descent);
  CHECK(reached_floor);
  CHECK(std::abs(params.weights[0](0, 0)) < 0.2);
}

TEST_CASE("per-coordinate steps are bounded by the rate") {
  tse::NetworkParams params = scalar_param(0.0);
  const double rate = 0.01;
  tse::AdamState state = tse::init_adam(params, {.rate = rate});
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> dist(-4.0, 4.0);
  for (int i = 0; i < 200; ++i) {
    const double before = params.weights[0](0, 0);
    tse::adam_step(params, scalar_grad(params, dist(rng)), state);
    if (i >= 10) CHECK(std::abs(params.weights[0](0, 0) - before) <= 1.1 * rate);
  }
}

TEST_CASE("updates are deterministic") {
  tse::NetworkParams a = scalar_param(0.7);
  tse::NetworkParams b = scalar_param(0.7);
  tse::AdamState sa = tse::init_adam(a, {});
  tse::AdamState sb = tse::init_adam(b, {});
  for (int i = 0; i < 20; ++i) {
    tse::adam_step(a, scalar_grad(a, 0.3 * i), sa);
    tse::adam_step(b, scalar_grad(b, 0.3 * i), sb);
  }
  CHECK(a.weights[0](0, 0) == b.weights[0](0, 0));
  CHECK(sa.m.weights[0](0, 0) == sb.m.weights[0](0, 0));
  CHECK(sa.v.weights[0](0, 0) == sb.v.weights[0](0, 0));
}

TEST_CASE("second moments stay nonnegative") {
  tse::NetworkParams params = scalar_param(0.0);
  tse::AdamState state = tse::init_adam(params, {});
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  for (int i = 0; i < 50; ++i) {
    tse::adam_step(params, scalar_grad(params, dist(rng)), state);
    CHECK(state.v.weights[0](0, 0) >= 0.0);
  }
}

TEST_CASE("global-norm clipping caps the effective gradient") {
  tse::NetworkParams params = scalar_param(0.0);
  tse::AdamState state = tse::init_adam(params, {.rate = 0.001, .clip_norm = 1.0});
  tse::adam_step(params, scalar_grad(params, 100.0), state);
  // Clipped gradient is 1.0, so the first step equals the unit-gradient step.
  CHECK(params.weights[0](0, 0) == doctest::Approx(-0.001).epsilon(1e-6));
}

TEST_CASE("shape mismatch is rejected") {
  tse::NetworkParams params = scalar_param(0.0);
  tse::AdamState state = tse::init_adam(params, {});
  tse::ParamBlock bad;
  bad.weights.push_back(Matrix(2, 1));
  bad.biases.emplace_back();
  CHECK_THROWS_AS(tse::adam_step(params, bad, state), std::invalid_argument);
}

TEST_SUITE_END();
