#include <doctest.h>

#include <cmath>
#include <numbers>

#include "testutil.hpp"
#include "tse/eval.hpp"

using tse::Matrix;

TEST_SUITE_BEGIN("eval");

TEST_CASE("exactly affine targets are recovered") {
  const Matrix reps = testutil::random_matrix(50, 4, 200);
  Matrix true_w(2, 4);
  true_w(0, 0) = 1.5;
  true_w(0, 1) = -0.5;
  true_w(0, 2) = 0.25;
  true_w(0, 3) = 2.0;
  true_w(1, 0) = -1.0;
  true_w(1, 1) = 0.75;
  true_w(1, 2) = 0.0;
  true_w(1, 3) = 0.5;
  const std::vector<double> true_b{0.3, -0.7};

  Matrix targets(50, 2);
  for (std::size_t t = 0; t < 50; ++t)
    for (std::size_t j = 0; j < 2; ++j) {
      double v = true_b[j];
      for (std::size_t i = 0; i < 4; ++i) v += true_w(j, i) * reps(t, i);
      targets(t, j) = v;
    }

  const tse::ReadoutModel model = tse::fit_affine_readout(reps, targets);
  const Matrix preds = tse::readout_predict(model, reps);
  double rms = 0.0;
  for (std::size_t t = 0; t < 50; ++t)
    for (std::size_t j = 0; j < 2; ++j) {
      const double e = preds(t, j) - targets(t, j);
      rms += e * e;
    }
  rms = std::sqrt(rms / 100.0);
  CHECK(rms < 1e-8);
}

TEST_CASE("two points determine a line") {
  Matrix reps(2, 1);
  reps(1, 0) = 1.0;
  Matrix targets(2, 1);
  targets(1, 0) = 2.0;
  const tse::ReadoutModel model = tse::fit_affine_readout(reps, targets);
  CHECK(model.weights(0, 0) == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(model.bias[0] == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("least-squares residual is orthogonal to the columns") {
  const Matrix reps = testutil::random_matrix(60, 5, 201);
  const Matrix targets = testutil::random_matrix(60, 2, 202);
  const tse::ReadoutModel model = tse::fit_affine_readout(reps, targets);
  const Matrix preds = tse::readout_predict(model, reps);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 2; ++j) {
      double dot = 0.0;
      for (std::size_t t = 0; t < 60; ++t) dot += reps(t, i) * (targets(t, j) - preds(t, j));
      CHECK(std::abs(dot) < 1e-6);
    }
}

TEST_CASE("readout predictions are invariant under affine reparameterization") {
  const Matrix reps = testutil::random_matrix(40, 3, 203);
  Matrix targets = testutil::random_matrix(40, 2, 204);

  // Well-conditioned invertible map: identity plus a small perturbation.
  Matrix g = Matrix::identity(3);
  const Matrix noise = testutil::random_matrix(3, 3, 205, -0.2, 0.2);
  for (std::size_t i = 0; i < 9; ++i) g.data()[i] += noise.data()[i];
  const std::vector<double> shift{0.4, -0.2, 1.1};

  Matrix reparam(40, 3);
  for (std::size_t t = 0; t < 40; ++t)
    for (std::size_t i = 0; i < 3; ++i) {
      double v = shift[i];
      for (std::size_t j = 0; j < 3; ++j) v += g(i, j) * reps(t, j);
      reparam(t, i) = v;
    }

  const tse::ReadoutModel model_a = tse::fit_affine_readout(reps, targets);
  const tse::ReadoutModel model_b = tse::fit_affine_readout(reparam, targets);
  const Matrix preds_a = tse::readout_predict(model_a, reps);
  const Matrix preds_b = tse::readout_predict(model_b, reparam);
  CHECK(tse::max_abs_diff(preds_a, preds_b) < 1e-6);
}

TEST_CASE("rms of perfect and of constant-zero predictions") {
  const std::size_t n = 400;
  Matrix reps(n, 2);
  std::vector<double> alpha(n);
  for (std::size_t t = 0; t < n; ++t) {
    alpha[t] = 2.0 * std::numbers::pi * double(t) / double(n);
    reps(t, 0) = std::cos(alpha[t]);
    reps(t, 1) = std::sin(alpha[t]);
  }
  tse::ReadoutModel perfect;
  perfect.weights = Matrix::identity(2);
  perfect.bias = {0.0, 0.0};
  CHECK(tse::readout_rms(perfect, reps, alpha) < 1e-12);

  tse::ReadoutModel zero;
  zero.weights = Matrix(2, 2);
  zero.bias = {0.0, 0.0};
  // E[cos^2] = E[sin^2] = 1/2 over full cycles.
  CHECK(tse::readout_rms(zero, reps, alpha) ==
        doctest::Approx(std::sqrt(0.5)).epsilon(1e-9));
}

TEST_CASE("queries equal to labeled points take their labels") {
  tse::LabeledSet labeled;
  labeled.representations = testutil::random_matrix(10, 3, 206);
  labeled.labels = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  const std::vector<int> preds = tse::knn_classify(labeled, labeled.representations);
  CHECK(preds == labeled.labels);
}

TEST_CASE("nearest neighbor on a 1-d toy set") {
  tse::LabeledSet labeled;
  labeled.representations = Matrix(2, 1);
  labeled.representations(1, 0) = 10.0;
  labeled.labels = {1, 2};
  Matrix query(1, 1, 1.0);
  CHECK(tse::knn_classify(labeled, query)[0] == 1);
}

TEST_CASE("knn matches an exhaustive oracle including ties") {
  tse::LabeledSet labeled;
  labeled.representations = testutil::random_matrix(200, 5, 207);
  labeled.labels.resize(200);
  for (std::size_t i = 0; i < 200; ++i) labeled.labels[i] = int(i % 7);
  // Exact duplicates with different labels exercise tie-breaking.
  for (std::size_t i = 0; i < 5; ++i) {
    auto src = labeled.representations.row(2 * i);
    auto dst = labeled.representations.row(150 + i);
    std::copy(src.begin(), src.end(), dst.begin());
    labeled.labels[150 + i] = 6 - labeled.labels[150 + i];
  }

  Matrix queries = testutil::random_matrix(50, 5, 208);
  // Some queries sit exactly on duplicated points.
  for (std::size_t i = 0; i < 5; ++i) {
    auto src = labeled.representations.row(2 * i);
    auto dst = queries.row(i);
    std::copy(src.begin(), src.end(), dst.begin());
  }

  const std::vector<int> fast = tse::knn_classify(labeled, queries);
  const std::vector<int> fast_mt = tse::knn_classify(labeled, queries, 4);
  CHECK(fast == fast_mt);

  for (std::size_t q = 0; q < queries.rows(); ++q) {
    double best = std::numeric_limits<double>::infinity();
    int label = -1;
    for (std::size_t i = 0; i < 200; ++i) {
      double dist = 0.0;
      for (std::size_t j = 0; j < 5; ++j) {
        const double d = labeled.representations(i, j) - queries(q, j);
        dist += d * d;
      }
      if (dist < best) {
        best = dist;
        label = labeled.labels[i];
      }
    }
    CHECK(fast[q] == label);
  }
}

TEST_CASE("knn is invariant under a Euclidean isometry") {
  tse::LabeledSet labeled;
  labeled.representations = testutil::random_matrix(30, 3, 209);
  labeled.labels.resize(30);
  for (std::size_t i = 0; i < 30; ++i) labeled.labels[i] = int(i % 4);
  const Matrix queries = testutil::random_matrix(20, 3, 210);

  // Rotation about the z axis plus a translation.
  const double a = 0.83;
  Matrix rot(3, 3);
  rot(0, 0) = std::cos(a);
  rot(0, 1) = -std::sin(a);
  rot(1, 0) = std::sin(a);
  rot(1, 1) = std::cos(a);
  rot(2, 2) = 1.0;
  const std::vector<double> shift{1.0, -2.0, 0.5};

  auto map = [&](const Matrix& src) {
    Matrix out(src.rows(), 3);
    for (std::size_t t = 0; t < src.rows(); ++t)
      for (std::size_t i = 0; i < 3; ++i) {
        double v = shift[i];
        for (std::size_t j = 0; j < 3; ++j) v += rot(i, j) * src(t, j);
        out(t, i) = v;
      }
    return out;
  };

  tse::LabeledSet mapped{map(labeled.representations), labeled.labels};
  CHECK(tse::knn_classify(labeled, queries) == tse::knn_classify(mapped, map(queries)));
}

TEST_CASE("self-classification at full pool size is perfect") {
  tse::LabeledSet pool;
  pool.representations = testutil::random_matrix(25, 4, 211);
  pool.labels.resize(25);
  for (std::size_t i = 0; i < 25; ++i) pool.labels[i] = int(i);
  const std::vector<tse::SweepPoint> points =
      tse::accuracy_sweep(pool, {25}, pool.representations, pool.labels);
  CHECK(points.size() == 1);
  CHECK(points[0].accuracy == 1.0);
}

TEST_CASE("sweep equals independent per-size classification and is deterministic") {
  tse::LabeledSet pool;
  pool.representations = testutil::random_matrix(60, 3, 212);
  pool.labels.resize(60);
  for (std::size_t i = 0; i < 60; ++i) pool.labels[i] = int(i % 5);
  const Matrix test = testutil::random_matrix(40, 3, 213);
  std::vector<int> test_labels(40);
  for (std::size_t i = 0; i < 40; ++i) test_labels[i] = int(i % 5);

  const std::vector<std::size_t> sizes{5, 20, 60};
  const auto sweep = tse::accuracy_sweep(pool, sizes, test, test_labels);
  const auto sweep_mt = tse::accuracy_sweep(pool, sizes, test, test_labels, 4);
  for (std::size_t s = 0; s < sizes.size(); ++s)
    CHECK(sweep[s].accuracy == sweep_mt[s].accuracy);

  for (std::size_t s = 0; s < sizes.size(); ++s) {
    tse::LabeledSet prefix;
    prefix.representations = Matrix(sizes[s], 3);
    prefix.labels.assign(pool.labels.begin(), pool.labels.begin() + sizes[s]);
    for (std::size_t i = 0; i < sizes[s]; ++i) {
      auto src = pool.representations.row(i);
      std::copy(src.begin(), src.end(), prefix.representations.row(i).begin());
    }
    const std::vector<int> preds = tse::knn_classify(prefix, test);
    std::size_t correct = 0;
    for (std::size_t q = 0; q < 40; ++q)
      if (preds[q] == test_labels[q]) ++correct;
    CHECK(sweep[s].accuracy == doctest::Approx(double(correct) / 40.0));
  }
}

TEST_CASE("sweep rejects sizes beyond the pool") {
  tse::LabeledSet pool;
  pool.representations = testutil::random_matrix(10, 2, 214);
  pool.labels.assign(10, 0);
  const Matrix test = testutil::random_matrix(5, 2, 215);
  const std::vector<int> labels(5, 0);
  CHECK_THROWS_AS(tse::accuracy_sweep(pool, {11}, test, labels), std::invalid_argument);
  CHECK_THROWS_AS(tse::accuracy_sweep(pool, {5, 3}, test, labels), std::invalid_argument);
}

TEST_SUITE_END();
