#include "tse/eval.hpp"

#include <cmath>
#include <limits>
#include <mutex>
#include <stdexcept>

#include "tse/numerics.hpp"
#include "tse/parallel.hpp"

namespace tse {

ReadoutModel fit_affine_readout(const Matrix& reps, const Matrix& targets, double ridge) {
  if (reps.rows() != targets.rows())
    throw std::invalid_argument("fit_affine_readout: sample count mismatch");
  if (reps.rows() < 1) throw std::invalid_argument("fit_affine_readout: empty sample set");

  const std::size_t n = reps.rows();
  const std::size_t k = reps.cols();
  const std::size_t m = targets.cols();

  // Normal equations on the augmented design matrix [reps | 1].
  Matrix gram(k + 1, k + 1);
  for (std::size_t t = 0; t < n; ++t) {
    auto row = reps.row(t);
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = i; j < k; ++j) gram(i, j) += row[i] * row[j];
      gram(i, k) += row[i];
    }
  }
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i + 1; j < k; ++j) gram(j, i) = gram(i, j);
  for (std::size_t i = 0; i < k; ++i) gram(k, i) = gram(i, k);
  gram(k, k) = static_cast<double>(n);

  Matrix rhs(k + 1, m);
  for (std::size_t t = 0; t < n; ++t) {
    auto row = reps.row(t);
    auto y = targets.row(t);
    for (std::size_t j = 0; j < m; ++j) {
      for (std::size_t i = 0; i < k; ++i) rhs(i, j) += row[i] * y[j];
      rhs(k, j) += y[j];
    }
  }

  const Matrix chol = cholesky(gram, ridge);
  // Solve (gram + ridge I) beta = rhs column by column.
  Matrix beta(k + 1, m);
  std::vector<double> y(k + 1);
  for (std::size_t col = 0; col < m; ++col) {
    for (std::size_t i = 0; i <= k; ++i) {
      double sum = rhs(i, col);
      for (std::size_t j = 0; j < i; ++j) sum -= chol(i, j) * y[j];
      y[i] = sum / chol(i, i);
    }
    for (std::size_t ii = k + 1; ii-- > 0;) {
      double sum = y[ii];
      for (std::size_t j = ii + 1; j <= k; ++j) sum -= chol(j, ii) * beta(j, col);
      beta(ii, col) = sum / chol(ii, ii);
    }
  }

  ReadoutModel model;
  model.weights = Matrix(m, k);
  model.bias.resize(m);
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t i = 0; i < k; ++i) model.weights(j, i) = beta(i, j);
    model.bias[j] = beta(k, j);
  }
  return model;
}

Matrix readout_predict(const ReadoutModel& model, const Matrix& reps) {
  if (reps.cols() != model.weights.cols())
    throw std::invalid_argument("readout_predict: dimension mismatch");
  Matrix out = matmul_transposed_b(reps, model.weights);
  for (std::size_t t = 0; t < out.rows(); ++t) {
    auto row = out.row(t);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] += model.bias[j];
  }
  return out;
}

double readout_rms(const ReadoutModel& model, const Matrix& reps,
                   std::span<const double> alpha) {
  if (reps.rows() != alpha.size())
    throw std::invalid_argument("readout_rms: frame count mismatch");
  if (model.weights.rows() != 2)
    throw std::invalid_argument("readout_rms: model must predict (cos, sin)");
  const Matrix preds = readout_predict(model, reps);
  double sum = 0.0;
  for (std::size_t t = 0; t < preds.rows(); ++t) {
    const double ec = preds(t, 0) - std::cos(alpha[t]);
    const double es = preds(t, 1) - std::sin(alpha[t]);
    sum += ec * ec + es * es;
  }
  return std::sqrt(sum / static_cast<double>(2 * preds.rows()));
}

namespace {

// Index of the nearest labeled row, scanning in index order so ties keep
// the lowest index.
std::size_t nearest_index(const Matrix& labeled, std::span<const double> query) {
  std::size_t best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < labeled.rows(); ++i) {
    auto row = labeled.row(i);
    double dist = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) {
      const double diff = row[j] - query[j];
      dist += diff * diff;
    }
    if (dist < best_dist) {
      best_dist = dist;
      best = i;
    }
  }
  return best;
}

}  // namespace

std::vector<int> knn_classify(const LabeledSet& labeled, const Matrix& queries,
                              std::size_t threads) {
  if (labeled.representations.rows() == 0)
    throw std::invalid_argument("knn_classify: empty labeled set");
  if (labeled.representations.cols() != queries.cols())
    throw std::invalid_argument("knn_classify: dimension mismatch");
  if (labeled.labels.size() != labeled.representations.rows())
    throw std::invalid_argument("knn_classify: label count mismatch");

  std::vector<int> out(queries.rows());
  parallel_chunks(queries.rows(), threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t q = lo; q < hi; ++q)
      out[q] = labeled.labels[nearest_index(labeled.representations, queries.row(q))];
  });
  return out;
}

std::vector<SweepPoint> accuracy_sweep(const LabeledSet& pool,
                                       const std::vector<std::size_t>& sizes,
                                       const Matrix& test_reps,
                                       const std::vector<int>& test_labels,
                                       std::size_t threads) {
  if (sizes.empty()) return {};
  if (sizes.front() < 1) throw std::invalid_argument("accuracy_sweep: sizes must be positive");
  for (std::size_t i = 1; i < sizes.size(); ++i)
    if (sizes[i] < sizes[i - 1])
      throw std::invalid_argument("accuracy_sweep: sizes must be nondecreasing");
  if (sizes.back() > pool.representations.rows())
    throw std::invalid_argument("accuracy_sweep: size exceeds pool");
  if (test_reps.rows() != test_labels.size())
    throw std::invalid_argument("accuracy_sweep: test label count mismatch");
  if (pool.representations.cols() != test_reps.cols())
    throw std::invalid_argument("accuracy_sweep: dimension mismatch");

  // One ordered scan of the pool per query covers every prefix size.
  std::vector<std::size_t> correct(sizes.size(), 0);
  std::mutex merge_mutex;
  parallel_chunks(test_reps.rows(), threads, [&](std::size_t lo, std::size_t hi) {
    std::vector<std::size_t> local(sizes.size(), 0);
    for (std::size_t q = lo; q < hi; ++q) {
      auto query = test_reps.row(q);
      double best_dist = std::numeric_limits<double>::infinity();
      int best_label = -1;
      std::size_t next_size = 0;
      for (std::size_t i = 0; i < sizes.back(); ++i) {
        auto row = pool.representations.row(i);
        double dist = 0.0;
        for (std::size_t j = 0; j < row.size(); ++j) {
          const double diff = row[j] - query[j];
          dist += diff * diff;
        }
        if (dist < best_dist) {
          best_dist = dist;
          best_label = pool.labels[i];
        }
        while (next_size < sizes.size() && i + 1 == sizes[next_size]) {
          if (best_label == test_labels[q]) local[next_size] += 1;
          ++next_size;
        }
      }
    }
    std::scoped_lock lock(merge_mutex);
    for (std::size_t s = 0; s < sizes.size(); ++s) correct[s] += local[s];
  });

  std::vector<SweepPoint> points(sizes.size());
  for (std::size_t s = 0; s < sizes.size(); ++s)
    points[s] = {sizes[s],
                 static_cast<double>(correct[s]) / static_cast<double>(test_reps.rows())};
  return points;
}

}  // namespace tse
