#include "tse/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace tse {

namespace {

void require_square_symmetric(const Matrix& m) {
  if (m.rows() != m.cols() || m.rows() == 0)
    throw std::invalid_argument("matrix must be square");
  double scale = 1.0;
  for (std::size_t i = 0; i < m.size(); ++i)
    scale = std::max(scale, std::abs(m.data()[i]));
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = i + 1; j < m.cols(); ++j)
      if (std::abs(m(i, j) - m(j, i)) > 1e-9 * scale)
        throw std::invalid_argument("matrix not symmetric");
}

}  // namespace

CovarianceEstimate covariance(const Matrix& samples) {
  const std::size_t n = samples.rows();
  const std::size_t dim = samples.cols();
  if (n < 2) throw std::invalid_argument("insufficient samples");
  if (dim < 1) throw std::invalid_argument("dimension mismatch");

  CovarianceEstimate est;
  est.sample_count = n;
  est.mean.assign(dim, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    auto row = samples.row(t);
    for (std::size_t j = 0; j < dim; ++j) est.mean[j] += row[j];
  }
  for (std::size_t j = 0; j < dim; ++j) est.mean[j] /= static_cast<double>(n);

  est.matrix = Matrix(dim, dim);
  std::vector<double> centered(dim);
  for (std::size_t t = 0; t < n; ++t) {
    auto row = samples.row(t);
    for (std::size_t j = 0; j < dim; ++j) centered[j] = row[j] - est.mean[j];
    for (std::size_t i = 0; i < dim; ++i) {
      const double ci = centered[i];
      double* out_row = est.matrix.data() + i * dim;
      for (std::size_t j = i; j < dim; ++j) out_row[j] += ci * centered[j];
    }
  }
  const double divisor = static_cast<double>(n - 1);
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = i; j < dim; ++j) {
      est.matrix(i, j) /= divisor;
      est.matrix(j, i) = est.matrix(i, j);
    }
  return est;
}

Matrix cholesky(const Matrix& m, double jitter) {
  require_square_symmetric(m);
  const std::size_t n = m.rows();
  Matrix lower(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double diag = m(j, j) + jitter;
    for (std::size_t k = 0; k < j; ++k) diag -= lower(j, k) * lower(j, k);
    if (!(diag > 0.0)) throw NotPositiveDefiniteError(j);
    const double ljj = std::sqrt(diag);
    lower(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double sum = m(i, j);
      for (std::size_t k = 0; k < j; ++k) sum -= lower(i, k) * lower(j, k);
      lower(i, j) = sum / ljj;
    }
  }
  return lower;
}

double logdet_from_cholesky(const Matrix& chol_lower) {
  double sum = 0.0;
  for (std::size_t i = 0; i < chol_lower.rows(); ++i) sum += std::log(chol_lower(i, i));
  return 2.0 * sum;
}

Matrix inverse_from_cholesky(const Matrix& chol_lower) {
  // Solve L L^T X = I column by column: forward then backward substitution.
  const std::size_t n = chol_lower.rows();
  Matrix inv(n, n);
  std::vector<double> y(n);
  for (std::size_t col = 0; col < n; ++col) {
    for (std::size_t i = 0; i < n; ++i) {
      double sum = (i == col) ? 1.0 : 0.0;
      for (std::size_t k = 0; k < i; ++k) sum -= chol_lower(i, k) * y[k];
      y[i] = sum / chol_lower(i, i);
    }
    for (std::size_t ii = n; ii-- > 0;) {
      double sum = y[ii];
      for (std::size_t k = ii + 1; k < n; ++k) sum -= chol_lower(k, ii) * inv(k, col);
      inv(ii, col) = sum / chol_lower(ii, ii);
    }
  }
  // Symmetrize to wash out substitution round-off.
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = 0.5 * (inv(i, j) + inv(j, i));
      inv(i, j) = v;
      inv(j, i) = v;
    }
  return inv;
}

double logdet_spd(const Matrix& m, double jitter) {
  return logdet_from_cholesky(cholesky(m, jitter));
}

Matrix spd_inverse(const Matrix& m, double jitter) {
  return inverse_from_cholesky(cholesky(m, jitter));
}

SymmetricEigen symmetric_eigen(const Matrix& m) {
  require_square_symmetric(m);
  const std::size_t n = m.rows();
  Matrix b = m;
  // Enforce exact symmetry so the rotations stay consistent.
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = 0.5 * (b(i, j) + b(j, i));
      b(i, j) = v;
      b(j, i) = v;
    }
  Matrix vecs = Matrix::identity(n);

  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::abs(b(i, i)));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) scale = std::max(scale, std::abs(b(i, j)));
  const double tol = (scale > 0.0) ? 1e-14 * scale : 0.0;

  const int max_sweeps = 64;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off = std::max(off, std::abs(b(i, j)));
    if (off <= tol) break;

    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double bpq = b(p, q);
        if (std::abs(bpq) <= tol) continue;
        const double theta = (b(q, q) - b(p, p)) / (2.0 * bpq);
        const double t = ((theta >= 0.0) ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        for (std::size_t k = 0; k < n; ++k) {
          const double bkp = b(k, p);
          const double bkq = b(k, q);
          b(k, p) = c * bkp - s * bkq;
          b(k, q) = s * bkp + c * bkq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double bpk = b(p, k);
          const double bqk = b(q, k);
          b(p, k) = c * bpk - s * bqk;
          b(q, k) = s * bpk + c * bqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = vecs(k, p);
          const double vkq = vecs(k, q);
          vecs(k, p) = c * vkp - s * vkq;
          vecs(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  SymmetricEigen result;
  result.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) result.values[i] = b(i, i);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t c) {
    return result.values[a] > result.values[c];
  });

  SymmetricEigen sorted;
  sorted.values.resize(n);
  sorted.vectors = Matrix(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    sorted.values[j] = result.values[order[j]];
    for (std::size_t i = 0; i < n; ++i) sorted.vectors(i, j) = vecs(i, order[j]);
  }
  return sorted;
}

PcaBasis pca_fit(const Matrix& samples, std::size_t k) {
  const std::size_t dim = samples.cols();
  if (k < 1 || k > dim) throw std::invalid_argument("pca_fit: component count out of range");
  CovarianceEstimate est = covariance(samples);
  SymmetricEigen eig = symmetric_eigen(est.matrix);

  PcaBasis basis;
  basis.mean = std::move(est.mean);
  basis.components = Matrix(k, dim);
  basis.explained_variance.resize(k);
  for (std::size_t j = 0; j < k; ++j) {
    basis.explained_variance[j] = eig.values[j];
    for (std::size_t i = 0; i < dim; ++i) basis.components(j, i) = eig.vectors(i, j);
  }
  return basis;
}

std::vector<double> pca_project(const PcaBasis& basis, std::span<const double> x) {
  const std::size_t dim = basis.mean.size();
  if (x.size() != dim) throw std::invalid_argument("pca_project: dimension mismatch");
  std::vector<double> out(basis.components.rows(), 0.0);
  for (std::size_t j = 0; j < basis.components.rows(); ++j) {
    double sum = 0.0;
    for (std::size_t i = 0; i < dim; ++i)
      sum += basis.components(j, i) * (x[i] - basis.mean[i]);
    out[j] = sum;
  }
  return out;
}

Matrix pca_project_rows(const PcaBasis& basis, const Matrix& samples) {
  if (samples.cols() != basis.mean.size())
    throw std::invalid_argument("pca_project_rows: dimension mismatch");
  Matrix out(samples.rows(), basis.components.rows());
  for (std::size_t t = 0; t < samples.rows(); ++t) {
    auto x = samples.row(t);
    for (std::size_t j = 0; j < basis.components.rows(); ++j) {
      double sum = 0.0;
      for (std::size_t i = 0; i < samples.cols(); ++i)
        sum += basis.components(j, i) * (x[i] - basis.mean[i]);
      out(t, j) = sum;
    }
  }
  return out;
}

}  // namespace tse
