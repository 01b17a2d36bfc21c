#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tse/matrix.hpp"

namespace tse {

// Thrown by the Cholesky routines when a pivot is not strictly positive.
// Carries the index of the failing pivot so callers can retry with a
// larger jitter.
class NotPositiveDefiniteError : public std::runtime_error {
 public:
  explicit NotPositiveDefiniteError(std::size_t pivot)
      : std::runtime_error("not positive definite (pivot " + std::to_string(pivot) + ")"),
        pivot_(pivot) {}
  std::size_t pivot() const { return pivot_; }

 private:
  std::size_t pivot_;
};

struct CovarianceEstimate {
  Matrix matrix;             // N x N, symmetric PSD
  std::size_t sample_count;  // >= 2
  std::vector<double> mean;  // length N
};

// Sample covariance with divisor (sample_count - 1); one sample per row.
// Throws "insufficient samples" for fewer than two rows.
CovarianceEstimate covariance(const Matrix& samples);

// Lower-triangular L with L * L^T = m + jitter * I. Requires m square and
// symmetric to 1e-9; throws NotPositiveDefiniteError if a pivot fails.
Matrix cholesky(const Matrix& m, double jitter);

// log det(m + jitter * I) = 2 * sum(log diag(L)).
double logdet_spd(const Matrix& m, double jitter);

// Inverse of (m + jitter * I) via the Cholesky factor; result symmetric.
Matrix spd_inverse(const Matrix& m, double jitter);

// Helpers on an already-computed factor, so one factorization can serve
// both the determinant and the inverse.
double logdet_from_cholesky(const Matrix& chol_lower);
Matrix inverse_from_cholesky(const Matrix& chol_lower);

struct SymmetricEigen {
  std::vector<double> values;  // nonincreasing
  Matrix vectors;              // column j is the eigenvector for values[j]
};

// Cyclic Jacobi eigendecomposition of a symmetric matrix. Plenty fast for
// the dimensions used here (a few hundred).
SymmetricEigen symmetric_eigen(const Matrix& m);

struct PcaBasis {
  std::vector<double> mean;                // length N
  Matrix components;                       // k x N, rows orthonormal
  std::vector<double> explained_variance;  // k values, nonincreasing
};

// Mean and k leading eigenvectors of the sample covariance.
// Projection of x is components * (x - mean).
PcaBasis pca_fit(const Matrix& samples, std::size_t k);

std::vector<double> pca_project(const PcaBasis& basis, std::span<const double> x);
Matrix pca_project_rows(const PcaBasis& basis, const Matrix& samples);

}  // namespace tse
