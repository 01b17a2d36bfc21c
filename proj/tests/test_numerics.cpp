#include <doctest.h>

#include <cmath>

#include "testutil.hpp"
#include "tse/numerics.hpp"

using tse::Matrix;

TEST_SUITE_BEGIN("numerics");

TEST_CASE("covariance of constant data is zero") {
  Matrix samples(3, 1, 0.0);
  const tse::CovarianceEstimate est = tse::covariance(samples);
  CHECK(est.matrix(0, 0) == 0.0);
  CHECK(est.mean[0] == 0.0);
  CHECK(est.sample_count == 3);
}

TEST_CASE("covariance of a symmetric pair uses divisor n-1") {
  Matrix samples(2, 2);
  samples(0, 0) = 1.0;
  samples(1, 0) = -1.0;
  const tse::CovarianceEstimate est = tse::covariance(samples);
  CHECK(est.matrix(0, 0) == doctest::Approx(2.0));
  CHECK(est.matrix(0, 1) == 0.0);
  CHECK(est.matrix(1, 1) == 0.0);
  CHECK(est.mean[0] == 0.0);
  CHECK(est.mean[1] == 0.0);
}

TEST_CASE("covariance matches the two-pass oracle on random data") {
  const Matrix samples = testutil::random_matrix(50, 3, 42);
  const tse::CovarianceEstimate est = tse::covariance(samples);
  const Matrix oracle = testutil::covariance_oracle(samples);
  CHECK(tse::max_abs_diff(est.matrix, oracle) < 1e-12);
}

TEST_CASE("covariance rejects degenerate input") {
  CHECK_THROWS_WITH_AS(tse::covariance(Matrix(1, 3)), doctest::Contains("insufficient samples"),
                       std::invalid_argument);
}

TEST_CASE("covariance is symmetric PSD on random data") {
  const Matrix samples = testutil::random_matrix(40, 5, 7);
  const tse::CovarianceEstimate est = tse::covariance(samples);
  CHECK(tse::max_abs_diff(est.matrix, tse::transpose(est.matrix)) <= 1e-12);
  const tse::SymmetricEigen eig = tse::symmetric_eigen(est.matrix);
  double trace = 0.0;
  for (std::size_t i = 0; i < 5; ++i) trace += est.matrix(i, i);
  for (double v : eig.values) CHECK(v >= -1e-10 * trace);
}

TEST_CASE("cholesky of the identity is the identity") {
  const Matrix eye = Matrix::identity(3);
  const Matrix chol = tse::cholesky(eye, 0.0);
  CHECK(tse::max_abs_diff(chol, eye) == 0.0);
}

TEST_CASE("cholesky matches the hand-expanded 2x2 factor") {
  Matrix m(2, 2);
  m(0, 0) = 4.0;
  m(0, 1) = 2.0;
  m(1, 0) = 2.0;
  m(1, 1) = 3.0;
  const Matrix chol = tse::cholesky(m, 0.0);
  CHECK(chol(0, 0) == doctest::Approx(2.0));
  CHECK(chol(0, 1) == 0.0);
  CHECK(chol(1, 0) == doctest::Approx(1.0));
  CHECK(chol(1, 1) == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("cholesky reports the failing pivot of a rank-1 matrix") {
  Matrix m(2, 2, 1.0);
  try {
    tse::cholesky(m, 0.0);
    FAIL("expected NotPositiveDefiniteError");
  } catch (const tse::NotPositiveDefiniteError& e) {
    CHECK(e.pivot() == 1);
    CHECK(std::string(e.what()).find("not positive definite") != std::string::npos);
  }
}

TEST_CASE("cholesky reconstruction with jitter") {
  const Matrix spd = testutil::random_spd(6, 11);
  for (double jitter : {0.0, 1e-3}) {
    const Matrix chol = tse::cholesky(spd, jitter);
    for (std::size_t i = 0; i < 6; ++i) CHECK(chol(i, i) > 0.0);
    Matrix recon = tse::matmul_transposed_b(chol, chol);
    Matrix target = spd;
    for (std::size_t i = 0; i < 6; ++i) target(i, i) += jitter;
    CHECK(tse::max_abs_diff(recon, target) / tse::frobenius_norm(target) < 1e-9);
  }
}

TEST_CASE("logdet of identity and of a diagonal matrix") {
  CHECK(tse::logdet_spd(Matrix::identity(5), 0.0) == 0.0);
  Matrix diag(2, 2);
  diag(0, 0) = 2.0;
  diag(1, 1) = 3.0;
  CHECK(tse::logdet_spd(diag, 0.0) == doctest::Approx(std::log(6.0)).epsilon(1e-12));
}

TEST_CASE("logdet matches the cofactor-determinant oracle") {
  for (std::size_t n = 2; n <= 8; ++n) {
    const Matrix spd = testutil::random_spd(n, 100 + n);
    const double logdet = tse::logdet_spd(spd, 0.0);
    const double det = testutil::cofactor_determinant(spd);
    CHECK(std::abs(std::exp(logdet) - det) / std::abs(det) < 1e-9);
  }
}

TEST_CASE("spd_inverse basics and multiply-back") {
  CHECK(tse::max_abs_diff(tse::spd_inverse(Matrix::identity(4), 0.0), Matrix::identity(4)) <
        1e-14);

  Matrix diag(2, 2);
  diag(0, 0) = 2.0;
  diag(1, 1) = 4.0;
  const Matrix inv = tse::spd_inverse(diag, 0.0);
  CHECK(inv(0, 0) == doctest::Approx(0.5));
  CHECK(inv(1, 1) == doctest::Approx(0.25));

  const Matrix spd = testutil::random_spd(5, 21);
  const Matrix x = tse::spd_inverse(spd, 0.0);
  CHECK(tse::max_abs_diff(tse::matmul(spd, x), Matrix::identity(5)) < 1e-8);
  CHECK(tse::max_abs_diff(x, tse::transpose(x)) < 1e-10);
}

TEST_CASE("non-symmetric input is rejected") {
  Matrix m(2, 2);
  m(0, 1) = 1.0;
  CHECK_THROWS_AS(tse::cholesky(m, 0.0), std::invalid_argument);
}

TEST_CASE("pca finds the dominant direction of a line") {
  Matrix samples(20, 2);
  for (std::size_t i = 0; i < 20; ++i) {
    const double v = static_cast<double>(i) - 10.0;
    samples(i, 0) = v;
    samples(i, 1) = v;
  }
  const tse::PcaBasis basis = tse::pca_fit(samples, 1);
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  CHECK(std::abs(std::abs(basis.components(0, 0)) - inv_sqrt2) < 1e-9);
  CHECK(std::abs(std::abs(basis.components(0, 1)) - inv_sqrt2) < 1e-9);
  CHECK(basis.components(0, 0) * basis.components(0, 1) > 0.0);
}

TEST_CASE("complete pca basis reconstructs samples") {
  const Matrix samples = testutil::random_matrix(30, 4, 3);
  const tse::PcaBasis basis = tse::pca_fit(samples, 4);
  const Matrix projected = tse::pca_project_rows(basis, samples);
  for (std::size_t t = 0; t < samples.rows(); ++t)
    for (std::size_t i = 0; i < 4; ++i) {
      double recon = basis.mean[i];
      for (std::size_t j = 0; j < 4; ++j) recon += basis.components(j, i) * projected(t, j);
      CHECK(std::abs(recon - samples(t, i)) < 1e-9);
    }
}

TEST_CASE("pca projection diagonalizes the covariance") {
  const Matrix samples = testutil::random_matrix(60, 5, 17);
  const tse::PcaBasis basis = tse::pca_fit(samples, 5);
  const Matrix projected = tse::pca_project_rows(basis, samples);
  const tse::CovarianceEstimate proj_cov = tse::covariance(projected);
  double max_diag = 0.0;
  for (std::size_t i = 0; i < 5; ++i) max_diag = std::max(max_diag, proj_cov.matrix(i, i));
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j)
      if (i != j) CHECK(std::abs(proj_cov.matrix(i, j)) < 1e-9 * max_diag);
  // Projected variances equal the eigenvalues, in nonincreasing order.
  for (std::size_t i = 0; i < 5; ++i)
    CHECK(proj_cov.matrix(i, i) == doctest::Approx(basis.explained_variance[i]).epsilon(1e-9));
  for (std::size_t i = 1; i < 5; ++i)
    CHECK(basis.explained_variance[i] <= basis.explained_variance[i - 1]);
}

TEST_CASE("pca basis is orthonormal") {
  const Matrix samples = testutil::random_matrix(40, 6, 23);
  const tse::PcaBasis basis = tse::pca_fit(samples, 4);
  const Matrix gram = tse::matmul_transposed_b(basis.components, basis.components);
  CHECK(tse::max_abs_diff(gram, Matrix::identity(4)) < 1e-10);
}

TEST_CASE("pca rejects out-of-range component counts") {
  const Matrix samples = testutil::random_matrix(10, 3, 5);
  CHECK_THROWS_AS(tse::pca_fit(samples, 4), std::invalid_argument);
  CHECK_THROWS_AS(tse::pca_fit(samples, 0), std::invalid_argument);
}

TEST_SUITE_END();
