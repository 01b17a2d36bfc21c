#pragma once

// Shared helpers for the test suites: random inputs, independent oracles
// (kept separate from the library code paths they check), and a minimal
// IDX writer for synthetic datasets.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <vector>

#include "tse/matrix.hpp"
#include "tse/network.hpp"

namespace testutil {

inline tse::Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed,
                                 double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  tse::Matrix m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

// Random symmetric positive definite matrix A^T A + I.
inline tse::Matrix random_spd(std::size_t n, std::uint64_t seed) {
  const tse::Matrix a = random_matrix(n, n, seed);
  tse::Matrix spd = tse::matmul_transposed_a(a, a);
  for (std::size_t i = 0; i < n; ++i) spd(i, i) += 1.0;
  return spd;
}

// Brute-force determinant by cofactor expansion; fine up to 8x8.
inline double cofactor_determinant(const tse::Matrix& m) {
  const std::size_t n = m.rows();
  if (n == 1) return m(0, 0);
  double det = 0.0;
  double sign = 1.0;
  for (std::size_t col = 0; col < n; ++col) {
    tse::Matrix minor(n - 1, n - 1);
    for (std::size_t i = 1; i < n; ++i) {
      std::size_t mj = 0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == col) continue;
        minor(i - 1, mj++) = m(i, j);
      }
    }
    det += sign * m(0, col) * cofactor_determinant(minor);
    sign = -sign;
  }
  return det;
}

// Two-pass covariance oracle: explicit mean, then explicit centered outer
// products, kept independent of the library implementation.
inline tse::Matrix covariance_oracle(const tse::Matrix& samples) {
  const std::size_t n = samples.rows();
  const std::size_t dim = samples.cols();
  std::vector<double> mean(dim, 0.0);
  for (std::size_t t = 0; t < n; ++t)
    for (std::size_t j = 0; j < dim; ++j) mean[j] += samples(t, j) / double(n);
  tse::Matrix cov(dim, dim);
  for (std::size_t t = 0; t < n; ++t)
    for (std::size_t i = 0; i < dim; ++i)
      for (std::size_t j = 0; j < dim; ++j)
        cov(i, j) += (samples(t, i) - mean[i]) * (samples(t, j) - mean[j]) / double(n - 1);
  return cov;
}

// Flatten/restore parameters so finite differences can walk every entry.
inline std::vector<double*> parameter_pointers(tse::NetworkParams& params) {
  std::vector<double*> out;
  for (std::size_t l = 0; l < params.layer_count(); ++l) {
    for (std::size_t i = 0; i < params.weights[l].size(); ++i)
      out.push_back(params.weights[l].data() + i);
    for (std::size_t i = 0; i < params.biases[l].size(); ++i)
      out.push_back(params.biases[l].data() + i);
  }
  return out;
}

inline std::vector<double> flatten(const tse::ParamBlock& block) {
  std::vector<double> out;
  for (std::size_t l = 0; l < block.weights.size(); ++l) {
    out.insert(out.end(), block.weights[l].data(),
               block.weights[l].data() + block.weights[l].size());
    out.insert(out.end(), block.biases[l].begin(), block.biases[l].end());
  }
  return out;
}

// Central finite differences of a scalar function of the parameters.
template <typename Fn>
std::vector<double> fd_gradient(tse::NetworkParams& params, Fn&& value_of, double step = 1e-5) {
  std::vector<double*> slots = parameter_pointers(params);
  std::vector<double> grad(slots.size());
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const double saved = *slots[i];
    *slots[i] = saved + step;
    const double plus = value_of();
    *slots[i] = saved - step;
    const double minus = value_of();
    *slots[i] = saved;
    grad[i] = (plus - minus) / (2.0 * step);
  }
  return grad;
}

inline double max_rel_err(const std::vector<double>& a, const std::vector<double>& b,
                          double floor = 1e-6) {
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double denom = std::max(std::abs(a[i]) + std::abs(b[i]), floor);
    worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
  }
  return worst;
}

inline void write_be32(std::ofstream& out, std::uint32_t v) {
  const unsigned char bytes[4] = {static_cast<unsigned char>(v >> 24),
                                  static_cast<unsigned char>(v >> 16),
                                  static_cast<unsigned char>(v >> 8),
                                  static_cast<unsigned char>(v)};
  out.write(reinterpret_cast<const char*>(bytes), 4);
}

// IDX image/label pair with the standard magic numbers.
inline void write_idx_dataset(const std::filesystem::path& images_path,
                              const std::filesystem::path& labels_path,
                              const std::vector<std::uint8_t>& pixels,
                              const std::vector<std::uint8_t>& labels, std::uint32_t rows,
                              std::uint32_t cols) {
  const std::uint32_t count = static_cast<std::uint32_t>(labels.size());
  {
    std::ofstream out(images_path, std::ios::binary);
    write_be32(out, 0x00000803u);
    write_be32(out, count);
    write_be32(out, rows);
    write_be32(out, cols);
    out.write(reinterpret_cast<const char*>(pixels.data()), pixels.size());
  }
  {
    std::ofstream out(labels_path, std::ios::binary);
    write_be32(out, 0x00000801u);
    write_be32(out, count);
    out.write(reinterpret_cast<const char*>(labels.data()), labels.size());
  }
}

// Random synthetic digit-like dataset (blobs keyed by label).
inline void write_random_dataset(const std::filesystem::path& images_path,
                                 const std::filesystem::path& labels_path, std::size_t count,
                                 std::uint32_t rows, std::uint32_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::uint8_t> pixels(count * rows * cols);
  std::vector<std::uint8_t> labels(count);
  for (std::size_t i = 0; i < count; ++i) {
    labels[i] = static_cast<std::uint8_t>(i % 10);
    for (std::size_t p = 0; p < rows * cols; ++p)
      pixels[i * rows * cols + p] = static_cast<std::uint8_t>(rng() % 256);
  }
  write_idx_dataset(images_path, labels_path, pixels, labels, rows, cols);
}

inline std::filesystem::path temp_dir(const std::string& name) {
  const std::filesystem::path dir = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace testutil
