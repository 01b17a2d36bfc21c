#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "tse/matrix.hpp"

namespace tse {

struct ReadoutModel {
  Matrix weights;            // M x K
  std::vector<double> bias;  // M
};

// Least-squares affine map from K-dim representations to M-dim targets,
// solved by normal equations on [reps | 1] with a small ridge for
// rank-deficient cases.
ReadoutModel fit_affine_readout(const Matrix& reps, const Matrix& targets,
                                double ridge = 1e-8);

Matrix readout_predict(const ReadoutModel& model, const Matrix& reps);

// RMS error of the model's (cos alpha, sin alpha) predictions, pooled
// over both components and all frames.
double readout_rms(const ReadoutModel& model, const Matrix& reps,
                   std::span<const double> alpha);

struct LabeledSet {
  Matrix representations;  // n x K
  std::vector<int> labels;
};

// 1-nearest-neighbor under Euclidean distance; ties go to the lowest
// labeled-set index. `threads` > 1 splits the queries.
std::vector<int> knn_classify(const LabeledSet& labeled, const Matrix& queries,
                              std::size_t threads = 1);

struct SweepPoint {
  std::size_t size;
  double accuracy;
};

// 1-NN accuracy over the full test set using the first n pool items (in
// original dataset order) as the labeled set, for each requested n. One
// scan per query serves all sizes.
std::vector<SweepPoint> accuracy_sweep(const LabeledSet& pool,
                                       const std::vector<std::size_t>& sizes,
                                       const Matrix& test_reps,
                                       const std::vector<int>& test_labels,
                                       std::size_t threads = 1);

}  // namespace tse
