#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "tse/datagen.hpp"
#include "tse/optimizer.hpp"

namespace tse {

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

enum class ExperimentKind { kClock, kMnist };

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::kClock;

  std::vector<std::size_t> layers;  // hidden..output unit counts
  std::vector<double> c;            // per-layer smoothing weights (default 2^(l-1))
  std::vector<double> d;            // per-layer entropy weights (default 10)
  double jitter = 1e-6;

  AdamConfig adam;
  CameraWalkParams walk;

  std::size_t clock_resolution = 28;
  std::size_t clock_frames_per_batch = 2000;

  std::filesystem::path mnist_images;
  std::filesystem::path mnist_labels;
  std::filesystem::path mnist_test_images;
  std::filesystem::path mnist_test_labels;
  std::size_t mnist_clip_frames = 240;
  std::size_t mnist_clips_per_batch = 1000;

  std::uint64_t iterations = 2000;
  double hours = 0.0;  // 0 = iteration budget only
  std::size_t log_every = 10;
  std::size_t checkpoint_every = 500;
  std::size_t threads = 1;

  std::uint64_t seed_init = 1;
  std::uint64_t seed_data = 2;
  std::uint64_t seed_eval = 3;

  std::size_t eval_movie_frames = 8000;
  std::size_t eval_labeled_frames = 100;
  std::size_t eval_min_frame_gap = 50;
  std::size_t pca_components = 16;
  bool pca_fit_distorted = false;
  std::vector<std::size_t> sweep_sizes = {18, 30, 100, 300, 1000, 3000, 10000, 30000};

  std::size_t input_dim() const;
  // c and d expanded to the network depth (defaults applied).
  std::vector<double> effective_c() const;
  std::vector<double> effective_d() const;
};

// Fully populated defaults for one experiment.
ExperimentConfig default_config(ExperimentKind kind);

// Flat "key = value" format, '#' comments. Unknown keys and malformed
// values raise ConfigError.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config_file(const std::filesystem::path& path);

// Canonical text with every field spelled out; parsing it reproduces the
// config. Written next to run outputs for provenance and embedded in
// checkpoints.
std::string config_to_text(const ExperimentConfig& config);

// Stable shortest-round-trip formatting used by config and metrics files.
std::string format_double(double v);

}  // namespace tse
