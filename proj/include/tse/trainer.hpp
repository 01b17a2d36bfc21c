#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "tse/checkpoint.hpp"
#include "tse/config.hpp"
#include "tse/eval.hpp"

namespace tse {

// A layer covariance stayed singular through all jitter escalations.
class NumericalAbortError : public std::runtime_error {
 public:
  NumericalAbortError(std::size_t layer, std::uint64_t iteration)
      : std::runtime_error("degenerate layer covariance at layer " + std::to_string(layer) +
                           ", iteration " + std::to_string(iteration) +
                           " (after jitter escalation)"),
        layer_(layer),
        iteration_(iteration) {}
  std::size_t layer() const { return layer_; }
  std::uint64_t iteration() const { return iteration_; }

 private:
  std::size_t layer_;
  std::uint64_t iteration_;
};

struct TrainOptions {
  std::filesystem::path out_dir;
  std::ostream* console = nullptr;  // progress lines (with wall time) go here
};

// Network, optimizer and data-stream state at iteration 0.
Checkpoint init_checkpoint(const ExperimentConfig& config);

// Full training loop: per iteration, synthesize a fresh batch, take one
// combined-objective gradient step, update with ADAM. Writes metrics.csv
// (deterministic columns only), periodic checkpoints and a resolved
// config into out_dir. Pass `resume` to continue from a saved state.
Checkpoint train(const ExperimentConfig& config, const TrainOptions& options,
                 const Checkpoint* resume = nullptr);

struct ClockEvalReport {
  double rms_tse = 0.0;
  double rms_pca = 0.0;
  double rms_down = 0.0;
  // index 0 = input pixels, then one entry per network layer
  std::vector<double> volatility_ratio;
};

// Fresh evaluation movie from the same stochastic model; affine readout
// of (cos alpha, sin alpha) for the network output and both linear
// baselines, plus per-layer slowness statistics. Writes fig3_readout.csv,
// volatility.csv and fig2_traces.csv.
ClockEvalReport eval_clock(const Checkpoint& checkpoint, const ExperimentConfig& config,
                           const std::filesystem::path& out_dir);

struct MnistEvalReport {
  std::vector<SweepPoint> tse;
  std::vector<SweepPoint> pca;
  std::vector<SweepPoint> down;
  std::vector<SweepPoint> raw;
};

// 1-NN accuracy sweeps over labeled-pool prefixes for the network output,
// PCA, downsampled and raw-pixel representations of undistorted images.
// Writes fig5_sweep.csv.
MnistEvalReport eval_mnist(const Checkpoint& checkpoint, const ExperimentConfig& config,
                           const std::filesystem::path& out_dir);

// Input-weight images of randomly selected units, min-max normalized per
// unit; square fan-in is reshaped to an image, anything else becomes a
// 1 x N strip.
std::vector<std::filesystem::path> dump_weights(const Checkpoint& checkpoint,
                                                std::size_t layer, std::size_t unit_count,
                                                const ExperimentConfig& config,
                                                const std::filesystem::path& out_dir);

// Sample PGM frames from the configured generator, for visual inspection.
std::vector<std::filesystem::path> gen_preview(const ExperimentConfig& config,
                                               std::size_t frame_count,
                                               const std::filesystem::path& out_dir);

}  // namespace tse
