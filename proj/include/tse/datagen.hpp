#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tse/matrix.hpp"

namespace tse {

// Dataset files that are missing, truncated or malformed.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// splitmix64-style mixing, used to derive independent per-clip and
// per-batch seeds so synthesis order never affects the result.
std::uint64_t mix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t a, std::uint64_t b);
std::uint64_t derive_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c);

// Affine camera pose. Offsets are in pixels, scale and aspect live in log
// space so the mean state (all zeros) is the identity transform.
struct CameraState {
  double x_offset = 0.0;
  double y_offset = 0.0;
  double log_scale = 0.0;
  double rotation = 0.0;
  double shear = 0.0;
  double log_aspect = 0.0;
};

struct CoordWalk {
  double stationary_std = 0.0;
  double time_constant = 24.0;  // frames; >= 1
};

struct CameraWalkParams {
  CoordWalk x;
  CoordWalk y;
  CoordWalk log_scale;
  CoordWalk rotation;
  CoordWalk shear;
  CoordWalk log_aspect;
  double pixel_noise_std = 0.0;
  CameraState mean;  // identity transform by default
};

// One step of the discrete mean-reverting walk,
//   p <- p + (mu - p)/tau + std * sqrt(2/tau) * eta,
// whose stationary standard deviation is ~std (exactly
// std*sqrt(2*tau/(2*tau-1))). Coordinates with std == 0 and p == mu are
// exact fixed points.
CameraState camera_walk_step(const CameraState& state, const CameraWalkParams& params,
                             std::mt19937_64& rng);

// Draw a state from the walk's stationary distribution.
CameraState sample_stationary(const CameraWalkParams& params, std::mt19937_64& rng);

struct ClockState {
  double long_angle = 0.0;   // radians
  double short_angle = 0.0;  // radians
  std::uint64_t frame_index = 0;
};

// Long hand: one clockwise revolution per 400 frames. Short hand: one per
// 2000. The inter-hand angle cycles every 500 frames.
ClockState advance_clock(const ClockState& state);

inline double inter_hand_angle(const ClockState& state) {
  return state.long_angle - state.short_angle;
}

// Backward-mapped affine warp with bilinear sampling and zero padding.
// Output pixel (r, c) reads the source at
//   A^-1 (r - cr, c - cc) + (cr, cc) - (y_offset, x_offset)
// where A = rotation * shear * diag(scale*aspect, scale/aspect) about the
// image center. The identity camera reproduces the input bit-exactly.
Matrix warp_affine(const Matrix& src, const CameraState& camera);

// Two anti-aliased hands (long 0.45*min(H,W), width 1.5 px; short
// 0.28*min(H,W), width 2.5 px) drawn bright on dark from the center, then
// warped by the camera, plus clamped Gaussian pixel noise. The rng is
// untouched when noise_std == 0.
Matrix render_clock(const ClockState& state, const CameraState& camera, std::size_t height,
                    std::size_t width, double noise_std, std::mt19937_64& rng);

struct MovieClip {
  std::size_t height = 0;
  std::size_t width = 0;
  Matrix frames;              // T x (height*width)
  std::vector<double> alpha;  // clock: inter-hand angle per frame
  int label = -1;             // mnist: class of the source image
  std::int64_t source_id = -1;
  std::uint64_t seed = 0;
};

// A running clock movie; the trainer keeps one of these alive so batches
// continue the same simulated recording.
struct ClockStream {
  ClockState clock;
  CameraState camera;
};

// Render the next `frames` frames of the stream, advancing it. The noise
// and walk randomness for the segment come from `segment_seed` alone.
MovieClip continue_clock_movie(ClockStream& stream, const CameraWalkParams& params,
                               std::size_t frames, std::size_t height, std::size_t width,
                               std::uint64_t segment_seed);

// Fresh clip starting at `start` with the camera drawn from the
// stationary distribution.
MovieClip make_clock_clip(const ClockState& start, const CameraWalkParams& params,
                          std::size_t frames, std::size_t height, std::size_t width,
                          std::uint64_t seed);

// Shaky-camera movie of one still image; the camera starts at the mean
// state, so early frames are near-undistorted.
MovieClip make_mnist_clip(const Matrix& source, const CameraWalkParams& params,
                          std::size_t frames, std::uint64_t seed);

// IDX-format image/label pair. Pixels are kept as raw bytes; accessors
// scale by 1/255.
struct MnistDataset {
  std::size_t count = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> pixels;  // count * rows * cols, row-major
  std::vector<std::uint8_t> labels;

  Matrix image(std::size_t index) const;
  void copy_image_row(std::size_t index, std::span<double> out) const;
};

MnistDataset load_mnist(const std::filesystem::path& images_path,
                        const std::filesystem::path& labels_path);

// Mean over non-overlapping 4x4 blocks in raster order; dimensions must
// be divisible by 4.
std::vector<double> downsample_4x4(const Matrix& frame);

// Binary PGM (P5), maxval 255, pixel = round(value * 255) clamped.
void write_pgm(const std::filesystem::path& path, const Matrix& frame);

}  // namespace tse
