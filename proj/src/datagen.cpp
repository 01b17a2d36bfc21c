#include "tse/datagen.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

namespace tse {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t a, std::uint64_t b) { return mix64(a ^ mix64(b)); }

std::uint64_t derive_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return mix64(derive_seed(a, b) ^ mix64(c));
}

namespace {

double walk_coord(double value, double mean, const CoordWalk& walk,
                  std::normal_distribution<double>& normal, std::mt19937_64& rng) {
  double next = value + (mean - value) / walk.time_constant;
  if (walk.stationary_std > 0.0)
    next += walk.stationary_std * std::sqrt(2.0 / walk.time_constant) * normal(rng);
  return next;
}

// Stationary std of the discrete recurrence; slightly above the
// configured std for finite tau.
double discrete_stationary_std(const CoordWalk& walk) {
  return walk.stationary_std * std::sqrt(2.0 * walk.time_constant / (2.0 * walk.time_constant - 1.0));
}

}  // namespace

CameraState camera_walk_step(const CameraState& state, const CameraWalkParams& params,
                             std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  CameraState next;
  next.x_offset = walk_coord(state.x_offset, params.mean.x_offset, params.x, normal, rng);
  next.y_offset = walk_coord(state.y_offset, params.mean.y_offset, params.y, normal, rng);
  next.log_scale = walk_coord(state.log_scale, params.mean.log_scale, params.log_scale, normal, rng);
  next.rotation = walk_coord(state.rotation, params.mean.rotation, params.rotation, normal, rng);
  next.shear = walk_coord(state.shear, params.mean.shear, params.shear, normal, rng);
  next.log_aspect = walk_coord(state.log_aspect, params.mean.log_aspect, params.log_aspect, normal, rng);
  return next;
}

CameraState sample_stationary(const CameraWalkParams& params, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  auto draw = [&](double mean, const CoordWalk& walk) {
    if (walk.stationary_std <= 0.0) return mean;
    return mean + discrete_stationary_std(walk) * normal(rng);
  };
  CameraState state;
  state.x_offset = draw(params.mean.x_offset, params.x);
  state.y_offset = draw(params.mean.y_offset, params.y);
  state.log_scale = draw(params.mean.log_scale, params.log_scale);
  state.rotation = draw(params.mean.rotation, params.rotation);
  state.shear = draw(params.mean.shear, params.shear);
  state.log_aspect = draw(params.mean.log_aspect, params.log_aspect);
  return state;
}

ClockState advance_clock(const ClockState& state) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  ClockState next = state;
  next.long_angle -= two_pi / 400.0;
  next.short_angle -= two_pi / 2000.0;
  next.frame_index += 1;
  return next;
}

namespace {

struct Affine2 {
  // Row-major 2x2 acting on (row, col) deltas.
  double a, b, c, d;

  Affine2 inverse() const {
    const double det = a * d - b * c;
    return {d / det, -b / det, -c / det, a / det};
  }
};

Affine2 camera_matrix(const CameraState& cam) {
  const double cs = std::cos(cam.rotation);
  const double sn = std::sin(cam.rotation);
  const double scale = std::exp(cam.log_scale);
  const double aspect = std::exp(cam.log_aspect);
  // rotation * shear * diag(scale*aspect, scale/aspect)
  const double d0 = scale * aspect;
  const double d1 = scale / aspect;
  // shear * diag: [[d0, shear*d1], [0, d1]]
  const double m00 = d0, m01 = cam.shear * d1, m11 = d1;
  return {cs * m00, cs * m01 - sn * m11, sn * m00, sn * m01 + cs * m11};
}

double bilinear_sample(const Matrix& src, double r, double c) {
  const double fr = std::floor(r);
  const double fc = std::floor(c);
  const std::ptrdiff_t r0 = static_cast<std::ptrdiff_t>(fr);
  const std::ptrdiff_t c0 = static_cast<std::ptrdiff_t>(fc);
  const double wr = r - fr;
  const double wc = c - fc;

  auto at = [&](std::ptrdiff_t i, std::ptrdiff_t j) -> double {
    if (i < 0 || j < 0 || i >= static_cast<std::ptrdiff_t>(src.rows()) ||
        j >= static_cast<std::ptrdiff_t>(src.cols()))
      return 0.0;
    return src(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
  };

  return (1.0 - wr) * ((1.0 - wc) * at(r0, c0) + wc * at(r0, c0 + 1)) +
         wr * ((1.0 - wc) * at(r0 + 1, c0) + wc * at(r0 + 1, c0 + 1));
}

}  // namespace

Matrix warp_affine(const Matrix& src, const CameraState& camera) {
  const std::size_t h = src.rows();
  const std::size_t w = src.cols();
  const double cr = 0.5 * static_cast<double>(h - 1);
  const double cc = 0.5 * static_cast<double>(w - 1);
  const Affine2 inv = camera_matrix(camera).inverse();

  Matrix out(h, w);
  for (std::size_t r = 0; r < h; ++r) {
    const double dr = static_cast<double>(r) - cr;
    for (std::size_t col = 0; col < w; ++col) {
      const double dc = static_cast<double>(col) - cc;
      const double sr = inv.a * dr + inv.b * dc + cr - camera.y_offset;
      const double sc = inv.c * dr + inv.d * dc + cc - camera.x_offset;
      out(r, col) = bilinear_sample(src, sr, sc);
    }
  }
  return out;
}

namespace {

// Coverage-based anti-aliased segment from the image center: intensity
// ramps linearly over kEdgeRamp pixels around the half-width contour.
// The ramp is wide enough that warping a rendered frame and rendering a
// warped scene stay within bilinear tolerance of each other.
constexpr double kEdgeRamp = 2.0;

void draw_hand(Matrix& img, double angle, double length, double width) {
  const double cr = 0.5 * static_cast<double>(img.rows() - 1);
  const double cc = 0.5 * static_cast<double>(img.cols() - 1);
  const double dir_r = -std::sin(angle);
  const double dir_c = std::cos(angle);
  const double half_width = 0.5 * width;

  const double er = cr + length * dir_r;
  const double ec = cc + length * dir_c;
  const double margin = half_width + 0.5 * kEdgeRamp + 1.0;
  const std::size_t r_lo = static_cast<std::size_t>(std::max(0.0, std::floor(std::min(cr, er) - margin)));
  const std::size_t r_hi = std::min(img.rows() - 1, static_cast<std::size_t>(std::max(0.0, std::ceil(std::max(cr, er) + margin))));
  const std::size_t c_lo = static_cast<std::size_t>(std::max(0.0, std::floor(std::min(cc, ec) - margin)));
  const std::size_t c_hi = std::min(img.cols() - 1, static_cast<std::size_t>(std::max(0.0, std::ceil(std::max(cc, ec) + margin))));

  for (std::size_t r = r_lo; r <= r_hi; ++r) {
    for (std::size_t col = c_lo; col <= c_hi; ++col) {
      const double pr = static_cast<double>(r) - cr;
      const double pc = static_cast<double>(col) - cc;
      // Distance from pixel center to the segment [0, length] * dir.
      double along = pr * dir_r + pc * dir_c;
      along = std::clamp(along, 0.0, length);
      const double qr = pr - along * dir_r;
      const double qc = pc - along * dir_c;
      const double dist = std::sqrt(qr * qr + qc * qc);
      const double coverage = std::clamp(0.5 + (half_width - dist) / kEdgeRamp, 0.0, 1.0);
      if (coverage > 0.0) img(r, col) = std::max(img(r, col), coverage);
    }
  }
}

void add_noise_and_clamp(Matrix& img, double noise_std, std::mt19937_64& rng) {
  if (noise_std > 0.0) {
    std::normal_distribution<double> normal(0.0, noise_std);
    for (std::size_t i = 0; i < img.size(); ++i) img.data()[i] += normal(rng);
  }
  for (std::size_t i = 0; i < img.size(); ++i)
    img.data()[i] = std::clamp(img.data()[i], 0.0, 1.0);
}

}  // namespace

Matrix render_clock(const ClockState& state, const CameraState& camera, std::size_t height,
                    std::size_t width, double noise_std, std::mt19937_64& rng) {
  if (height < 8 || width < 8)
    throw std::invalid_argument("render_clock: resolution must be at least 8x8");
  const double base = static_cast<double>(std::min(height, width));
  Matrix img(height, width);
  draw_hand(img, state.long_angle, 0.45 * base, 1.5);
  draw_hand(img, state.short_angle, 0.28 * base, 2.5);
  Matrix out = warp_affine(img, camera);
  add_noise_and_clamp(out, noise_std, rng);
  return out;
}

namespace {

MovieClip render_clock_segment(ClockStream& stream, const CameraWalkParams& params,
                               std::size_t frames, std::size_t height, std::size_t width,
                               std::mt19937_64& rng) {
  MovieClip clip;
  clip.height = height;
  clip.width = width;
  clip.frames = Matrix(frames, height * width);
  clip.alpha.resize(frames);
  for (std::size_t t = 0; t < frames; ++t) {
    Matrix frame = render_clock(stream.clock, stream.camera, height, width,
                                params.pixel_noise_std, rng);
    std::copy(frame.data(), frame.data() + frame.size(), clip.frames.row(t).begin());
    clip.alpha[t] = inter_hand_angle(stream.clock);
    stream.clock = advance_clock(stream.clock);
    stream.camera = camera_walk_step(stream.camera, params, rng);
  }
  return clip;
}

}  // namespace

MovieClip continue_clock_movie(ClockStream& stream, const CameraWalkParams& params,
                               std::size_t frames, std::size_t height, std::size_t width,
                               std::uint64_t segment_seed) {
  std::mt19937_64 rng(segment_seed);
  MovieClip clip = render_clock_segment(stream, params, frames, height, width, rng);
  clip.seed = segment_seed;
  return clip;
}

MovieClip make_clock_clip(const ClockState& start, const CameraWalkParams& params,
                          std::size_t frames, std::size_t height, std::size_t width,
                          std::uint64_t seed) {
  if (frames < 2) throw std::invalid_argument("make_clock_clip: need at least 2 frames");
  std::mt19937_64 rng(seed);
  ClockStream stream{start, sample_stationary(params, rng)};
  MovieClip clip = render_clock_segment(stream, params, frames, height, width, rng);
  clip.seed = seed;
  return clip;
}

MovieClip make_mnist_clip(const Matrix& source, const CameraWalkParams& params,
                          std::size_t frames, std::uint64_t seed) {
  if (frames < 2) throw std::invalid_argument("make_mnist_clip: need at least 2 frames");
  std::mt19937_64 rng(seed);
  MovieClip clip;
  clip.height = source.rows();
  clip.width = source.cols();
  clip.frames = Matrix(frames, source.size());
  clip.seed = seed;
  CameraState camera = params.mean;
  for (std::size_t t = 0; t < frames; ++t) {
    Matrix frame = warp_affine(source, camera);
    add_noise_and_clamp(frame, params.pixel_noise_std, rng);
    std::copy(frame.data(), frame.data() + frame.size(), clip.frames.row(t).begin());
    camera = camera_walk_step(camera, params, rng);
  }
  return clip;
}

namespace {

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::uint8_t* p) {
  return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) |
         (std::uint32_t(p[2]) << 8) | std::uint32_t(p[3]);
}

}  // namespace

MnistDataset load_mnist(const std::filesystem::path& images_path,
                        const std::filesystem::path& labels_path) {
  const std::vector<std::uint8_t> img_bytes = read_file_bytes(images_path);
  if (img_bytes.size() < 16)
    throw DataError("truncated file: " + images_path.string() + " has only " +
                    std::to_string(img_bytes.size()) + " bytes, header needs 16");
  if (read_be32(img_bytes.data()) != 0x00000803u)
    throw DataError("bad magic number in " + images_path.string() +
                    " (expected 0x00000803)");
  MnistDataset ds;
  ds.count = read_be32(img_bytes.data() + 4);
  ds.rows = read_be32(img_bytes.data() + 8);
  ds.cols = read_be32(img_bytes.data() + 12);
  const std::size_t expected = 16 + ds.count * ds.rows * ds.cols;
  if (img_bytes.size() != expected)
    throw DataError("truncated file: " + images_path.string() + " expected " +
                    std::to_string(expected) + " bytes, got " +
                    std::to_string(img_bytes.size()));
  ds.pixels.assign(img_bytes.begin() + 16, img_bytes.end());

  const std::vector<std::uint8_t> label_bytes = read_file_bytes(labels_path);
  if (label_bytes.size() < 8)
    throw DataError("truncated file: " + labels_path.string() + " has only " +
                    std::to_string(label_bytes.size()) + " bytes, header needs 8");
  if (read_be32(label_bytes.data()) != 0x00000801u)
    throw DataError("bad magic number in " + labels_path.string() +
                    " (expected 0x00000801)");
  const std::size_t label_count = read_be32(label_bytes.data() + 4);
  const std::size_t expected_labels = 8 + label_count;
  if (label_bytes.size() != expected_labels)
    throw DataError("truncated file: " + labels_path.string() + " expected " +
                    std::to_string(expected_labels) + " bytes, got " +
                    std::to_string(label_bytes.size()));
  if (label_count != ds.count)
    throw DataError("count mismatch: " + std::to_string(ds.count) + " images vs " +
                    std::to_string(label_count) + " labels");
  ds.labels.assign(label_bytes.begin() + 8, label_bytes.end());
  return ds;
}

Matrix MnistDataset::image(std::size_t index) const {
  Matrix img(rows, cols);
  const std::uint8_t* src = pixels.data() + index * rows * cols;
  for (std::size_t i = 0; i < rows * cols; ++i)
    img.data()[i] = static_cast<double>(src[i]) / 255.0;
  return img;
}

void MnistDataset::copy_image_row(std::size_t index, std::span<double> out) const {
  const std::uint8_t* src = pixels.data() + index * rows * cols;
  for (std::size_t i = 0; i < rows * cols; ++i)
    out[i] = static_cast<double>(src[i]) / 255.0;
}

std::vector<double> downsample_4x4(const Matrix& frame) {
  if (frame.rows() % 4 != 0 || frame.cols() % 4 != 0)
    throw std::invalid_argument("downsample_4x4: dimensions not divisible by 4");
  const std::size_t out_rows = frame.rows() / 4;
  const std::size_t out_cols = frame.cols() / 4;
  std::vector<double> out(out_rows * out_cols, 0.0);
  for (std::size_t br = 0; br < out_rows; ++br)
    for (std::size_t bc = 0; bc < out_cols; ++bc) {
      double sum = 0.0;
      for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) sum += frame(br * 4 + i, bc * 4 + j);
      out[br * out_cols + bc] = sum / 16.0;
    }
  return out;
}

void write_pgm(const std::filesystem::path& path, const Matrix& frame) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + path.string());
  out << "P5\n" << frame.cols() << " " << frame.rows() << "\n255\n";
  for (std::size_t i = 0; i < frame.size(); ++i) {
    const double v = std::clamp(frame.data()[i], 0.0, 1.0);
    out.put(static_cast<char>(static_cast<int>(std::lround(v * 255.0))));
  }
}

}  // namespace tse
