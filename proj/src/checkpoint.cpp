#include "tse/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <vector>

namespace tse {

static_assert(std::endian::native == std::endian::little,
              "checkpoint serialization assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'T', 'S', 'E', '1'};

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void bytes(const void* p, std::size_t n) { out_.write(static_cast<const char*>(p), n); }
  void u8(std::uint8_t v) { bytes(&v, 1); }
  void u32(std::uint32_t v) { bytes(&v, 4); }
  void u64(std::uint64_t v) { bytes(&v, 8); }
  void f64(double v) { bytes(&v, 8); }

  void string(const std::string& s) {
    u64(s.size());
    bytes(s.data(), s.size());
  }
  void array(const double* p, std::size_t n) {
    u64(n);
    bytes(p, n * sizeof(double));
  }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in, const std::string& name) : in_(in), name_(name) {}

  void bytes(void* p, std::size_t n) {
    in_.read(static_cast<char*>(p), n);
    if (static_cast<std::size_t>(in_.gcount()) != n)
      throw DataError("truncated checkpoint: " + name_);
  }
  std::uint8_t u8() { std::uint8_t v; bytes(&v, 1); return v; }
  std::uint32_t u32() { std::uint32_t v; bytes(&v, 4); return v; }
  std::uint64_t u64() { std::uint64_t v; bytes(&v, 8); return v; }
  double f64() { double v; bytes(&v, 8); return v; }

  std::string string() {
    const std::uint64_t n = u64();
    std::string s(n, '\0');
    bytes(s.data(), n);
    return s;
  }
  void array_into(double* p, std::size_t expected) {
    const std::uint64_t n = u64();
    if (n != expected)
      throw DataError("checkpoint array length mismatch in " + name_);
    bytes(p, n * sizeof(double));
  }

 private:
  std::istream& in_;
  std::string name_;
};

void write_param_block(Writer& w, const ParamBlock& block) {
  for (std::size_t l = 0; l < block.weights.size(); ++l) {
    w.array(block.weights[l].data(), block.weights[l].size());
    w.array(block.biases[l].data(), block.biases[l].size());
  }
}

void read_param_block(Reader& r, ParamBlock& block) {
  for (std::size_t l = 0; l < block.weights.size(); ++l) {
    r.array_into(block.weights[l].data(), block.weights[l].size());
    r.array_into(block.biases[l].data(), block.biases[l].size());
  }
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint: " + path.string());
  Writer w(out);

  w.bytes(kMagic, 4);
  w.u32(ckpt.version);
  w.string(ckpt.config_text);
  w.u64(ckpt.iteration);
  w.f64(ckpt.wall_seconds);
  w.f64(ckpt.last_f_total);

  const NetworkParams& p = ckpt.params;
  w.u64(p.input_dim);
  w.u64(p.layer_count());
  for (std::size_t l = 0; l < p.layer_count(); ++l) {
    w.u64(p.weights[l].rows());
    w.u8(p.activations[l] == Activation::kTanh ? 1 : 0);
  }
  for (std::size_t l = 0; l < p.layer_count(); ++l) {
    w.array(p.weights[l].data(), p.weights[l].size());
    w.array(p.biases[l].data(), p.biases[l].size());
  }

  w.u64(ckpt.adam.step);
  w.f64(ckpt.adam.config.rate);
  w.f64(ckpt.adam.config.beta1);
  w.f64(ckpt.adam.config.beta2);
  w.f64(ckpt.adam.config.epsilon);
  w.f64(ckpt.adam.config.clip_norm);
  write_param_block(w, ckpt.adam.m);
  write_param_block(w, ckpt.adam.v);

  w.u8(ckpt.has_clock_stream ? 1 : 0);
  if (ckpt.has_clock_stream) {
    w.f64(ckpt.clock_stream.clock.long_angle);
    w.f64(ckpt.clock_stream.clock.short_angle);
    w.u64(ckpt.clock_stream.clock.frame_index);
    w.f64(ckpt.clock_stream.camera.x_offset);
    w.f64(ckpt.clock_stream.camera.y_offset);
    w.f64(ckpt.clock_stream.camera.log_scale);
    w.f64(ckpt.clock_stream.camera.rotation);
    w.f64(ckpt.clock_stream.camera.shear);
    w.f64(ckpt.clock_stream.camera.log_aspect);
  }
  if (!out) throw DataError("write failure on checkpoint: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path.string());
  Reader r(in, path.string());

  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0)
    throw DataError("bad magic in checkpoint: " + path.string());

  Checkpoint ckpt;
  ckpt.version = r.u32();
  if (ckpt.version != 1)
    throw DataError("unsupported checkpoint version " + std::to_string(ckpt.version));
  ckpt.config_text = r.string();
  ckpt.iteration = r.u64();
  ckpt.wall_seconds = r.f64();
  ckpt.last_f_total = r.f64();

  NetworkParams& p = ckpt.params;
  p.input_dim = r.u64();
  const std::uint64_t depth = r.u64();
  std::size_t fan_in = p.input_dim;
  for (std::uint64_t l = 0; l < depth; ++l) {
    const std::uint64_t units = r.u64();
    const bool is_tanh = r.u8() != 0;
    p.weights.emplace_back(units, fan_in);
    p.biases.emplace_back(units, 0.0);
    p.activations.push_back(is_tanh ? Activation::kTanh : Activation::kLinear);
    fan_in = units;
  }
  for (std::uint64_t l = 0; l < depth; ++l) {
    r.array_into(p.weights[l].data(), p.weights[l].size());
    r.array_into(p.biases[l].data(), p.biases[l].size());
  }

  ckpt.adam.step = r.u64();
  ckpt.adam.config.rate = r.f64();
  ckpt.adam.config.beta1 = r.f64();
  ckpt.adam.config.beta2 = r.f64();
  ckpt.adam.config.epsilon = r.f64();
  ckpt.adam.config.clip_norm = r.f64();
  ckpt.adam.m = zeros_like(p);
  ckpt.adam.v = zeros_like(p);
  read_param_block(r, ckpt.adam.m);
  read_param_block(r, ckpt.adam.v);

  ckpt.has_clock_stream = r.u8() != 0;
  if (ckpt.has_clock_stream) {
    ckpt.clock_stream.clock.long_angle = r.f64();
    ckpt.clock_stream.clock.short_angle = r.f64();
    ckpt.clock_stream.clock.frame_index = r.u64();
    ckpt.clock_stream.camera.x_offset = r.f64();
    ckpt.clock_stream.camera.y_offset = r.f64();
    ckpt.clock_stream.camera.log_scale = r.f64();
    ckpt.clock_stream.camera.rotation = r.f64();
    ckpt.clock_stream.camera.shear = r.f64();
    ckpt.clock_stream.camera.log_aspect = r.f64();
  }
  return ckpt;
}

}  // namespace tse
