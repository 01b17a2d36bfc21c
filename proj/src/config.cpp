#include "tse/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace tse {

std::size_t ExperimentConfig::input_dim() const {
  if (experiment == ExperimentKind::kClock) return clock_resolution * clock_resolution;
  return 28 * 28;
}

std::vector<double> ExperimentConfig::effective_c() const {
  if (!c.empty()) return c;
  std::vector<double> out(layers.size());
  for (std::size_t l = 0; l < layers.size(); ++l)
    out[l] = std::pow(2.0, static_cast<double>(l));
  return out;
}

std::vector<double> ExperimentConfig::effective_d() const {
  if (!d.empty()) return d;
  return std::vector<double>(layers.size(), 10.0);
}

ExperimentConfig default_config(ExperimentKind kind) {
  ExperimentConfig cfg;
  cfg.experiment = kind;
  cfg.layers = {144, 121, 100, 81, 64, 49, 36, 25, 16};
  cfg.walk.x = {1.5, 24.0};
  cfg.walk.y = {1.5, 24.0};
  cfg.walk.log_scale = {0.06, 24.0};
  cfg.walk.rotation = {0.12, 24.0};
  cfg.walk.pixel_noise_std = 0.08;
  if (kind == ExperimentKind::kMnist) {
    cfg.walk.shear = {0.08, 24.0};
    cfg.walk.log_aspect = {0.05, 24.0};
  } else {
    cfg.walk.shear = {0.0, 24.0};
    cfg.walk.log_aspect = {0.0, 24.0};
  }
  return cfg;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

double parse_real(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("invalid number for " + key + ": '" + value + "'");
  }
}

std::uint64_t parse_count(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(value, &pos);
    if (pos != value.size() || v < 0) throw std::invalid_argument("");
    return static_cast<std::uint64_t>(v);
  } catch (const std::exception&) {
    throw ConfigError("invalid count for " + key + ": '" + value + "'");
  }
}

std::vector<double> parse_real_list(const std::string& key, const std::string& value) {
  std::vector<double> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(parse_real(key, item));
  }
  if (out.empty()) throw ConfigError("empty list for " + key);
  return out;
}

std::vector<std::size_t> parse_count_list(const std::string& key, const std::string& value) {
  std::vector<std::size_t> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(static_cast<std::size_t>(parse_count(key, item)));
  }
  if (out.empty()) throw ConfigError("empty list for " + key);
  return out;
}

void apply_key(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  auto coord = [&](CoordWalk& walk, const std::string& suffix) -> bool {
    if (key.ends_with(".std_px") || key.ends_with(".std_radians") ||
        key.ends_with(".std_log") || key.ends_with(".std")) {
      (void)suffix;
      walk.stationary_std = parse_real(key, value);
      return true;
    }
    if (key.ends_with(".tau_frames")) {
      walk.time_constant = parse_real(key, value);
      if (walk.time_constant < 1.0) throw ConfigError(key + " must be >= 1");
      return true;
    }
    return false;
  };

  if (key == "experiment") {
    // handled in the first pass; accept silently
    if (value != "clock" && value != "mnist")
      throw ConfigError("unknown experiment: '" + value + "'");
  } else if (key == "net.layers") {
    cfg.layers = parse_count_list(key, value);
  } else if (key == "objective.c") {
    cfg.c = parse_real_list(key, value);
  } else if (key == "objective.d") {
    cfg.d = parse_real_list(key, value);
  } else if (key == "objective.jitter") {
    cfg.jitter = parse_real(key, value);
  } else if (key == "adam.rate") {
    cfg.adam.rate = parse_real(key, value);
  } else if (key == "adam.beta1") {
    cfg.adam.beta1 = parse_real(key, value);
  } else if (key == "adam.beta2") {
    cfg.adam.beta2 = parse_real(key, value);
  } else if (key == "adam.epsilon") {
    cfg.adam.epsilon = parse_real(key, value);
  } else if (key == "adam.clip_norm") {
    cfg.adam.clip_norm = parse_real(key, value);
  } else if (key.starts_with("walk.x.")) {
    if (!coord(cfg.walk.x, key)) throw ConfigError("unknown config key: " + key);
  } else if (key.starts_with("walk.y.")) {
    if (!coord(cfg.walk.y, key)) throw ConfigError("unknown config key: " + key);
  } else if (key.starts_with("walk.scale.")) {
    if (!coord(cfg.walk.log_scale, key)) throw ConfigError("unknown config key: " + key);
  } else if (key.starts_with("walk.rotation.")) {
    if (!coord(cfg.walk.rotation, key)) throw ConfigError("unknown config key: " + key);
  } else if (key.starts_with("walk.shear.")) {
    if (!coord(cfg.walk.shear, key)) throw ConfigError("unknown config key: " + key);
  } else if (key.starts_with("walk.aspect.")) {
    if (!coord(cfg.walk.log_aspect, key)) throw ConfigError("unknown config key: " + key);
  } else if (key == "walk.pixel_noise_std") {
    cfg.walk.pixel_noise_std = parse_real(key, value);
  } else if (key == "clock.resolution") {
    cfg.clock_resolution = parse_count(key, value);
  } else if (key == "clock.frames_per_batch") {
    cfg.clock_frames_per_batch = parse_count(key, value);
  } else if (key == "mnist.images") {
    cfg.mnist_images = value;
  } else if (key == "mnist.labels") {
    cfg.mnist_labels = value;
  } else if (key == "mnist.test_images") {
    cfg.mnist_test_images = value;
  } else if (key == "mnist.test_labels") {
    cfg.mnist_test_labels = value;
  } else if (key == "mnist.clip_frames") {
    cfg.mnist_clip_frames = parse_count(key, value);
  } else if (key == "mnist.clips_per_batch") {
    cfg.mnist_clips_per_batch = parse_count(key, value);
  } else if (key == "train.iterations") {
    cfg.iterations = parse_count(key, value);
  } else if (key == "train.hours") {
    cfg.hours = parse_real(key, value);
  } else if (key == "train.log_every") {
    cfg.log_every = parse_count(key, value);
  } else if (key == "train.checkpoint_every") {
    cfg.checkpoint_every = parse_count(key, value);
  } else if (key == "train.threads") {
    cfg.threads = parse_count(key, value);
  } else if (key == "seed.init") {
    cfg.seed_init = parse_count(key, value);
  } else if (key == "seed.data") {
    cfg.seed_data = parse_count(key, value);
  } else if (key == "seed.eval") {
    cfg.seed_eval = parse_count(key, value);
  } else if (key == "eval.movie_frames") {
    cfg.eval_movie_frames = parse_count(key, value);
  } else if (key == "eval.labeled_frames") {
    cfg.eval_labeled_frames = parse_count(key, value);
  } else if (key == "eval.min_frame_gap") {
    cfg.eval_min_frame_gap = parse_count(key, value);
  } else if (key == "eval.pca_components") {
    cfg.pca_components = parse_count(key, value);
  } else if (key == "eval.pca_fit") {
    if (value == "clean")
      cfg.pca_fit_distorted = false;
    else if (value == "distorted")
      cfg.pca_fit_distorted = true;
    else
      throw ConfigError("eval.pca_fit must be 'clean' or 'distorted'");
  } else if (key == "eval.sweep_sizes") {
    cfg.sweep_sizes = parse_count_list(key, value);
  } else {
    throw ConfigError("unknown config key: " + key);
  }
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.layers.empty()) throw ConfigError("net.layers must name at least one layer");
  for (std::size_t u : cfg.layers)
    if (u == 0) throw ConfigError("net.layers entries must be positive");
  if (!cfg.c.empty() && cfg.c.size() != cfg.layers.size())
    throw ConfigError("objective.c length must match net.layers");
  if (!cfg.d.empty() && cfg.d.size() != cfg.layers.size())
    throw ConfigError("objective.d length must match net.layers");
  for (double v : cfg.c)
    if (v < 0.0) throw ConfigError("objective.c entries must be nonnegative");
  for (double v : cfg.d)
    if (v < 0.0) throw ConfigError("objective.d entries must be nonnegative");
  if (!(cfg.jitter > 0.0)) throw ConfigError("objective.jitter must be positive");
  if (cfg.experiment == ExperimentKind::kClock && cfg.clock_resolution < 8)
    throw ConfigError("clock.resolution must be at least 8");
  if (cfg.clock_frames_per_batch < 2)
    throw ConfigError("clock.frames_per_batch must be at least 2");
  if (cfg.mnist_clip_frames < 2) throw ConfigError("mnist.clip_frames must be at least 2");
  if (cfg.mnist_clips_per_batch == 0)
    throw ConfigError("mnist.clips_per_batch must be positive");
  if (cfg.log_every == 0) throw ConfigError("train.log_every must be positive");
  if (cfg.threads == 0) throw ConfigError("train.threads must be positive");
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
  // First pass: find the experiment kind so defaults can be applied.
  ExperimentKind kind = ExperimentKind::kClock;
  std::istringstream scan(text);
  std::string line;
  while (std::getline(scan, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    if (trim(line.substr(0, eq)) == "experiment") {
      const std::string value = trim(line.substr(eq + 1));
      if (value == "mnist")
        kind = ExperimentKind::kMnist;
      else if (value != "clock")
        throw ConfigError("unknown experiment: '" + value + "'");
    }
  }

  ExperimentConfig cfg = default_config(kind);
  std::istringstream in(text);
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    apply_key(cfg, key, value);
  }
  validate(cfg);
  return cfg;
}

ExperimentConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str());
}

namespace {

std::string join_reals(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ",";
    out += format_double(values[i]);
  }
  return out;
}

std::string join_counts(const std::vector<std::size_t>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(values[i]);
  }
  return out;
}

}  // namespace

std::string config_to_text(const ExperimentConfig& cfg) {
  std::ostringstream out;
  out << "experiment = " << (cfg.experiment == ExperimentKind::kClock ? "clock" : "mnist") << "\n";
  out << "net.layers = " << join_counts(cfg.layers) << "\n";
  out << "objective.c = " << join_reals(cfg.effective_c()) << "\n";
  out << "objective.d = " << join_reals(cfg.effective_d()) << "\n";
  out << "objective.jitter = " << format_double(cfg.jitter) << "\n";
  out << "adam.rate = " << format_double(cfg.adam.rate) << "\n";
  out << "adam.beta1 = " << format_double(cfg.adam.beta1) << "\n";
  out << "adam.beta2 = " << format_double(cfg.adam.beta2) << "\n";
  out << "adam.epsilon = " << format_double(cfg.adam.epsilon) << "\n";
  out << "adam.clip_norm = " << format_double(cfg.adam.clip_norm) << "\n";
  out << "walk.x.std_px = " << format_double(cfg.walk.x.stationary_std) << "\n";
  out << "walk.x.tau_frames = " << format_double(cfg.walk.x.time_constant) << "\n";
  out << "walk.y.std_px = " << format_double(cfg.walk.y.stationary_std) << "\n";
  out << "walk.y.tau_frames = " << format_double(cfg.walk.y.time_constant) << "\n";
  out << "walk.scale.std_log = " << format_double(cfg.walk.log_scale.stationary_std) << "\n";
  out << "walk.scale.tau_frames = " << format_double(cfg.walk.log_scale.time_constant) << "\n";
  out << "walk.rotation.std_radians = " << format_double(cfg.walk.rotation.stationary_std) << "\n";
  out << "walk.rotation.tau_frames = " << format_double(cfg.walk.rotation.time_constant) << "\n";
  out << "walk.shear.std = " << format_double(cfg.walk.shear.stationary_std) << "\n";
  out << "walk.shear.tau_frames = " << format_double(cfg.walk.shear.time_constant) << "\n";
  out << "walk.aspect.std_log = " << format_double(cfg.walk.log_aspect.stationary_std) << "\n";
  out << "walk.aspect.tau_frames = " << format_double(cfg.walk.log_aspect.time_constant) << "\n";
  out << "walk.pixel_noise_std = " << format_double(cfg.walk.pixel_noise_std) << "\n";
  out << "clock.resolution = " << cfg.clock_resolution << "\n";
  out << "clock.frames_per_batch = " << cfg.clock_frames_per_batch << "\n";
  out << "mnist.images = " << cfg.mnist_images.string() << "\n";
  out << "mnist.labels = " << cfg.mnist_labels.string() << "\n";
  out << "mnist.test_images = " << cfg.mnist_test_images.string() << "\n";
  out << "mnist.test_labels = " << cfg.mnist_test_labels.string() << "\n";
  out << "mnist.clip_frames = " << cfg.mnist_clip_frames << "\n";
  out << "mnist.clips_per_batch = " << cfg.mnist_clips_per_batch << "\n";
  out << "train.iterations = " << cfg.iterations << "\n";
  out << "train.hours = " << format_double(cfg.hours) << "\n";
  out << "train.log_every = " << cfg.log_every << "\n";
  out << "train.checkpoint_every = " << cfg.checkpoint_every << "\n";
  out << "train.threads = " << cfg.threads << "\n";
  out << "seed.init = " << cfg.seed_init << "\n";
  out << "seed.data = " << cfg.seed_data << "\n";
  out << "seed.eval = " << cfg.seed_eval << "\n";
  out << "eval.movie_frames = " << cfg.eval_movie_frames << "\n";
  out << "eval.labeled_frames = " << cfg.eval_labeled_frames << "\n";
  out << "eval.min_frame_gap = " << cfg.eval_min_frame_gap << "\n";
  out << "eval.pca_components = " << cfg.pca_components << "\n";
  out << "eval.pca_fit = " << (cfg.pca_fit_distorted ? "distorted" : "clean") << "\n";
  out << "eval.sweep_sizes = " << join_counts(cfg.sweep_sizes) << "\n";
  return out.str();
}

}  // namespace tse
