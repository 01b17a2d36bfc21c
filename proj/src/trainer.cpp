#include "tse/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <ostream>
#include <random>
#include <sstream>

#include "tse/numerics.hpp"
#include "tse/objective.hpp"
#include "tse/parallel.hpp"

namespace tse {

namespace {

namespace fs = std::filesystem;

std::vector<LayerSpec> layer_specs(const ExperimentConfig& cfg) {
  std::vector<LayerSpec> specs;
  specs.reserve(cfg.layers.size());
  for (std::size_t units : cfg.layers) specs.push_back({units, Activation::kTanh});
  return specs;
}

struct Batch {
  Matrix inputs;
  std::vector<std::size_t> boundaries;
};

Batch build_clock_batch(Checkpoint& ckpt, const ExperimentConfig& cfg, std::uint64_t iteration) {
  const std::size_t res = cfg.clock_resolution;
  MovieClip clip = continue_clock_movie(ckpt.clock_stream, cfg.walk, cfg.clock_frames_per_batch,
                                        res, res, derive_seed(cfg.seed_data, iteration));
  return {std::move(clip.frames), {0}};
}

// Tag mixed into the seed that picks each batch's source images, distinct
// from the per-clip seeds.
constexpr std::uint64_t kSourcePickTag = 0x736f75726365ull;

Batch build_mnist_batch(const MnistDataset& dataset, const ExperimentConfig& cfg,
                        std::uint64_t iteration) {
  const std::size_t clips = cfg.mnist_clips_per_batch;
  const std::size_t frames = cfg.mnist_clip_frames;
  const std::size_t dim = dataset.rows * dataset.cols;
  const std::size_t half = dataset.count / 2;
  if (half == 0) throw DataError("mnist dataset has no images");

  std::mt19937_64 pick(derive_seed(cfg.seed_data, iteration, kSourcePickTag));
  std::vector<std::size_t> sources(clips);
  for (std::size_t c = 0; c < clips; ++c) sources[c] = pick() % half;

  Batch batch;
  batch.inputs = Matrix(clips * frames, dim);
  batch.boundaries.resize(clips);
  for (std::size_t c = 0; c < clips; ++c) batch.boundaries[c] = c * frames;

  parallel_chunks(clips, cfg.threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t c = lo; c < hi; ++c) {
      const Matrix source = dataset.image(sources[c]);
      MovieClip clip = make_mnist_clip(source, cfg.walk, frames,
                                       derive_seed(cfg.seed_data, iteration, c + 1));
      std::copy(clip.frames.data(), clip.frames.data() + clip.frames.size(),
                batch.inputs.data() + c * frames * dim);
    }
  });
  return batch;
}

std::string metrics_header(std::size_t depth) {
  std::string line = "iteration,f_ts,f_e,f_total";
  for (std::size_t l = 1; l <= depth; ++l) line += ",logdet_" + std::to_string(l);
  return line + "\n";
}

std::string metrics_row(std::uint64_t iteration, const ObjectiveValue& value) {
  std::string line = std::to_string(iteration);
  line += "," + format_double(value.f_ts);
  line += "," + format_double(value.f_e);
  line += "," + format_double(value.f_total);
  for (double logdet : value.per_layer_logdet) line += "," + format_double(logdet);
  return line + "\n";
}

}  // namespace

Checkpoint init_checkpoint(const ExperimentConfig& cfg) {
  Checkpoint ckpt;
  ckpt.config_text = config_to_text(cfg);
  ckpt.params = init_params(cfg.input_dim(), layer_specs(cfg), cfg.seed_init);
  ckpt.adam = init_adam(ckpt.params, cfg.adam);
  if (cfg.experiment == ExperimentKind::kClock) {
    ckpt.has_clock_stream = true;
    std::mt19937_64 rng(derive_seed(cfg.seed_data, 0));
    ckpt.clock_stream.clock = ClockState{};
    ckpt.clock_stream.camera = sample_stationary(cfg.walk, rng);
  }
  return ckpt;
}

Checkpoint train(const ExperimentConfig& cfg, const TrainOptions& options,
                 const Checkpoint* resume) {
  const auto start_time = std::chrono::steady_clock::now();
  auto elapsed_seconds = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_time).count();
  };

  Checkpoint ckpt = resume ? *resume : init_checkpoint(cfg);

  fs::create_directories(options.out_dir);
  {
    std::ofstream provenance(options.out_dir / "config_resolved.txt");
    provenance << config_to_text(cfg);
  }

  MnistDataset dataset;
  if (cfg.experiment == ExperimentKind::kMnist) {
    if (cfg.mnist_images.empty() || cfg.mnist_labels.empty())
      throw ConfigError("mnist experiment requires mnist.images and mnist.labels");
    dataset = load_mnist(cfg.mnist_images, cfg.mnist_labels);
  }

  std::ofstream metrics(options.out_dir / "metrics.csv");
  if (!metrics) throw DataError("cannot write metrics.csv in " + options.out_dir.string());
  metrics << metrics_header(cfg.layers.size());

  const ObjectiveConfig base_objective{cfg.effective_c(), cfg.effective_d(), cfg.jitter};

  for (std::uint64_t iter = ckpt.iteration + 1; iter <= cfg.iterations; ++iter) {
    Batch batch = (cfg.experiment == ExperimentKind::kClock)
                      ? build_clock_batch(ckpt, cfg, iter)
                      : build_mnist_batch(dataset, cfg, iter);

    // Retry a degenerate batch with escalating jitter before giving up.
    StepResult step;
    ObjectiveConfig objective = base_objective;
    for (int attempt = 0;; ++attempt) {
      try {
        step = tse_step_gradient(ckpt.params, batch.inputs, batch.boundaries, objective);
        break;
      } catch (const DegenerateCovarianceError& e) {
        if (attempt >= 3) throw NumericalAbortError(e.layer(), iter);
        objective.jitter *= 10.0;
        if (options.console)
          *options.console << "iteration " << iter << ": covariance degenerate at layer "
                           << e.layer() << ", retrying with jitter " << objective.jitter
                           << "\n";
      }
    }

    adam_step(ckpt.params, step.gradients, ckpt.adam);
    ckpt.iteration = iter;
    ckpt.last_f_total = step.value.f_total;

    if (iter % cfg.log_every == 0 || iter == cfg.iterations) {
      metrics << metrics_row(iter, step.value);
      metrics.flush();
      if (options.console) {
        *options.console << "iter " << iter << "  f_ts " << step.value.f_ts << "  f_e "
                         << step.value.f_e << "  f_total " << step.value.f_total << "  ["
                         << elapsed_seconds() << " s]\n";
      }
    }
    if (cfg.checkpoint_every > 0 && iter % cfg.checkpoint_every == 0) {
      Checkpoint snapshot = ckpt;
      snapshot.wall_seconds += elapsed_seconds();
      save_checkpoint(options.out_dir / ("checkpoint_" + std::to_string(iter) + ".tse"),
                      snapshot);
    }
    if (cfg.hours > 0.0 && elapsed_seconds() >= cfg.hours * 3600.0) {
      if (options.console)
        *options.console << "wall-clock budget reached at iteration " << iter << "\n";
      break;
    }
  }

  ckpt.wall_seconds += elapsed_seconds();
  save_checkpoint(options.out_dir / "checkpoint_final.tse", ckpt);
  return ckpt;
}

namespace {

// Uniformly sampled frame indices with a minimum pairwise gap, so the
// labeled frames are essentially uncorrelated. Random sequential packing
// jams near ~3/4 of the theoretical capacity, hence the 3/2 headroom
// requirement and the restart-on-stall.
std::vector<std::size_t> spaced_frame_indices(std::size_t frame_count, std::size_t wanted,
                                              std::size_t min_gap, std::uint64_t seed) {
  if (wanted * std::max<std::size_t>(min_gap, 1) * 3 > frame_count * 2)
    throw ConfigError("eval movie too short for the requested labeled frames and gap");
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> picked;
  picked.reserve(wanted);
  std::size_t attempts = 0;
  std::size_t stalled = 0;
  while (picked.size() < wanted) {
    if (++attempts > 10000000)
      throw ConfigError("could not place labeled frames with the requested gap");
    if (stalled > 10000) {
      picked.clear();
      stalled = 0;
    }
    const std::size_t candidate = rng() % frame_count;
    bool ok = true;
    for (std::size_t p : picked) {
      const std::size_t gap = (p > candidate) ? p - candidate : candidate - p;
      if (gap < min_gap) {
        ok = false;
        break;
      }
    }
    if (ok) {
      picked.push_back(candidate);
      stalled = 0;
    } else {
      ++stalled;
    }
  }
  std::sort(picked.begin(), picked.end());
  return picked;
}

Matrix rows_subset(const Matrix& source, const std::vector<std::size_t>& indices) {
  Matrix out(indices.size(), source.cols());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    auto src = source.row(indices[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

Matrix downsample_rows(const Matrix& frames, std::size_t height, std::size_t width) {
  Matrix frame(height, width);
  const std::size_t out_dim = (height / 4) * (width / 4);
  Matrix out(frames.rows(), out_dim);
  for (std::size_t t = 0; t < frames.rows(); ++t) {
    auto src = frames.row(t);
    std::copy(src.begin(), src.end(), frame.data());
    const std::vector<double> down = downsample_4x4(frame);
    std::copy(down.begin(), down.end(), out.row(t).begin());
  }
  return out;
}

Matrix forward_output_chunked(const NetworkParams& params, const Matrix& inputs,
                              std::size_t chunk_rows = 4096) {
  Matrix out(inputs.rows(), params.units(params.layer_count() - 1));
  for (std::size_t lo = 0; lo < inputs.rows(); lo += chunk_rows) {
    const std::size_t hi = std::min(inputs.rows(), lo + chunk_rows);
    Matrix chunk(hi - lo, inputs.cols());
    std::copy(inputs.data() + lo * inputs.cols(), inputs.data() + hi * inputs.cols(),
              chunk.data());
    const Matrix reps = forward_output(params, chunk);
    std::copy(reps.data(), reps.data() + reps.size(), out.data() + lo * out.cols());
  }
  return out;
}

Matrix cos_sin_targets(const std::vector<double>& alpha, const std::vector<std::size_t>& indices) {
  Matrix targets(indices.size(), 2);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    targets(i, 0) = std::cos(alpha[indices[i]]);
    targets(i, 1) = std::sin(alpha[indices[i]]);
  }
  return targets;
}

// Per-layer slowness statistic: mean squared frame-to-frame difference
// over the summed unit variances.
double volatility_ratio(const Matrix& act) {
  double msd = 0.0;
  double var = 0.0;
  const std::size_t frames = act.rows();
  for (std::size_t k = 0; k < act.cols(); ++k) {
    double mean = 0.0;
    for (std::size_t t = 0; t < frames; ++t) mean += act(t, k);
    mean /= static_cast<double>(frames);
    double sq = 0.0;
    for (std::size_t t = 0; t < frames; ++t) {
      const double d = act(t, k) - mean;
      sq += d * d;
    }
    var += sq / static_cast<double>(frames - 1);
    double diff = 0.0;
    for (std::size_t t = 1; t < frames; ++t) {
      const double d = act(t, k) - act(t - 1, k);
      diff += d * d;
    }
    msd += diff / static_cast<double>(frames - 1);
  }
  return msd / var;
}

}  // namespace

ClockEvalReport eval_clock(const Checkpoint& ckpt, const ExperimentConfig& cfg,
                           const std::filesystem::path& out_dir) {
  if (cfg.experiment != ExperimentKind::kClock)
    throw ConfigError("eval-clock requires a clock experiment checkpoint");
  if (ckpt.params.input_dim != cfg.input_dim())
    throw ConfigError("checkpoint input dimension does not match config");

  fs::create_directories(out_dir);
  const std::size_t res = cfg.clock_resolution;

  MovieClip movie = make_clock_clip(ClockState{}, cfg.walk, cfg.eval_movie_frames, res, res,
                                    derive_seed(cfg.seed_eval, 1));

  ActivationTrace trace = forward(ckpt.params, movie.frames, {0});
  const Matrix& reps_tse = trace.layers.back();

  const PcaBasis pca = pca_fit(movie.frames, cfg.pca_components);
  const Matrix reps_pca = pca_project_rows(pca, movie.frames);
  const Matrix reps_down = downsample_rows(movie.frames, res, res);

  const std::vector<std::size_t> labeled = spaced_frame_indices(
      movie.frames.rows(), cfg.eval_labeled_frames, cfg.eval_min_frame_gap,
      derive_seed(cfg.seed_eval, 2));
  const Matrix targets = cos_sin_targets(movie.alpha, labeled);

  const ReadoutModel model_tse = fit_affine_readout(rows_subset(reps_tse, labeled), targets);
  const ReadoutModel model_pca = fit_affine_readout(rows_subset(reps_pca, labeled), targets);
  const ReadoutModel model_down = fit_affine_readout(rows_subset(reps_down, labeled), targets);

  ClockEvalReport report;
  report.rms_tse = readout_rms(model_tse, reps_tse, movie.alpha);
  report.rms_pca = readout_rms(model_pca, reps_pca, movie.alpha);
  report.rms_down = readout_rms(model_down, reps_down, movie.alpha);

  report.volatility_ratio.push_back(volatility_ratio(movie.frames));
  for (const Matrix& act : trace.layers)
    report.volatility_ratio.push_back(volatility_ratio(act));

  {
    std::ofstream out(out_dir / "fig3_readout.csv");
    out << "frame,truth_cos,truth_sin,tse_cos,tse_sin,pca_cos,pca_sin,down_cos,down_sin\n";
    const Matrix pred_tse = readout_predict(model_tse, reps_tse);
    const Matrix pred_pca = readout_predict(model_pca, reps_pca);
    const Matrix pred_down = readout_predict(model_down, reps_down);
    for (std::size_t t = 0; t < movie.frames.rows(); ++t) {
      out << t << "," << format_double(std::cos(movie.alpha[t])) << ","
          << format_double(std::sin(movie.alpha[t])) << "," << format_double(pred_tse(t, 0))
          << "," << format_double(pred_tse(t, 1)) << "," << format_double(pred_pca(t, 0)) << ","
          << format_double(pred_pca(t, 1)) << "," << format_double(pred_down(t, 0)) << ","
          << format_double(pred_down(t, 1)) << "\n";
    }
  }
  {
    std::ofstream out(out_dir / "volatility.csv");
    out << "layer,ratio\n";
    for (std::size_t l = 0; l < report.volatility_ratio.size(); ++l)
      out << l << "," << format_double(report.volatility_ratio[l]) << "\n";
  }
  {
    std::ofstream out(out_dir / "fig2_traces.csv");
    out << "layer,unit,frame,activation\n";
    std::mt19937_64 rng(derive_seed(cfg.seed_eval, 3));
    for (std::size_t l = 0; l < trace.layers.size(); ++l) {
      const Matrix& act = trace.layers[l];
      const std::size_t count = std::min<std::size_t>(3, act.cols());
      std::vector<std::size_t> units;
      while (units.size() < count) {
        const std::size_t u = rng() % act.cols();
        if (std::find(units.begin(), units.end(), u) == units.end()) units.push_back(u);
      }
      for (std::size_t u : units)
        for (std::size_t t = 0; t < act.rows(); ++t)
          out << (l + 1) << "," << u << "," << t << "," << format_double(act(t, u)) << "\n";
    }
  }
  {
    std::ofstream out(out_dir / "readout_rms.csv");
    out << "method,rms\n";
    out << "tse," << format_double(report.rms_tse) << "\n";
    out << "pca," << format_double(report.rms_pca) << "\n";
    out << "down," << format_double(report.rms_down) << "\n";
  }
  return report;
}

namespace {

Matrix raw_rows(const MnistDataset& ds, std::size_t begin, std::size_t count) {
  Matrix out(count, ds.rows * ds.cols);
  for (std::size_t i = 0; i < count; ++i) ds.copy_image_row(begin + i, out.row(i));
  return out;
}

std::vector<int> label_range(const MnistDataset& ds, std::size_t begin, std::size_t count) {
  std::vector<int> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = ds.labels[begin + i];
  return out;
}

void write_sweep(std::ofstream& out, const std::string& method,
                 const std::vector<SweepPoint>& points) {
  for (const SweepPoint& p : points)
    out << method << "," << p.size << "," << format_double(p.accuracy) << ","
        << format_double(1.0 - p.accuracy) << "\n";
}

}  // namespace

MnistEvalReport eval_mnist(const Checkpoint& ckpt, const ExperimentConfig& cfg,
                           const std::filesystem::path& out_dir) {
  if (cfg.experiment != ExperimentKind::kMnist)
    throw ConfigError("eval-mnist requires an mnist experiment checkpoint");
  if (cfg.mnist_images.empty() || cfg.mnist_labels.empty() || cfg.mnist_test_images.empty() ||
      cfg.mnist_test_labels.empty())
    throw ConfigError("eval-mnist requires train and test dataset paths");

  fs::create_directories(out_dir);
  const MnistDataset train_ds = load_mnist(cfg.mnist_images, cfg.mnist_labels);
  const MnistDataset test_ds = load_mnist(cfg.mnist_test_images, cfg.mnist_test_labels);
  if (ckpt.params.input_dim != train_ds.rows * train_ds.cols)
    throw ConfigError("checkpoint input dimension does not match dataset");

  const std::size_t half = train_ds.count / 2;
  const std::size_t pool_count = train_ds.count - half;

  std::vector<std::size_t> sizes = cfg.sweep_sizes;
  sizes.erase(std::remove_if(sizes.begin(), sizes.end(),
                             [&](std::size_t s) { return s > pool_count; }),
              sizes.end());
  if (sizes.empty()) throw ConfigError("no sweep sizes fit the labeled pool");

  // Labeled pool: the held-out half of the training set, in file order,
  // represented as undistorted images. Test set likewise undistorted.
  const Matrix pool_raw = raw_rows(train_ds, half, pool_count);
  const Matrix test_raw = raw_rows(test_ds, 0, test_ds.count);
  const std::vector<int> pool_labels = label_range(train_ds, half, pool_count);
  const std::vector<int> test_labels = label_range(test_ds, 0, test_ds.count);

  // PCA basis: clean images from the movie half by default, or frames of
  // synthesized movies when configured.
  PcaBasis pca;
  if (cfg.pca_fit_distorted) {
    const std::size_t clip_count = std::max<std::size_t>(1, 24000 / cfg.mnist_clip_frames);
    Matrix frames(clip_count * cfg.mnist_clip_frames, train_ds.rows * train_ds.cols);
    std::mt19937_64 pick(derive_seed(cfg.seed_eval, 4));
    for (std::size_t c = 0; c < clip_count; ++c) {
      const Matrix source = train_ds.image(pick() % half);
      MovieClip clip = make_mnist_clip(source, cfg.walk, cfg.mnist_clip_frames,
                                       derive_seed(cfg.seed_eval, 5, c));
      std::copy(clip.frames.data(), clip.frames.data() + clip.frames.size(),
                frames.data() + c * clip.frames.size());
    }
    pca = pca_fit(frames, cfg.pca_components);
  } else {
    pca = pca_fit(raw_rows(train_ds, 0, half), cfg.pca_components);
  }

  MnistEvalReport report;
  std::ofstream out(out_dir / "fig5_sweep.csv");
  out << "method,size,accuracy,error_rate\n";

  {
    LabeledSet pool{forward_output_chunked(ckpt.params, pool_raw), pool_labels};
    const Matrix test = forward_output_chunked(ckpt.params, test_raw);
    report.tse = accuracy_sweep(pool, sizes, test, test_labels, cfg.threads);
    write_sweep(out, "tse", report.tse);
  }
  {
    LabeledSet pool{pca_project_rows(pca, pool_raw), pool_labels};
    const Matrix test = pca_project_rows(pca, test_raw);
    report.pca = accuracy_sweep(pool, sizes, test, test_labels, cfg.threads);
    write_sweep(out, "pca", report.pca);
  }
  {
    LabeledSet pool{downsample_rows(pool_raw, train_ds.rows, train_ds.cols), pool_labels};
    const Matrix test = downsample_rows(test_raw, test_ds.rows, test_ds.cols);
    report.down = accuracy_sweep(pool, sizes, test, test_labels, cfg.threads);
    write_sweep(out, "down", report.down);
  }
  {
    LabeledSet pool{pool_raw, pool_labels};
    report.raw = accuracy_sweep(pool, sizes, test_raw, test_labels, cfg.threads);
    write_sweep(out, "raw", report.raw);
  }
  return report;
}

std::vector<std::filesystem::path> dump_weights(const Checkpoint& ckpt, std::size_t layer,
                                                std::size_t unit_count,
                                                const ExperimentConfig& cfg,
                                                const std::filesystem::path& out_dir) {
  if (layer < 1 || layer > ckpt.params.layer_count())
    throw ConfigError("dump-weights: layer out of range");
  const Matrix& weights = ckpt.params.weights[layer - 1];
  const std::size_t fan_in = weights.cols();

  const std::size_t side = static_cast<std::size_t>(std::lround(std::sqrt(
      static_cast<double>(fan_in))));
  const bool square = side * side == fan_in;

  const fs::path dir = out_dir / "weights";
  fs::create_directories(dir);

  std::mt19937_64 rng(derive_seed(cfg.seed_eval, 6));
  const std::size_t count = std::min(unit_count, weights.rows());
  std::vector<std::size_t> units;
  while (units.size() < count) {
    const std::size_t u = rng() % weights.rows();
    if (std::find(units.begin(), units.end(), u) == units.end()) units.push_back(u);
  }
  std::sort(units.begin(), units.end());

  std::vector<fs::path> written;
  for (std::size_t u : units) {
    Matrix img = square ? Matrix(side, side) : Matrix(1, fan_in);
    auto row = weights.row(u);
    double lo = row[0], hi = row[0];
    for (double v : row) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    const double span = hi - lo;
    for (std::size_t i = 0; i < fan_in; ++i)
      img.data()[i] = (span > 0.0) ? (row[i] - lo) / span : 0.5;
    const fs::path path =
        dir / ("layer" + std::to_string(layer) + "_unit" + std::to_string(u) + ".pgm");
    write_pgm(path, img);
    written.push_back(path);
  }
  return written;
}

std::vector<std::filesystem::path> gen_preview(const ExperimentConfig& cfg,
                                               std::size_t frame_count,
                                               const std::filesystem::path& out_dir) {
  const fs::path dir = out_dir / "frames";
  fs::create_directories(dir);
  std::vector<fs::path> written;

  const std::size_t stride = 10;
  MovieClip clip;
  if (cfg.experiment == ExperimentKind::kClock) {
    const std::size_t res = cfg.clock_resolution;
    clip = make_clock_clip(ClockState{}, cfg.walk, std::max<std::size_t>(frame_count * stride, 2),
                           res, res, derive_seed(cfg.seed_eval, 7));
  } else {
    if (cfg.mnist_images.empty() || cfg.mnist_labels.empty())
      throw ConfigError("gen-preview for mnist requires dataset paths");
    const MnistDataset ds = load_mnist(cfg.mnist_images, cfg.mnist_labels);
    clip = make_mnist_clip(ds.image(0), cfg.walk,
                           std::max<std::size_t>(frame_count * stride, 2),
                           derive_seed(cfg.seed_eval, 7));
  }

  Matrix frame(clip.height, clip.width);
  char name[64];
  for (std::size_t i = 0; i < frame_count; ++i) {
    const std::size_t t = std::min(i * stride, clip.frames.rows() - 1);
    auto src = clip.frames.row(t);
    std::copy(src.begin(), src.end(), frame.data());
    std::snprintf(name, sizeof(name), "preview_%04zu.pgm", i);
    const fs::path path = dir / name;
    write_pgm(path, frame);
    written.push_back(path);
  }
  return written;
}

}  // namespace tse
