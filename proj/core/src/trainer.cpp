#include "ncouple/trainer.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "ncouple/adam.hpp"
#include "ncouple/error.hpp"
#include "ncouple/parallel.hpp"
#include "ncouple/rng.hpp"

namespace ncouple {

namespace {

// Improvement means a relative decrease larger than this.
constexpr double kImprovementTolerance = 1e-9;

Mat gather_columns(const Mat& m, std::span<const std::size_t> cols) {
  Mat out(m.rows(), cols.size());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t j = 0; j < cols.size(); ++j) out(r, j) = m(r, cols[j]);
  return out;
}

std::vector<std::size_t> shuffled_indices(std::size_t count, std::uint64_t seed) {
  std::vector<std::size_t> idx(count);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = count; i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
  return idx;
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size == 0) throw ConfigError("train: batch_size must be positive");
  if (!(initial_lr > 0.0)) throw ConfigError("train: initial_lr must be positive");
  if (halve_patience == 0) throw ConfigError("train: halve_patience must be positive");
  if (stop_patience < halve_patience) throw ConfigError("train: stop_patience must be >= halve_patience");
  if (max_epochs == 0) throw ConfigError("train: max_epochs must be positive");
}

TrainResult train(const Arch& arch, const Mat& x, const Mat& y, const TrainConfig& cfg) {
  cfg.validate();
  if (x.cols() == 0) throw ConfigError("train: dataset has no frames");
  if (x.rows() != y.rows() || x.cols() != y.cols()) {
    throw ShapeError("train: mixtures " + x.shape_str() + " vs targets " + y.shape_str());
  }
  const std::size_t frames = x.cols();

  Rng init_rng(cfg.seed);
  ModelParams params = init_params(arch, x.rows(), init_rng);
  const auto refs = parameter_refs(params);
  AdamState adam;
  adam.lr = cfg.initial_lr;

  TrainResult result;
  result.initial_loss = mse(y, forward(params, x).output);
  result.best_loss = std::numeric_limits<double>::infinity();
  result.checkpoint = {params, cfg.seed, 0};

  std::uint32_t stale_epochs = 0;
  for (std::uint32_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto order = shuffled_indices(frames, derive_seed(cfg.seed, epoch));
    double weighted = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t begin = 0; begin < frames; begin += cfg.batch_size, ++batch_index) {
      const std::size_t end = std::min(frames, begin + cfg.batch_size);
      const auto cols = std::span(order).subspan(begin, end - begin);
      const Mat xb = gather_columns(x, cols);
      const Mat yb = gather_columns(y, cols);
      const ForwardTrace trace = forward(params, xb);
      const double loss = mse(yb, trace.output);
      if (!std::isfinite(loss)) {
        throw NumericError("train: loss diverged at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(batch_index));
      }
      weighted += loss * static_cast<double>(cols.size());
      const auto grads = flatten(backward(params, trace, yb));
      adam_step(adam, refs, grads);
    }

    const double mean_loss = weighted / static_cast<double>(frames);
    result.history.push_back({epoch, mean_loss, adam.lr});
    if (mean_loss < result.best_loss * (1.0 - kImprovementTolerance) || !std::isfinite(result.best_loss)) {
      result.best_loss = mean_loss;
      result.checkpoint = {params, cfg.seed, epoch};
      stale_epochs = 0;
      continue;
    }
    ++stale_epochs;
    if (stale_epochs >= cfg.stop_patience) break;
    if (stale_epochs % cfg.halve_patience == 0) adam.lr *= 0.5;
  }
  return result;
}

TrainResult train(const Arch& arch, const Dataset& dataset, const TrainConfig& cfg) {
  const SegmentData frames = scaled_frames(dataset);
  return train(arch, frames.mixture, frames.target, cfg);
}

std::vector<SeedRun> train_multi_seed(const Arch& arch, const Dataset& dataset, const TrainConfig& cfg,
                                      std::span<const std::uint64_t> seeds, unsigned threads) {
  std::vector<SeedRun> runs(seeds.size());
  if (seeds.empty()) return runs;
  const SegmentData frames = scaled_frames(dataset);
  parallel_for(seeds.size(), threads, [&](std::size_t i) {
    runs[i].seed = seeds[i];
    TrainConfig run_cfg = cfg;
    run_cfg.seed = seeds[i];
    try {
      runs[i].result = train(arch, frames.mixture, frames.target, run_cfg);
    } catch (const std::exception& e) {
      runs[i].error = e.what();
    }
  });
  return runs;
}

std::string loss_history_csv(std::span<const EpochRecord> history) {
  std::ostringstream out;
  out.precision(17);
  out << "epoch,mean_loss,lr\n";
  for (const auto& r : history) out << r.epoch << ',' << r.mean_loss << ',' << r.lr << '\n';
  return out.str();
}

}  // namespace ncouple
