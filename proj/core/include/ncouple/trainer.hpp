#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ncouple/model.hpp"
#include "ncouple/spectral.hpp"

namespace ncouple {

struct TrainConfig {
  std::size_t batch_size = 128;
  double initial_lr = 1e-3;
  std::uint32_t halve_patience = 2;  // non-improving epochs before lr /= 2
  std::uint32_t stop_patience = 4;   // non-improving epochs before stopping
  std::uint32_t max_epochs = 200;
  std::uint64_t seed = 0;

  void validate() const;
};

struct EpochRecord {
  std::uint32_t epoch = 0;  // 1-based
  double mean_loss = 0.0;   // frame-weighted mean of batch losses
  double lr = 0.0;          // learning rate used during the epoch
};

struct TrainResult {
  Checkpoint checkpoint;  // parameters at the end of the best epoch
  double best_loss = 0.0;
  double initial_loss = 0.0;  // full-data loss before the first update
  std::vector<EpochRecord> history;
};

// Trains on a column-wise dataset: x (mixtures) -> y (targets), both N x F.
TrainResult train(const Arch& arch, const Mat& x, const Mat& y, const TrainConfig& cfg);
// Trains on the scaled frames of every pair in `dataset`.
TrainResult train(const Arch& arch, const Dataset& dataset, const TrainConfig& cfg);

struct SeedRun {
  std::uint64_t seed = 0;
  std::optional<TrainResult> result;
  std::string error;  // set when result is empty
};

// One independent run per seed (cfg.seed is overridden). Failures are
// reported per run; siblings still complete.
std::vector<SeedRun> train_multi_seed(const Arch& arch, const Dataset& dataset, const TrainConfig& cfg,
                                      std::span<const std::uint64_t> seeds, unsigned threads = 1);

// "epoch,mean_loss,lr" with a header row.
std::string loss_history_csv(std::span<const EpochRecord> history);

}  // namespace ncouple
