#pragma once

#include <cstdint>
#include <optional>

#include "ncouple/spectral.hpp"

namespace ncouple {

struct SynthConfig {
  std::size_t bins = 64;
  std::size_t frames = 4000;  // total, split evenly across tracks
  std::size_t tracks = 4;
  std::uint64_t seed = 0;
};

// Desk-scale stand-in for a vocal separation corpus. Targets are sparse
// quasi-harmonic stacks (one bin per partial, decaying amplitudes) so at most
// a quarter of any column is non-zero. Interference is a tilted broadband
// noise floor plus accompaniment stacks on fundamentals distinct from the
// target's. Mixture = target + interference in magnitude. The scaler is fit
// on the mixtures unless `scaler` is given (e.g. a training set's scaler for
// a held-out set).
Dataset synth_dataset(const SynthConfig& cfg, std::optional<BinScaler> scaler = std::nullopt);

}  // namespace ncouple
