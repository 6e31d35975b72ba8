#include "ncouple/synth.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ncouple/error.hpp"
#include "ncouple/rng.hpp"

namespace ncouple {

namespace {

struct Note {
  std::size_t f0 = 0;   // fundamental bin, 0 = silent
  double gain = 0.0;
  double decay = 0.0;   // per-partial amplitude ratio
  std::size_t remaining = 0;
};

std::size_t uniform_int(Rng& rng, std::size_t lo, std::size_t hi) {  // inclusive
  return lo + static_cast<std::size_t>(rng.below(hi - lo + 1));
}

double uniform_real(Rng& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

void add_stack(Mat& m, std::size_t t, const Note& note, double wobble) {
  if (note.f0 == 0) return;
  double amp = note.gain * wobble;
  for (std::size_t k = note.f0; k < m.rows(); k += note.f0) {
    m(k, t) += amp;
    amp *= note.decay;
  }
}

}  // namespace

Dataset synth_dataset(const SynthConfig& cfg, std::optional<BinScaler> scaler) {
  const std::size_t n = cfg.bins;
  if (n < 16) throw ConfigError("synth: need at least 16 bins");
  if (cfg.tracks == 0 || cfg.frames < 2 * cfg.tracks) throw ConfigError("synth: need at least 2 frames per track");

  Dataset ds;
  const auto window = static_cast<std::uint32_t>(n - 1);
  ds.config = StftConfig::with_window(44100, window, std::max<std::uint32_t>(1, window / 4));

  // Target fundamentals keep partial count <= (n - 1) / f0 <= n / 5.
  const std::size_t vocal_lo = std::max<std::size_t>(5, n / 16);
  const std::size_t vocal_hi = std::max(vocal_lo, n / 4);
  const std::size_t accomp_lo = 3;
  const std::size_t accomp_hi = std::max<std::size_t>(accomp_lo + 1, n / 3);

  Rng rng(cfg.seed);
  const std::size_t per_track = cfg.frames / cfg.tracks;
  for (std::size_t track = 0; track < cfg.tracks; ++track) {
    Mat target(n, per_track);
    Mat interference(n, per_track);
    Note vocal;
    Note accomp[2];
    const double noise_level = uniform_real(rng, 0.05, 0.2);
    const double tilt = uniform_real(rng, 0.2, 0.6) * static_cast<double>(n);

    for (std::size_t t = 0; t < per_track; ++t) {
      if (vocal.remaining == 0) {
        const bool sung = rng.uniform() < 0.8;
        vocal.f0 = sung ? uniform_int(rng, vocal_lo, vocal_hi) : 0;
        vocal.gain = uniform_real(rng, 0.5, 1.5);
        vocal.decay = uniform_real(rng, 0.6, 0.9);
        vocal.remaining = uniform_int(rng, 8, 40);
      }
      for (auto& a : accomp) {
        if (a.remaining != 0) continue;
        do {
          a.f0 = uniform_int(rng, accomp_lo, accomp_hi);
        } while (vocal.f0 != 0 && a.f0 == vocal.f0);
        a.gain = uniform_real(rng, 0.3, 1.2);
        a.decay = uniform_real(rng, 0.4, 0.8);
        a.remaining = uniform_int(rng, 16, 64);
      }
      add_stack(target, t, vocal, uniform_real(rng, 0.85, 1.15));
      for (const auto& a : accomp) add_stack(interference, t, a, uniform_real(rng, 0.9, 1.1));
      for (std::size_t k = 0; k < n; ++k) {
        interference(k, t) += noise_level * std::exp(-static_cast<double>(k) / tilt) * rng.uniform();
      }
      --vocal.remaining;
      for (auto& a : accomp) --a.remaining;
    }
    ds.pairs.push_back({"synth" + std::to_string(track), add(target, interference), std::move(target)});
  }

  if (scaler) {
    if (scaler->per_bin_std.size() != n) throw ShapeError("synth: scaler has " + std::to_string(scaler->per_bin_std.size()) + " bins, need " + std::to_string(n));
    ds.scaler = std::move(*scaler);
  } else {
    std::vector<Mat> mixes;
    for (const auto& p : ds.pairs) mixes.push_back(p.mixture);
    ds.scaler = fit_scaler(mixes);
  }
  return ds;
}

}  // namespace ncouple
