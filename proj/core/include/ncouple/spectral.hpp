#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ncouple/mat.hpp"

namespace ncouple {

enum class WindowKind : std::uint8_t { hamming = 0 };

struct StftConfig {
  std::uint32_t sample_rate = 44100;
  std::uint32_t window_len = 2048;  // ~46.4 ms at 44.1 kHz
  std::uint32_t hop = 384;          // ~8.71 ms
  std::uint32_t fft_size = 4096;    // zero-padding factor 2
  std::uint32_t bins_kept = 2049;
  WindowKind window_kind = WindowKind::hamming;

  // Config with fft_size = 2 * window_len and bins_kept = fft_size / 2 + 1.
  static StftConfig with_window(std::uint32_t sample_rate, std::uint32_t window_len, std::uint32_t hop);
  // Throws ConfigError when an invariant is violated.
  void validate() const;

  friend bool operator==(const StftConfig&, const StftConfig&) = default;
};

struct Spectrogram {
  StftConfig config;
  Mat mags;  // bins_kept x frames, non-negative
  std::string source_id;
};

// Per-bin divisor making each frequency row unit-variance over time.
struct BinScaler {
  std::vector<double> per_bin_std;
  double epsilon = 1e-8;

  friend bool operator==(const BinScaler&, const BinScaler&) = default;
};

struct SpectrogramPair {
  std::string id;
  Mat mixture;  // raw magnitudes, bins x frames
  Mat target;   // same shape as mixture

  friend bool operator==(const SpectrogramPair&, const SpectrogramPair&) = default;
};

struct Dataset {
  StftConfig config;
  std::vector<SpectrogramPair> pairs;
  BinScaler scaler;  // fit on mixtures

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

// Magnitude STFT. Frame count is 1 + floor((len - window_len) / hop).
Spectrogram stft_mag(std::span<const float> signal, const StftConfig& cfg, std::string source_id = {});

// Hamming window of the configured length (symmetric form).
std::vector<double> make_window(const StftConfig& cfg);

// Population std per bin over all frames of all inputs, floored at epsilon.
BinScaler fit_scaler(std::span<const Mat> spectrograms, double epsilon = 1e-8);
Mat apply_scaler(const Mat& mags, const BinScaler& scaler);
Spectrogram apply_scaler(const Spectrogram& s, const BinScaler& scaler);

struct FrameRange {
  std::size_t begin = 0;
  std::size_t end = 0;  // exclusive
  std::size_t size() const noexcept { return end - begin; }
  friend bool operator==(const FrameRange&, const FrameRange&) = default;
};

// Contiguous window of `frames` frames maximising the minimum, over sources,
// of the mean per-frame energy (sum of squared magnitudes). Ties resolve to
// the earliest window. The mixture only fixes the frame count.
FrameRange select_active_segment(const Mat& mixture, std::span<const Mat> sources, std::size_t frames);
std::size_t seconds_to_frames(const StftConfig& cfg, double seconds);

// One contiguous T-frame window inside one pair of a dataset.
struct SegmentRef {
  std::size_t index = 0;  // position in the enumeration below
  std::size_t pair = 0;
  FrameRange frames;
};

// All full, non-overlapping T-frame windows, pair by pair in order.
std::vector<SegmentRef> segment_windows(const Dataset& ds, std::size_t frames_per_segment);

// Scaled mixture and target columns for one segment.
struct SegmentData {
  Mat mixture;
  Mat target;
};
SegmentData segment_data(const Dataset& ds, const SegmentRef& seg);

// All frames of all pairs, scaled, concatenated column-wise.
SegmentData scaled_frames(const Dataset& ds);

inline constexpr std::uint32_t kDatasetVersion = 1;
std::vector<std::uint8_t> encode_dataset(const Dataset& ds);
Dataset decode_dataset(std::span<const std::uint8_t> bytes);
void save_dataset(const Dataset& ds, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace ncouple
