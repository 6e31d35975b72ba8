#include "ncouple/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>

#include "ncouple/binio.hpp"
#include "ncouple/error.hpp"

namespace ncouple {

namespace {

// FFTW planning is not thread-safe; execution with new-array calls is.
std::mutex& fftw_plan_mutex() {
  static std::mutex m;
  return m;
}

class RealFft {
 public:
  explicit RealFft(std::size_t n) : n_(n) {
    in_ = fftw_alloc_real(n);
    out_ = fftw_alloc_complex(n / 2 + 1);
    std::lock_guard lock(fftw_plan_mutex());
    plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in_, out_, FFTW_ESTIMATE);
  }
  ~RealFft() {
    {
      std::lock_guard lock(fftw_plan_mutex());
      fftw_destroy_plan(plan_);
    }
    fftw_free(in_);
    fftw_free(out_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::span<double> input() { return {in_, n_}; }
  void run() { fftw_execute(plan_); }
  double magnitude(std::size_t k) const { return std::hypot(out_[k][0], out_[k][1]); }

 private:
  std::size_t n_;
  double* in_ = nullptr;
  fftw_complex* out_ = nullptr;
  fftw_plan plan_ = nullptr;
};

void write_config(ByteWriter& w, const StftConfig& c) {
  w.u32(c.sample_rate);
  w.u32(c.window_len);
  w.u32(c.hop);
  w.u32(c.fft_size);
  w.u32(c.bins_kept);
  w.u8(static_cast<std::uint8_t>(c.window_kind));
}

StftConfig read_config(ByteReader& r) {
  StftConfig c;
  c.sample_rate = r.u32();
  c.window_len = r.u32();
  c.hop = r.u32();
  c.fft_size = r.u32();
  c.bins_kept = r.u32();
  const std::uint8_t kind = r.u8();
  if (kind != static_cast<std::uint8_t>(WindowKind::hamming)) {
    throw FormatError("dataset: unknown window kind " + std::to_string(kind));
  }
  c.window_kind = WindowKind::hamming;
  return c;
}

}  // namespace

StftConfig StftConfig::with_window(std::uint32_t sample_rate, std::uint32_t window_len, std::uint32_t hop) {
  StftConfig c;
  c.sample_rate = sample_rate;
  c.window_len = window_len;
  c.hop = hop;
  c.fft_size = 2 * window_len;
  c.bins_kept = c.fft_size / 2 + 1;
  return c;
}

void StftConfig::validate() const {
  if (window_len == 0 || hop == 0 || fft_size == 0) throw ConfigError("stft: window, hop and fft size must be positive");
  if (fft_size < window_len) {
    throw ConfigError("stft: fft_size " + std::to_string(fft_size) + " < window_len " + std::to_string(window_len));
  }
  if (bins_kept != fft_size / 2 + 1) {
    throw ConfigError("stft: bins_kept must equal fft_size/2+1 (" + std::to_string(fft_size / 2 + 1) + "), got " +
                      std::to_string(bins_kept));
  }
}

std::vector<double> make_window(const StftConfig& cfg) {
  std::vector<double> w(cfg.window_len, 1.0);
  if (cfg.window_len < 2) return w;
  const double denom = static_cast<double>(cfg.window_len - 1);
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / denom);
  }
  return w;
}

Spectrogram stft_mag(std::span<const float> signal, const StftConfig& cfg, std::string source_id) {
  cfg.validate();
  if (signal.size() < cfg.window_len) {
    throw ConfigError("stft: signal of " + std::to_string(signal.size()) + " samples is shorter than one window (" +
                      std::to_string(cfg.window_len) + ")");
  }
  const std::size_t frames = 1 + (signal.size() - cfg.window_len) / cfg.hop;
  const auto window = make_window(cfg);

  Spectrogram out{cfg, Mat(cfg.bins_kept, frames), std::move(source_id)};
  RealFft fft(cfg.fft_size);
  auto in = fft.input();
  for (std::size_t t = 0; t < frames; ++t) {
    std::fill(in.begin(), in.end(), 0.0);
    const std::size_t start = t * cfg.hop;
    for (std::size_t i = 0; i < cfg.window_len; ++i) in[i] = window[i] * static_cast<double>(signal[start + i]);
    fft.run();
    for (std::size_t k = 0; k < cfg.bins_kept; ++k) out.mags(k, t) = fft.magnitude(k);
  }
  return out;
}

BinScaler fit_scaler(std::span<const Mat> spectrograms, double epsilon) {
  if (spectrograms.empty()) throw ConfigError("fit_scaler: no spectrograms");
  const std::size_t bins = spectrograms.front().rows();
  std::size_t frames = 0;
  for (const auto& s : spectrograms) {
    if (s.rows() != bins) throw ShapeError("fit_scaler: bin count mismatch " + s.shape_str());
    frames += s.cols();
  }
  if (frames < 2) throw ConfigError("fit_scaler: need at least 2 frames, got " + std::to_string(frames));

  BinScaler scaler;
  scaler.epsilon = epsilon;
  scaler.per_bin_std.resize(bins);
  const double count = static_cast<double>(frames);
  for (std::size_t k = 0; k < bins; ++k) {
    double mean = 0.0;
    for (const auto& s : spectrograms)
      for (double v : s.row(k)) mean += v;
    mean /= count;
    double var = 0.0;
    for (const auto& s : spectrograms)
      for (double v : s.row(k)) var += (v - mean) * (v - mean);
    var /= count;
    scaler.per_bin_std[k] = std::max(std::sqrt(var), epsilon);
  }
  return scaler;
}

Mat apply_scaler(const Mat& mags, const BinScaler& scaler) {
  if (mags.rows() != scaler.per_bin_std.size()) {
    throw ShapeError("apply_scaler: " + mags.shape_str() + " vs scaler of " +
                     std::to_string(scaler.per_bin_std.size()) + " bins");
  }
  Mat out = mags;
  for (std::size_t k = 0; k < out.rows(); ++k) {
    const double s = scaler.per_bin_std[k];
    for (std::size_t t = 0; t < out.cols(); ++t) out(k, t) /= s;
  }
  return out;
}

Spectrogram apply_scaler(const Spectrogram& s, const BinScaler& scaler) {
  return Spectrogram{s.config, apply_scaler(s.mags, scaler), s.source_id};
}

FrameRange select_active_segment(const Mat& mixture, std::span<const Mat> sources, std::size_t frames) {
  const std::size_t total = mixture.cols();
  if (frames == 0) throw ConfigError("select_active_segment: requested duration is zero");
  if (frames > total) {
    throw ConfigError("select_active_segment: requested " + std::to_string(frames) + " frames but only " +
                      std::to_string(total) + " available");
  }
  // prefix[s][t] = energy of source s over frames [0, t)
  std::vector<std::vector<double>> prefix;
  prefix.reserve(sources.size());
  for (const auto& src : sources) {
    if (src.cols() != total) throw ShapeError("select_active_segment: " + src.shape_str() + " vs mixture " + mixture.shape_str());
    std::vector<double> p(total + 1, 0.0);
    for (std::size_t t = 0; t < total; ++t) {
      double e = 0.0;
      for (std::size_t k = 0; k < src.rows(); ++k) e += src(k, t) * src(k, t);
      p[t + 1] = p[t] + e;
    }
    prefix.push_back(std::move(p));
  }
  if (prefix.empty()) return {0, frames};

  FrameRange best{0, frames};
  double best_score = -1.0;
  for (std::size_t begin = 0; begin + frames <= total; ++begin) {
    double score = INFINITY;
    for (const auto& p : prefix) score = std::min(score, (p[begin + frames] - p[begin]) / static_cast<double>(frames));
    if (score > best_score) {
      best_score = score;
      best = {begin, begin + frames};
    }
  }
  return best;
}

std::size_t seconds_to_frames(const StftConfig& cfg, double seconds) {
  return static_cast<std::size_t>(std::llround(seconds * cfg.sample_rate / cfg.hop));
}

std::vector<SegmentRef> segment_windows(const Dataset& ds, std::size_t frames_per_segment) {
  if (frames_per_segment == 0) throw ConfigError("segment_windows: segment length must be positive");
  std::vector<SegmentRef> out;
  for (std::size_t p = 0; p < ds.pairs.size(); ++p) {
    const std::size_t frames = ds.pairs[p].mixture.cols();
    for (std::size_t begin = 0; begin + frames_per_segment <= frames; begin += frames_per_segment) {
      out.push_back({out.size(), p, {begin, begin + frames_per_segment}});
    }
  }
  return out;
}

SegmentData segment_data(const Dataset& ds, const SegmentRef& seg) {
  if (seg.pair >= ds.pairs.size()) throw ConfigError("segment refers to missing pair " + std::to_string(seg.pair));
  const auto& pair = ds.pairs[seg.pair];
  return {apply_scaler(pair.mixture.col_range(seg.frames.begin, seg.frames.end), ds.scaler),
          apply_scaler(pair.target.col_range(seg.frames.begin, seg.frames.end), ds.scaler)};
}

SegmentData scaled_frames(const Dataset& ds) {
  if (ds.pairs.empty()) throw ConfigError("dataset has no pairs");
  const std::size_t bins = ds.pairs.front().mixture.rows();
  std::size_t frames = 0;
  for (const auto& p : ds.pairs) frames += p.mixture.cols();
  SegmentData out{Mat(bins, frames), Mat(bins, frames)};
  std::size_t offset = 0;
  for (const auto& p : ds.pairs) {
    const Mat mix = apply_scaler(p.mixture, ds.scaler);
    const Mat tgt = apply_scaler(p.target, ds.scaler);
    for (std::size_t k = 0; k < bins; ++k) {
      for (std::size_t t = 0; t < mix.cols(); ++t) {
        out.mixture(k, offset + t) = mix(k, t);
        out.target(k, offset + t) = tgt(k, t);
      }
    }
    offset += mix.cols();
  }
  return out;
}

std::vector<std::uint8_t> encode_dataset(const Dataset& ds) {
  ByteWriter w;
  w.magic("NCD1");
  w.u32(kDatasetVersion);
  write_config(w, ds.config);
  w.u32(static_cast<std::uint32_t>(ds.pairs.size()));
  for (const auto& p : ds.pairs) {
    if (p.mixture.rows() != p.target.rows() || p.mixture.cols() != p.target.cols()) {
      throw ShapeError("dataset pair '" + p.id + "': mixture " + p.mixture.shape_str() + " vs target " +
                       p.target.shape_str());
    }
    w.str(p.id);
    w.mat(p.mixture);
    w.mat(p.target);
  }
  w.f64_vec(ds.scaler.per_bin_std);
  w.f64(ds.scaler.epsilon);
  return w.take();
}

Dataset decode_dataset(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, "dataset");
  r.expect_magic("NCD1");
  r.version(kDatasetVersion);
  Dataset ds;
  ds.config = read_config(r);
  const std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    SpectrogramPair p;
    p.id = r.str();
    p.mixture = r.mat();
    p.target = r.mat();
    if (p.mixture.rows() != p.target.rows() || p.mixture.cols() != p.target.cols()) {
      throw FormatError("dataset: pair '" + p.id + "' has misaligned mixture/target");
    }
    ds.pairs.push_back(std::move(p));
  }
  ds.scaler.per_bin_std = r.f64_vec();
  ds.scaler.epsilon = r.f64();
  if (!r.at_end()) throw FormatError("dataset: " + std::to_string(r.remaining()) + " trailing bytes");
  return ds;
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
  write_file_atomic(path, encode_dataset(ds));
}

Dataset load_dataset(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  try {
    return decode_dataset(bytes);
  } catch (const VersionError& e) {
    throw VersionError(path.string() + ": " + e.what());
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace ncouple
