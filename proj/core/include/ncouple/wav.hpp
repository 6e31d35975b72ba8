#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace ncouple {

struct WavInfo {
  std::uint32_t sample_rate = 0;
  std::uint16_t channels = 0;
  std::uint16_t bits_per_sample = 0;
  bool is_float = false;
};

// Decoded audio, samples interleaved by channel, scaled to [-1, 1].
struct WavAudio {
  WavInfo info;
  std::vector<float> samples;
};

// Reads PCM (16/24-bit integer or 32-bit float) little-endian RIFF/WAVE,
// including WAVE_FORMAT_EXTENSIBLE headers. Errors name the path.
WavAudio read_wav(const std::filesystem::path& path);

// Mono signal: stereo channels averaged sample-wise, mono passed through.
std::vector<float> load_wav_mono(const std::filesystem::path& path);

// Writes interleaved samples; bits_per_sample 16 or 24 gives integer PCM,
// 32 gives IEEE float.
void write_wav(const std::filesystem::path& path, const std::vector<float>& interleaved,
               std::uint16_t channels, std::uint32_t sample_rate, std::uint16_t bits_per_sample);

}  // namespace ncouple
