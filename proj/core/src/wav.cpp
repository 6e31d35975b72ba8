#include "ncouple/wav.hpp"

#include <algorithm>
#include <cstring>

#include "ncouple/binio.hpp"
#include "ncouple/error.hpp"

namespace ncouple {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t le16(const std::uint8_t* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }
std::uint32_t le32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

[[noreturn]] void fail(const std::filesystem::path& path, const std::string& why) {
  throw FormatError(path.string() + ": " + why);
}

}  // namespace

WavAudio read_wav(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  const std::uint8_t* p = bytes.data();
  const std::size_t n = bytes.size();
  if (n < 12 || std::memcmp(p, "RIFF", 4) != 0 || std::memcmp(p + 8, "WAVE", 4) != 0) {
    fail(path, "not a RIFF/WAVE file");
  }

  WavAudio out;
  std::uint16_t format = 0;
  bool have_fmt = false;
  const std::uint8_t* data = nullptr;
  std::size_t data_len = 0;

  std::size_t pos = 12;
  while (pos + 8 <= n) {
    const std::uint32_t chunk_len = le32(p + pos + 4);
    const std::size_t body = pos + 8;
    const std::size_t avail = std::min<std::size_t>(chunk_len, n - body);
    if (std::memcmp(p + pos, "fmt ", 4) == 0) {
      if (avail < 16) fail(path, "fmt chunk too short");
      format = le16(p + body);
      out.info.channels = le16(p + body + 2);
      out.info.sample_rate = le32(p + body + 4);
      out.info.bits_per_sample = le16(p + body + 14);
      if (format == kFormatExtensible) {
        if (avail < 26) fail(path, "extensible fmt chunk too short");
        format = le16(p + body + 24);  // first two bytes of the sub-format GUID
      }
      have_fmt = true;
    } else if (std::memcmp(p + pos, "data", 4) == 0) {
      data = p + body;
      data_len = avail;
    }
    pos = body + chunk_len + (chunk_len & 1u);
  }

  if (!have_fmt) fail(path, "missing fmt chunk");
  if (data == nullptr) fail(path, "missing data chunk");
  if (out.info.channels == 0) fail(path, "zero channels");

  const auto bits = out.info.bits_per_sample;
  if (format == kFormatFloat && bits == 32) {
    out.info.is_float = true;
  } else if (format == kFormatPcm && (bits == 16 || bits == 24 || bits == 32)) {
    out.info.is_float = false;
  } else {
    fail(path, "unsupported encoding (format tag " + std::to_string(format) + ", " + std::to_string(bits) +
                   " bits); expected 16/24-bit PCM or 32-bit float");
  }

  const std::size_t width = bits / 8;
  const std::size_t count = data_len / width;
  out.samples.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint8_t* s = data + i * width;
    float v = 0.0f;
    if (out.info.is_float) {
      std::memcpy(&v, s, 4);
    } else if (bits == 16) {
      v = static_cast<float>(static_cast<std::int16_t>(le16(s))) / 32768.0f;
    } else if (bits == 24) {
      std::int32_t x = static_cast<std::int32_t>(s[0] | (s[1] << 8) | (s[2] << 16));
      if (x & 0x800000) x -= 0x1000000;
      v = static_cast<float>(x) / 8388608.0f;
    } else {
      v = static_cast<float>(static_cast<double>(static_cast<std::int32_t>(le32(s))) / 2147483648.0);
    }
    out.samples[i] = v;
  }
  return out;
}

std::vector<float> load_wav_mono(const std::filesystem::path& path) {
  WavAudio audio = read_wav(path);
  const std::size_t ch = audio.info.channels;
  if (ch == 1) return std::move(audio.samples);
  if (ch != 2) fail(path, "unsupported channel count " + std::to_string(ch) + " (mono or stereo only)");
  std::vector<float> mono(audio.samples.size() / 2);
  for (std::size_t i = 0; i < mono.size(); ++i) {
    mono[i] = 0.5f * (audio.samples[2 * i] + audio.samples[2 * i + 1]);
  }
  return mono;
}

void write_wav(const std::filesystem::path& path, const std::vector<float>& interleaved, std::uint16_t channels,
               std::uint32_t sample_rate, std::uint16_t bits_per_sample) {
  if (bits_per_sample != 16 && bits_per_sample != 24 && bits_per_sample != 32) {
    throw ConfigError("write_wav: unsupported bit depth " + std::to_string(bits_per_sample));
  }
  const bool is_float = bits_per_sample == 32;
  const std::uint32_t width = bits_per_sample / 8u;
  const auto data_len = static_cast<std::uint32_t>(interleaved.size() * width);

  std::vector<std::uint8_t> buf;
  auto put = [&buf](const void* src, std::size_t len) {
    const auto* b = static_cast<const std::uint8_t*>(src);
    buf.insert(buf.end(), b, b + len);
  };
  auto put16 = [&](std::uint16_t v) { put(&v, 2); };
  auto put32 = [&](std::uint32_t v) { put(&v, 4); };

  put("RIFF", 4);
  put32(36 + data_len);
  put("WAVE", 4);
  put("fmt ", 4);
  put32(16);
  put16(is_float ? kFormatFloat : kFormatPcm);
  put16(channels);
  put32(sample_rate);
  put32(sample_rate * channels * width);
  put16(static_cast<std::uint16_t>(channels * width));
  put16(bits_per_sample);
  put("data", 4);
  put32(data_len);
  for (float f : interleaved) {
    if (is_float) {
      put(&f, 4);
      continue;
    }
    const double clamped = std::max(-1.0, std::min(1.0, static_cast<double>(f)));
    if (bits_per_sample == 16) {
      const auto v = static_cast<std::int16_t>(std::max(-32768.0, std::min(32767.0, clamped * 32768.0)));
      put(&v, 2);
    } else {
      const auto v = static_cast<std::int32_t>(std::max(-8388608.0, std::min(8388607.0, clamped * 8388608.0)));
      const std::uint8_t b[3] = {static_cast<std::uint8_t>(v & 0xff), static_cast<std::uint8_t>((v >> 8) & 0xff),
                                 static_cast<std::uint8_t>((v >> 16) & 0xff)};
      put(b, 3);
    }
  }
  write_file_atomic(path, buf);
}

}  // namespace ncouple
