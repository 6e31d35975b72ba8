#include <gtest/gtest.h>

#include <fstream>

#include "ncouple/error.hpp"
#include "ncouple/wav.hpp"
#include "support.hpp"

namespace ncouple {
namespace {

TEST(Wav, StereoOppositeChannelsCancel) {
  test::TempDir dir("wav");
  std::vector<float> inter;
  for (int i = 0; i < 100; ++i) {
    const float s = 0.01f * static_cast<float>(i % 50);
    inter.push_back(s);
    inter.push_back(-s);
  }
  write_wav(dir / "c.wav", inter, 2, 8000, 32);
  for (float v : load_wav_mono(dir / "c.wav")) EXPECT_EQ(v, 0.0f);
}

TEST(Wav, StereoConstantChannelsAverage) {
  test::TempDir dir("wav");
  std::vector<float> inter;
  for (int i = 0; i < 10; ++i) {
    inter.push_back(0.5f);
    inter.push_back(0.3f);
  }
  write_wav(dir / "a.wav", inter, 2, 8000, 32);
  for (float v : load_wav_mono(dir / "a.wav")) EXPECT_FLOAT_EQ(v, 0.4f);
}

TEST(Wav, MonoPassesThroughAtEveryDepth) {
  test::TempDir dir("wav");
  const std::vector<float> sig{0.0f, 0.25f, -0.5f, 0.75f, -1.0f};
  for (std::uint16_t bits : {16, 24, 32}) {
    const auto path = dir / ("m" + std::to_string(bits) + ".wav");
    write_wav(path, sig, 1, 44100, bits);
    const WavAudio audio = read_wav(path);
    EXPECT_EQ(audio.info.sample_rate, 44100u);
    EXPECT_EQ(audio.info.channels, 1u);
    EXPECT_EQ(audio.info.bits_per_sample, bits);
    const auto mono = load_wav_mono(path);
    ASSERT_EQ(mono.size(), sig.size());
    const float tol = bits == 16 ? 1.0f / 32767 : bits == 24 ? 1.0f / 8388607 : 0.0f;
    for (std::size_t i = 0; i < sig.size(); ++i) EXPECT_NEAR(mono[i], sig[i], tol) << bits;
  }
}

TEST(Wav, MissingFileNamesPath) {
  try {
    load_wav_mono("/nonexistent/x.wav");
    FAIL();
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/x.wav"), std::string::npos);
  }
}

TEST(Wav, GarbageIsFormatErrorNamingPath) {
  test::TempDir dir("wav");
  const auto path = dir / "junk.wav";
  std::ofstream(path) << "definitely not a riff file";
  try {
    read_wav(path);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("junk.wav"), std::string::npos);
  }
}

TEST(Wav, UnsupportedEncodingRejected) {
  test::TempDir dir("wav");
  // 8-bit PCM header with a tiny data chunk.
  const unsigned char hdr[] = {'R', 'I', 'F', 'F', 38, 0, 0, 0, 'W', 'A', 'V', 'E', 'f', 'm', 't', ' ', 16, 0, 0, 0,
                               1,   0,   1,   0,   0x40, 0x1f, 0, 0, 0x40, 0x1f, 0, 0, 1, 0, 8, 0,
                               'd', 'a', 't', 'a', 2,   0,   0, 0, 128, 129};
  const auto path = dir / "u8.wav";
  std::ofstream(path, std::ios::binary).write(reinterpret_cast<const char*>(hdr), sizeof hdr);
  EXPECT_THROW(read_wav(path), FormatError);
}

TEST(Wav, WriteRejectsBadDepth) {
  test::TempDir dir("wav");
  EXPECT_THROW(write_wav(dir / "x.wav", {0.0f}, 1, 8000, 8), ConfigError);
}

}  // namespace
}  // namespace ncouple
