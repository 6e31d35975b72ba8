#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ncouple/mat.hpp"

namespace ncouple {

// Little-endian byte sink for the NC*1 file formats.
class ByteWriter {
 public:
  void magic(std::string_view four_cc);
  void u8(std::uint8_t v);
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void f64(double v);
  // u32 byte length followed by the raw UTF-8 bytes.
  void str(std::string_view s);
  // u32 rows, u32 cols, row-major f64 values.
  void mat(const Mat& m);
  // u32 count, f64 values.
  void f64_vec(std::span<const double> v);

  const std::vector<std::uint8_t>& bytes() const noexcept { return buf_; }
  std::vector<std::uint8_t> take() noexcept { return std::move(buf_); }

 private:
  std::vector<std::uint8_t> buf_;
};

// Bounds-checked reader; every overrun throws FormatError("truncated ...").
class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> bytes, std::string what)
      : bytes_(bytes), what_(std::move(what)) {}

  // Throws FormatError when the next four bytes differ from `four_cc`.
  void expect_magic(std::string_view four_cc);
  // Reads a u32 version and throws VersionError if it exceeds `supported`.
  std::uint32_t version(std::uint32_t supported);
  std::uint8_t u8();
  std::uint32_t u32();
  std::uint64_t u64();
  double f64();
  std::string str();
  Mat mat();
  std::vector<double> f64_vec();

  bool at_end() const noexcept { return pos_ == bytes_.size(); }
  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

 private:
  std::span<const std::uint8_t> take(std::size_t n);

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
  std::string what_;
};

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
// Writes to a sibling temp file then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text_atomic(const std::filesystem::path& path, std::string_view text);

}  // namespace ncouple
