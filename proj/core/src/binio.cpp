#include "ncouple/binio.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "ncouple/error.hpp"

namespace ncouple {

static_assert(std::endian::native == std::endian::little,
              "file formats assume a little-endian host");

namespace {

template <class T>
void append(std::vector<std::uint8_t>& buf, T v) {
  std::uint8_t raw[sizeof(T)];
  std::memcpy(raw, &v, sizeof(T));
  buf.insert(buf.end(), raw, raw + sizeof(T));
}

template <class T>
T load(std::span<const std::uint8_t> raw) {
  T v;
  std::memcpy(&v, raw.data(), sizeof(T));
  return v;
}

}  // namespace

void ByteWriter::magic(std::string_view four_cc) {
  buf_.insert(buf_.end(), four_cc.begin(), four_cc.end());
}
void ByteWriter::u8(std::uint8_t v) { buf_.push_back(v); }
void ByteWriter::u32(std::uint32_t v) { append(buf_, v); }
void ByteWriter::u64(std::uint64_t v) { append(buf_, v); }
void ByteWriter::f64(double v) { append(buf_, v); }

void ByteWriter::str(std::string_view s) {
  u32(static_cast<std::uint32_t>(s.size()));
  buf_.insert(buf_.end(), s.begin(), s.end());
}

void ByteWriter::mat(const Mat& m) {
  u32(static_cast<std::uint32_t>(m.rows()));
  u32(static_cast<std::uint32_t>(m.cols()));
  for (double v : m.data()) f64(v);
}

void ByteWriter::f64_vec(std::span<const double> v) {
  u32(static_cast<std::uint32_t>(v.size()));
  for (double x : v) f64(x);
}

std::span<const std::uint8_t> ByteReader::take(std::size_t n) {
  if (n > remaining()) {
    throw FormatError(what_ + ": truncated file (needed " + std::to_string(n) + " bytes at offset " +
                      std::to_string(pos_) + ", " + std::to_string(remaining()) + " left)");
  }
  auto out = bytes_.subspan(pos_, n);
  pos_ += n;
  return out;
}

void ByteReader::expect_magic(std::string_view four_cc) {
  auto raw = take(four_cc.size());
  if (std::memcmp(raw.data(), four_cc.data(), four_cc.size()) != 0) {
    throw FormatError(what_ + ": bad magic bytes, expected \"" + std::string(four_cc) + "\"");
  }
}

std::uint32_t ByteReader::version(std::uint32_t supported) {
  const std::uint32_t v = u32();
  if (v == 0 || v > supported) {
    throw VersionError(what_ + ": unsupported version " + std::to_string(v) + " (this build reads up to " +
                       std::to_string(supported) + ")");
  }
  return v;
}

std::uint8_t ByteReader::u8() { return take(1)[0]; }
std::uint32_t ByteReader::u32() { return load<std::uint32_t>(take(4)); }
std::uint64_t ByteReader::u64() { return load<std::uint64_t>(take(8)); }
double ByteReader::f64() { return load<double>(take(8)); }

std::string ByteReader::str() {
  const std::uint32_t n = u32();
  auto raw = take(n);
  return std::string(raw.begin(), raw.end());
}

Mat ByteReader::mat() {
  const std::size_t rows = u32();
  const std::size_t cols = u32();
  if (rows * cols > remaining() / 8) {
    throw FormatError(what_ + ": truncated file (matrix " + std::to_string(rows) + "x" +
                      std::to_string(cols) + " exceeds remaining bytes)");
  }
  std::vector<double> data(rows * cols);
  for (double& v : data) v = f64();
  return Mat(rows, cols, std::move(data));
}

std::vector<double> ByteReader::f64_vec() {
  const std::size_t n = u32();
  if (n > remaining() / 8) throw FormatError(what_ + ": truncated file (vector length " + std::to_string(n) + ")");
  std::vector<double> out(n);
  for (double& v : out) v = f64();
  return out;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed: " + path.string());
  return bytes;
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot move output into place: " + path.string());
  }
}

void write_text_atomic(const std::filesystem::path& path, std::string_view text) {
  write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace ncouple
