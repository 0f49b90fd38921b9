#pragma once

#include <bit>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

#include "au2vec/error.hpp"

namespace au2vec {

/// Appends little-endian scalars to a growing byte buffer.
class ByteWriter {
 public:
  void magic(std::string_view four_cc) { buf_.append(four_cc.substr(0, 4)); }

  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void i64(std::int64_t v) { put(static_cast<std::uint64_t>(v), 8); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }

  /// u32 length prefix followed by the raw bytes.
  void str(std::string_view s);

  const std::string& bytes() const& { return buf_; }
  std::string bytes() && { return std::move(buf_); }

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }

  std::string buf_;
};

/// Bounds-checked little-endian reader. Every overrun raises FormatError
/// naming `what` (usually the file path).
class ByteReader {
 public:
  ByteReader(std::string_view data, std::string what) : data_(data), what_(std::move(what)) {}

  /// Checks the four-byte magic, then the u32 version.
  void expect_header(std::string_view four_cc, std::uint32_t version);

  std::uint8_t u8() { return static_cast<std::uint8_t>(get(1)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  std::int64_t i64() { return static_cast<std::int64_t>(get(8)); }
  double f64() { return std::bit_cast<double>(get(8)); }
  std::string str();

  std::size_t remaining() const { return data_.size() - pos_; }
  /// Guards counts read from the file before allocating for them.
  void require(std::uint64_t count, std::uint64_t bytes_each);
  void expect_end();

  const std::string& what() const { return what_; }

 private:
  std::uint64_t get(int n);

  std::string_view data_;
  std::size_t pos_ = 0;
  std::string what_;
};

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace au2vec
