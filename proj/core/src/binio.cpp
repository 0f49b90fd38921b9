#include "au2vec/binio.hpp"

#include <fstream>
#include <sstream>

namespace au2vec {

void ByteWriter::str(std::string_view s) {
  u32(static_cast<std::uint32_t>(s.size()));
  buf_.append(s);
}

void ByteReader::expect_header(std::string_view four_cc, std::uint32_t version) {
  if (data_.size() < 4 || data_.substr(0, 4) != four_cc.substr(0, 4)) {
    throw FormatError(what_ + ": bad magic number (expected '" + std::string(four_cc) + "')");
  }
  pos_ = 4;
  const std::uint32_t found = u32();
  if (found != version) {
    throw VersionError(what_ + ": unsupported format version " + std::to_string(found) +
                       " (expected " + std::to_string(version) + ")");
  }
}

std::uint64_t ByteReader::get(int n) {
  if (remaining() < static_cast<std::size_t>(n)) throw FormatError(what_ + ": truncated file");
  std::uint64_t v = 0;
  for (int i = 0; i < n; ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
  }
  pos_ += n;
  return v;
}

std::string ByteReader::str() {
  const std::uint32_t n = u32();
  if (remaining() < n) throw FormatError(what_ + ": truncated file");
  std::string s(data_.substr(pos_, n));
  pos_ += n;
  return s;
}

void ByteReader::require(std::uint64_t count, std::uint64_t bytes_each) {
  if (bytes_each != 0 && count > remaining() / bytes_each) {
    throw FormatError(what_ + ": truncated file");
  }
}

void ByteReader::expect_end() {
  if (remaining() != 0) throw FormatError(what_ + ": trailing bytes after payload");
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace au2vec
