#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <string_view>

#include "embir/errors.hpp"
#include "embir/hashing.hpp"

namespace embir::io {

class ByteWriter {
 public:
  void varint(std::uint64_t v) {
    while (v >= 0x80) {
      buf_ += static_cast<char>((v & 0x7F) | 0x80);
      v >>= 7;
    }
    buf_ += static_cast<char>(v);
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_ += static_cast<char>(v >> (8 * i));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_ += static_cast<char>(v >> (8 * i));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void bytes(std::string_view s) { buf_.append(s); }
  void str(std::string_view s) {
    varint(s.size());
    buf_.append(s);
  }

  const std::string& data() const { return buf_; }
  std::string take() { return std::move(buf_); }

 private:
  std::string buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string_view data) : data_(data) {}

  std::uint64_t varint() {
    std::uint64_t v = 0;
    for (int shift = 0; shift < 64; shift += 7) {
      need(1);
      const auto b = static_cast<unsigned char>(data_[pos_++]);
      v |= static_cast<std::uint64_t>(b & 0x7F) << shift;
      if ((b & 0x80) == 0) return v;
    }
    throw ChecksumError("corrupt varint");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string_view bytes(std::size_t n) {
    need(n);
    auto out = data_.substr(pos_, n);
    pos_ += n;
    return out;
  }
  std::string str() { return std::string(bytes(varint())); }

  bool done() const { return pos_ == data_.size(); }
  std::size_t position() const { return pos_; }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) throw ChecksumError("unexpected end of data");
  }

  std::string_view data_;
  std::size_t pos_ = 0;
};

inline std::uint32_t payload_crc(std::string_view payload) {
  return crc32(std::as_bytes(std::span(payload.data(), payload.size())));
}

/// File layout: 8-byte magic, u32 version, u64 payload length, u32 CRC-32 of
/// the payload, then the payload.
inline void write_envelope(const std::filesystem::path& path, std::string_view magic, std::uint32_t version,
                           std::string_view payload) {
  ByteWriter header;
  header.bytes(magic);
  header.u32(version);
  header.u64(payload.size());
  header.u32(payload_crc(payload));
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(header.data().data(), static_cast<std::streamsize>(header.data().size()));
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!out) throw DataError("write failed for " + path.string());
}

inline std::string read_envelope(const std::filesystem::path& path, std::string_view magic,
                                 std::uint32_t expected_version, std::string_view what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + std::string(what) + " " + path.string());
  std::string file((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  ByteReader r(file);
  std::string_view found_magic;
  try {
    found_magic = r.bytes(magic.size());
  } catch (const ChecksumError&) {
    throw ChecksumError(path.string() + ": checksum error: file too short to be a " + std::string(what));
  }
  if (found_magic != magic) {
    throw ChecksumError(path.string() + ": checksum error: bad magic bytes, not a " + std::string(what));
  }
  std::uint32_t version = 0;
  std::uint64_t length = 0;
  std::uint32_t crc = 0;
  try {
    version = r.u32();
    length = r.u64();
    crc = r.u32();
  } catch (const ChecksumError&) {
    throw ChecksumError(path.string() + ": checksum error: truncated header");
  }
  if (version != expected_version) {
    throw VersionError(path.string() + ": " + std::string(what) + " format version " + std::to_string(version) +
                       " is not supported (this build reads version " + std::to_string(expected_version) + ")");
  }
  const std::size_t header_size = r.position();
  if (file.size() - header_size != length) {
    throw ChecksumError(path.string() + ": checksum error: payload is " + std::to_string(file.size() - header_size) +
                        " bytes, header says " + std::to_string(length));
  }
  file.erase(0, header_size);
  if (payload_crc(file) != crc) throw ChecksumError(path.string() + ": checksum error: CRC mismatch");
  return file;
}

}  // namespace embir::io
