#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace embir {

/// Incremental SHA-256, used for content fingerprints and config hashes.
class Sha256 {
 public:
  Sha256();
  ~Sha256();
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  Sha256& update(std::span<const std::byte> bytes);
  Sha256& update(std::string_view text);
  Sha256& update_u64(std::uint64_t value);
  /// Length-prefixed so that ("ab","c") and ("a","bc") hash differently.
  Sha256& update_field(std::string_view text);

  /// Lowercase hex digest. The object cannot be updated afterwards.
  std::string hex_digest();

 private:
  void* ctx_;
};

/// First 16 hex chars of the SHA-256 of `text`.
std::string short_hash(std::string_view text);

/// zlib CRC-32.
std::uint32_t crc32(std::span<const std::byte> bytes, std::uint32_t seed = 0);

}  // namespace embir
