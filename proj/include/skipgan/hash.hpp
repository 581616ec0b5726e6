#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace skipgan {

/// Incremental 64-bit FNV-1a. Used for schema hashes, config hashes and
/// parameter checksums; not a cryptographic digest.
class Fnv1a {
 public:
  Fnv1a& update(std::span<const std::byte> bytes) noexcept {
    for (auto b : bytes) {
      state_ ^= static_cast<std::uint64_t>(b);
      state_ *= 0x100000001b3ULL;
    }
    return *this;
  }
  Fnv1a& update(std::string_view s) noexcept { return update(std::as_bytes(std::span(s.data(), s.size()))); }
  template <typename T>
  Fnv1a& update_pod(const T& v) noexcept {
    return update(std::as_bytes(std::span(&v, 1)));
  }
  std::uint64_t digest() const noexcept { return state_; }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

inline std::uint64_t fnv1a(std::string_view s) noexcept { return Fnv1a{}.update(s).digest(); }

/// Fixed-width lowercase hex, the textual form of hashes in artifacts.
std::string hex64(std::uint64_t v);
/// Throws FormatError unless `s` is 1-16 hex digits.
std::uint64_t parse_hex64(std::string_view s);

}  // namespace skipgan
