#include "skipgan/hash.hpp"

#include <charconv>

#include "skipgan/error.hpp"

namespace skipgan {

std::string hex64(std::uint64_t v) {
  static const char digits[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 0xf];
  return s;
}

std::uint64_t parse_hex64(std::string_view s) {
  std::uint64_t v = 0;
  if (s.empty() || s.size() > 16) throw FormatError("malformed hash '" + std::string(s) + "'");
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v, 16);
  if (ec != std::errc{} || ptr != s.data() + s.size()) throw FormatError("malformed hash '" + std::string(s) + "'");
  return v;
}

}  // namespace skipgan
