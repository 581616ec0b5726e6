#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace skipgan {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; used to derive independent child seeds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for a job identified by `coords` under `master`. Stable across runs
/// and independent of the order in which jobs execute.
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> coords) {
  std::uint64_t s = mix64(master);
  for (auto c : coords) s = mix64(s ^ mix64(c + 0x632be59bd9b4e019ULL));
  return s;
}

}  // namespace skipgan
