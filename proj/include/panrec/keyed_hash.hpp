#pragma once

#include <cstdint>

namespace panrec {

// splitmix64 finalizer. Used as a counter-based generator: the output for a
// key tuple does not depend on how many other draws happened before it.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t value) noexcept {
  return mix64(seed ^ mix64(value));
}

template <typename... Ts>
constexpr std::uint64_t keyed_hash(std::uint64_t seed, Ts... values) noexcept {
  std::uint64_t h = mix64(seed);
  ((h = hash_combine(h, static_cast<std::uint64_t>(values))), ...);
  return h;
}

}  // namespace panrec
