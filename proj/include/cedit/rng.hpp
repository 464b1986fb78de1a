#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace cedit {

using Rng = std::mt19937_64;

// FNV-1a; stable across platforms, unlike std::hash.
constexpr std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent stream per (run seed, instance id): results do not depend on
// which worker handles an instance or in what order.
inline Rng stream_for(std::uint64_t seed, std::string_view id) {
  return Rng(splitmix64(seed ^ splitmix64(fnv1a(id))));
}

}  // namespace cedit
