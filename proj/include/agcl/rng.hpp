#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace agcl {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Child seed for a named sub-stream; stages draw from their own stream so
/// they can be rerun independently.
inline std::uint64_t derive_seed(std::uint64_t parent, std::string_view tag) {
  return splitmix64(parent ^ fnv1a(tag));
}

inline std::uint64_t derive_seed(std::uint64_t parent, std::string_view tag, std::uint64_t index) {
  return splitmix64(derive_seed(parent, tag) + splitmix64(index));
}

inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

inline int uniform_int(Rng& rng, int lo, int hi_inclusive) {
  return std::uniform_int_distribution<int>(lo, hi_inclusive)(rng);
}

}  // namespace agcl
