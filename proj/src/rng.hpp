#pragma once

#include <cstdint>

namespace narrowlab::rng {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for the i-th independent stream of a master seed.
inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t i) {
  return splitmix64(splitmix64(seed) ^ (0xd1b54a32d192ed03ULL * (i + 1)));
}

/// Uniform double in [0, 1) from a 64-bit word.
inline double unit(std::uint64_t x) { return static_cast<double>(x >> 11) * 0x1.0p-53; }

}  // namespace narrowlab::rng
