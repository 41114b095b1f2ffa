#pragma once

#include <cstdint>
#include <random>

namespace emass {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Independent stream for (seed, index, purpose); serial and parallel
/// generation of participant i agree because nothing else feeds it.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index,
                                 std::uint64_t purpose = 0) {
  return splitmix64(splitmix64(seed ^ splitmix64(index + 1)) + purpose);
}

}  // namespace emass
