#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace snnlab {

// Explicit mappings from the raw engine keep results identical across
// standard library implementations.
inline double next_uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double next_gaussian(std::mt19937_64& rng, double sigma) {
  const double u1 = (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53;  // (0,1]
  const double u2 = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return sigma * std::sqrt(-2.0 * std::log(u1)) * std::cos(6.28318530717958647692 * u2);
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace snnlab
