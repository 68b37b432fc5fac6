#pragma once

#include <cstdint>
#include <random>

namespace fnav {

/// splitmix64 step; used to derive independent child seeds from a root seed.
inline uint64_t mix_seed(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline uint64_t derive_seed(uint64_t root, uint64_t stream) {
  return mix_seed(root ^ mix_seed(stream + 1));
}

using Rng = std::mt19937_64;

inline double normal(Rng& rng, double sigma) {
  if (sigma <= 0.0) return 0.0;
  std::normal_distribution<double> d(0.0, sigma);
  return d(rng);
}

inline double uniform(Rng& rng, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  return d(rng);
}

}  // namespace fnav
