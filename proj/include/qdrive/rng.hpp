#pragma once

#include <cstdint>
#include <random>

namespace qdrive {

// One round of the splitmix64 output function.  Used to turn structured
// inputs (base seed, episode index, stream tag) into well-mixed seeds so
// that per-episode streams are independent of each other and of the order
// in which episodes are executed.
inline uint64_t splitmix64_mix(uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Deterministically derive a child seed from a base seed and an index.
// derive_seed(s, i) != derive_seed(s, j) for i != j with overwhelming
// probability; the result is itself usable as a base for further derivation.
inline uint64_t derive_seed(uint64_t base, uint64_t index) {
  return splitmix64_mix(splitmix64_mix(base) ^ (0x9e3779b97f4a7c15ull * (index + 1)));
}

// Thin wrapper around std::mt19937_64 with the uniform helpers we need.
// All draws go through this class so that trajectories are reproducible
// bit-for-bit from a seed alone, independent of platform libstdc++
// distribution implementations (we never use std::uniform_*_distribution).
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  uint64_t next_u64() { return eng_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform01() < p; }

  // Unbiased uniform integer in [0, n).  Lemire's multiply-shift with
  // rejection; n must be nonzero.
  uint64_t uniform_index(uint64_t n) {
    uint64_t x = next_u64();
    __uint128_t m = static_cast<__uint128_t>(x) * n;
    uint64_t lo = static_cast<uint64_t>(m);
    if (lo < n) {
      uint64_t threshold = (0 - n) % n;
      while (lo < threshold) {
        x = next_u64();
        m = static_cast<__uint128_t>(x) * n;
        lo = static_cast<uint64_t>(m);
      }
    }
    return static_cast<uint64_t>(m >> 64);
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace qdrive
