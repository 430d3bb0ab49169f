#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace graphbd {

using Rng = std::mt19937_64;

// splitmix64 finalizer; decorrelates nearby seeds.
inline std::uint64_t mix_bits(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Derives an independent stream from (seed, tag, index). Every stochastic
// step in the pipeline seeds its own Rng through this, so per-item work is
// order-independent and reproducible.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag,
                                 std::uint64_t index = 0) {
  return mix_bits(mix_bits(seed ^ mix_bits(tag)) + index);
}

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

// k distinct indices from [0, n), ascending. Partial Fisher-Yates.
std::vector<int> sample_without_replacement(int n, int k, Rng& rng);

}  // namespace graphbd
