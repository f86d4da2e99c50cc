#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace mf {

using Rng = std::mt19937_64;

/// Mixes a base seed with stream coordinates (step, item, purpose, ...) so
/// independent consumers draw from decorrelated, order-independent streams.
inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> coords) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  std::uint64_t h = mix(seed);
  for (auto c : coords) h = mix(h ^ mix(c));
  return h;
}

inline int uniform_int(Rng& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

inline bool coin_flip(Rng& rng) { return std::bernoulli_distribution(0.5)(rng); }

}  // namespace mf
