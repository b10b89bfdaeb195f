#pragma once

#include <cstdint>

namespace hardex::rng {

// Counter-based generator: draw i from stream (seed, stream_id) is a pure
// function of its inputs, so campaigns replay identically regardless of how
// many draws other runs consumed.
struct SplitMix64 {
  uint64_t state;

  explicit SplitMix64(uint64_t seed) : state(seed) {}
  SplitMix64(uint64_t seed, uint64_t stream) : state(mix(seed ^ mix(stream))) {}

  static uint64_t mix(uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  uint64_t next() {
    state += 0x9e3779b97f4a7c15ull;
    uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, bound). bound must be nonzero.
  uint64_t next_below(uint64_t bound) {
    // Rejection-free modulo is fine here: bounds are tiny relative to 2^64,
    // and determinism matters more than the ~2^-50 bias.
    return next() % bound;
  }

  // Uniform double in [0, 1).
  double next_unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
};

}  // namespace hardex::rng
