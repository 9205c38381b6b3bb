#pragma once

// SplitMix64: the single seeded generator behind every random choice.
// Streams are split by seeding a child generator from the parent's next output.

#include <cstdint>

#include "wchaos/catalog.hpp"

namespace wchaos {

class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }
  SplitMix64 split() { return SplitMix64(next()); }

 private:
  std::uint64_t state_;
};

/// Uniform dyadic in [lo, hi) with `bits` random fractional bits (per unit length).
Rational random_dyadic(SplitMix64& rng, std::size_t bits, int lo = 0, int hi = 1);

/// Uniform point of the map's domain with `bits` random bits per coordinate.
ExactPoint random_point(SplitMix64& rng, const Domain& domain, std::size_t bits = 64);

}  // namespace wchaos
