#pragma once

#include <cstdint>
#include <limits>
#include <random>

#include "hkge/error.hpp"

namespace hkge {

using Rng = std::mt19937_64;

/// Unbiased draw from [0, n). Unlike std::uniform_int_distribution the sequence is the same on
/// every standard library.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  if (n == 0) throw DomainError("uniform_index: empty range");
  const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
  const std::uint64_t limit = max - (max % n + 1) % n;
  while (true) {
    const std::uint64_t x = rng();
    if (x <= limit) return x % n;
  }
}

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform_unit(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace hkge
