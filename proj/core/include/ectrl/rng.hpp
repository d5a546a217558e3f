#pragma once

#include <cstdint>

#include "ectrl/bigint.hpp"

namespace ectrl {

/// Deterministic randomness source. Every operation that needs randomness
/// takes one of these explicitly; the library never touches a global RNG,
/// so a fixed seed reproduces runs bit-for-bit.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);
  ~Rng();

  Rng(const Rng&) = delete;
  Rng& operator=(const Rng&) = delete;

  /// Uniform 64-bit word.
  std::uint64_t next_u64();

  /// Uniform double in [0, 1).
  double uniform_real();

  /// Uniform double in [lo, hi).
  double uniform_range(double lo, double hi);

  /// Standard normal deviate (Box-Muller on uniform_real).
  double normal();

  /// Uniform integer in [0, bound); bound must be positive.
  Bigint uniform_below(const Bigint& bound);

  /// Uniform integer in [0, 2^bits).
  Bigint uniform_bits(unsigned long bits);

 private:
  gmp_randstate_t state_;
};

}  // namespace ectrl
