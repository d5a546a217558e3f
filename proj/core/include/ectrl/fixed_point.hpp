#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "ectrl/bigint.hpp"
#include "ectrl/linalg.hpp"

namespace ectrl {

/// The dyadic grid Q(n, m): n-bit two's-complement integers scaled by
/// 2^{-m}. Resolution 2^{-m}; range [-2^{n-m-1}, 2^{n-m-1} - 2^{-m}].
struct FixedPointFormat {
  int n = 0;  // total bit count, including sign
  int m = 0;  // fractional bit count

  bool operator==(const FixedPointFormat& other) const {
    return n == other.n && m == other.m;
  }
};

/// An exact element of Q(n, m): value = raw * 2^{-format.m}.
struct FixedPointScalar {
  Bigint raw;
  FixedPointFormat format;
  bool saturated = false;  // set when proj had to clamp to a range endpoint

  double value() const { return to_double_scaled(raw, format.m); }
};

/// Elementwise-quantized matrix: exact raw integers at a common scale.
struct QuantizedMatrix {
  std::size_t rows = 0, cols = 0;
  std::vector<Bigint> raw;  // row-major, value = raw * 2^{-format.m}
  FixedPointFormat format;
  bool saturated = false;

  Bigint& at(std::size_t i, std::size_t j) { return raw[i * cols + j]; }
  const Bigint& at(std::size_t i, std::size_t j) const { return raw[i * cols + j]; }

  /// The quantized values as doubles (exact for realistic formats).
  Matrix to_matrix() const;
};

/// The integer ring Z_{2^n_tilde} the controller is pushed into.
struct IntegerRingParams {
  int n_tilde = 0;

  Bigint modulus() const { return pow2(static_cast<unsigned long>(n_tilde)); }
  Bigint half() const { return pow2(static_cast<unsigned long>(n_tilde - 1)); }

  bool operator==(const IntegerRingParams& other) const {
    return n_tilde == other.n_tilde;
  }
};

/// Worst-case two's-complement widths of the running controller values at
/// one in-period step, per the reset-controller growth bound.
struct BitBudget {
  int integer_bits = 0;     // total signed width sufficient at this step
  int fractional_bits = 0;  // fractional scale carried at this step
  int step_in_period = 0;   // k mod T
};

/// Nearest grid point of Q(n, m) to x, ties rounded to even raw
/// (deterministic selection from the arg-min set). Out-of-range x
/// saturates to the nearest endpoint and sets the saturated flag.
/// NaN input raises Error("invalid_argument").
FixedPointScalar proj(double x, FixedPointFormat fmt);

/// |x - proj(x).value()|; at most 2^{-m-1} for in-range x.
double dist(double x, FixedPointFormat fmt);

/// Elementwise proj; the result's saturated flag is the OR over entries.
QuantizedMatrix quantize_matrix(const Matrix& m, FixedPointFormat fmt);

/// Two's-complement embedding of v's value scaled by 2^{scale_exponent}
/// into Z_{2^n_tilde}. scale_exponent must be >= v.format.m (so the
/// scaled value is an integer); a scaled magnitude >= 2^{n_tilde-1}
/// raises Error("ring_overflow").
Bigint to_ring(const FixedPointScalar& v, int scale_exponent, const IntegerRingParams& ring);

/// Inverse extraction: interprets w in [0, 2^n_tilde) as a signed
/// two's-complement integer and returns it scaled by 2^{-scale_exponent}.
double from_ring(const Bigint& w, int scale_exponent, const IntegerRingParams& ring);

/// Centered signed representative of a ring residue, in
/// [-2^{n_tilde-1}, 2^{n_tilde-1}).
Bigint ring_center(const Bigint& w, const IntegerRingParams& ring);

/// v mod 2^n_tilde after checking |v| < 2^{n_tilde-1}; the checked
/// counterpart of mod_pow2 used at encode boundaries.
Bigint ring_embed_checked(const Bigint& v, const IntegerRingParams& ring);

/// Per-step width bounds for the resetting integer controller: first the
/// state budget, then the actuation budget. State carries fractional
/// scale m*(k mod T + 1), actuation m*(k mod T + 2).
std::pair<BitBudget, BitBudget> bit_growth(long k, int T, int n, int m, int n_c, int n_y);

/// The width the ring must exceed so that a full reset period stays
/// decodable: (n_c+1)*T + max(n_y, n_u) + n*(T+2).
int ring_bits_lower_bound(int T, int n, int n_c, int n_y, int n_u);

}  // namespace ectrl
