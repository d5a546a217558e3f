#include "ectrl/fixed_point.hpp"

#include <algorithm>
#include <cmath>

#include "ectrl/error.hpp"

namespace ectrl {

namespace {

void check_format(const FixedPointFormat& fmt) {
  if (fmt.n < 1 || fmt.m < 0 || fmt.m > fmt.n) {
    fail("invalid_argument", "fixed-point format requires n >= m >= 0 and n >= 1");
  }
}

void check_ring(const IntegerRingParams& ring) {
  if (ring.n_tilde < 1) fail("invalid_argument", "ring width must be at least 1 bit");
}

}  // namespace

Matrix QuantizedMatrix::to_matrix() const {
  Matrix out(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      out(i, j) = to_double_scaled(at(i, j), format.m);
  return out;
}

FixedPointScalar proj(double x, FixedPointFormat fmt) {
  check_format(fmt);
  if (std::isnan(x)) fail("invalid_argument", "cannot project NaN onto a fixed-point format");

  const Bigint raw_min = -pow2(static_cast<unsigned long>(fmt.n - 1));
  const Bigint raw_max = pow2(static_cast<unsigned long>(fmt.n - 1)) - 1;
  FixedPointScalar out{0, fmt, false};

  if (std::isinf(x)) {
    out.raw = x > 0 ? raw_max : raw_min;
    out.saturated = true;
    return out;
  }
  if (x == 0.0) return out;

  // Exact round-half-even of x * 2^m: split the double into an integer
  // mantissa and a binary shift, then round in integer arithmetic.
  int exp2 = 0;
  double frac = std::frexp(std::abs(x), &exp2);
  Bigint mant = static_cast<long>(std::ldexp(frac, 53));
  long shift = static_cast<long>(exp2) - 53 + fmt.m;

  Bigint mag;
  if (shift >= 0) {
    mag = mant << static_cast<unsigned long>(shift);
  } else {
    unsigned long down = static_cast<unsigned long>(-shift);
    Bigint q = mant >> down;
    Bigint rem = mant - (q << down);
    Bigint half = Bigint(1) << (down - 1);
    if (rem > half || (rem == half && mpz_odd_p(q.get_mpz_t()))) q += 1;
    mag = q;
  }

  out.raw = x < 0 ? Bigint(-mag) : mag;
  if (out.raw < raw_min) {
    out.raw = raw_min;
    out.saturated = true;
  } else if (out.raw > raw_max) {
    out.raw = raw_max;
    out.saturated = true;
  }
  return out;
}

double dist(double x, FixedPointFormat fmt) {
  FixedPointScalar s = proj(x, fmt);
  return std::abs(x - s.value());
}

QuantizedMatrix quantize_matrix(const Matrix& m, FixedPointFormat fmt) {
  check_format(fmt);
  QuantizedMatrix out;
  out.rows = m.rows();
  out.cols = m.cols();
  out.format = fmt;
  out.saturated = false;
  out.raw.reserve(out.rows * out.cols);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      FixedPointScalar s = proj(m(i, j), fmt);
      out.saturated = out.saturated || s.saturated;
      out.raw.push_back(s.raw);
    }
  }
  return out;
}

Bigint to_ring(const FixedPointScalar& v, int scale_exponent, const IntegerRingParams& ring) {
  check_ring(ring);
  if (scale_exponent < v.format.m) {
    fail("invalid_argument", "to_ring: scale exponent below the value's fractional width");
  }
  Bigint scaled = v.raw << static_cast<unsigned long>(scale_exponent - v.format.m);
  return ring_embed_checked(scaled, ring);
}

double from_ring(const Bigint& w, int scale_exponent, const IntegerRingParams& ring) {
  check_ring(ring);
  if (w < 0 || w >= ring.modulus()) {
    fail("invalid_argument", "from_ring: residue outside [0, 2^n_tilde)");
  }
  return to_double_scaled(ring_center(w, ring), scale_exponent);
}

Bigint ring_center(const Bigint& w, const IntegerRingParams& ring) {
  check_ring(ring);
  Bigint r = mod_pow2(w, static_cast<unsigned long>(ring.n_tilde));
  if (r >= ring.half()) r -= ring.modulus();
  return r;
}

Bigint ring_embed_checked(const Bigint& v, const IntegerRingParams& ring) {
  check_ring(ring);
  if (v >= ring.half() || -v >= ring.half()) {
    fail("ring_overflow", "signed value exceeds the ring's representable range");
  }
  return mod_pow2(v, static_cast<unsigned long>(ring.n_tilde));
}

std::pair<BitBudget, BitBudget> bit_growth(long k, int T, int n, int m, int n_c, int n_y) {
  check_format(FixedPointFormat{n, m});
  if (k < 0 || T < 1 || n_c < 0 || n_y < 0) {
    fail("invalid_argument", "bit_growth: k >= 0, T >= 1, dims >= 0 required");
  }
  const long j = k % T;
  BitBudget state;
  state.step_in_period = static_cast<int>(j);
  state.integer_bits = static_cast<int>((n_c + 1) * std::max(j - 1, 0L) + n_y + n * (j + 1));
  state.fractional_bits = static_cast<int>(m * (j + 1));
  BitBudget input;
  input.step_in_period = static_cast<int>(j);
  input.integer_bits = static_cast<int>((n_c + 1) * j + n_y + n * (j + 2));
  input.fractional_bits = static_cast<int>(m * (j + 2));
  return {state, input};
}

int ring_bits_lower_bound(int T, int n, int n_c, int n_y, int n_u) {
  check_format(FixedPointFormat{n, 0});
  if (T < 1 || n_c < 0 || n_y < 0 || n_u < 0) {
    fail("invalid_argument", "ring_bits_lower_bound: invalid dimensions");
  }
  long bound = static_cast<long>(n_c + 1) * T + std::max(n_y, n_u) +
               static_cast<long>(n) * (T + 2);
  return static_cast<int>(bound);
}

}  // namespace ectrl
