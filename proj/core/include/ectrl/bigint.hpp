#pragma once

#include <gmpxx.h>

#include <cstddef>
#include <string>

namespace ectrl {

/// Arbitrary-precision signed integer used throughout the exact pipelines.
using Bigint = mpz_class;

/// 2^e.
Bigint pow2(unsigned long e);

/// Number of bits in |v| (0 for v == 0).
std::size_t bit_width(const Bigint& v);

/// v mod 2^bits, reduced into [0, 2^bits).
Bigint mod_pow2(const Bigint& v, unsigned long bits);

/// v * 2^{-scale_exponent} as a double. Works for operands far outside the
/// double range by splitting v into mantissa and exponent first.
double to_double_scaled(const Bigint& v, long scale_exponent);

/// Decimal string round-trip helpers used by the JSON serializers.
std::string to_decimal(const Bigint& v);
Bigint from_decimal(const std::string& text);

}  // namespace ectrl
