#include "ectrl/bigint.hpp"

#include <cmath>

#include "ectrl/error.hpp"

namespace ectrl {

Bigint pow2(unsigned long e) {
  Bigint r;
  mpz_ui_pow_ui(r.get_mpz_t(), 2, e);
  return r;
}

std::size_t bit_width(const Bigint& v) {
  if (v == 0) return 0;
  return mpz_sizeinbase(v.get_mpz_t(), 2);
}

Bigint mod_pow2(const Bigint& v, unsigned long bits) {
  Bigint r;
  mpz_fdiv_r_2exp(r.get_mpz_t(), v.get_mpz_t(), bits);
  return r;
}

double to_double_scaled(const Bigint& v, long scale_exponent) {
  if (v == 0) return 0.0;
  signed long exp = 0;
  double mant = mpz_get_d_2exp(&exp, v.get_mpz_t());
  return std::ldexp(mant, static_cast<int>(exp - scale_exponent));
}

std::string to_decimal(const Bigint& v) { return v.get_str(10); }

Bigint from_decimal(const std::string& text) {
  Bigint v;
  if (mpz_set_str(v.get_mpz_t(), text.c_str(), 10) != 0) {
    fail("invalid_argument", "not a decimal integer: '" + text + "'");
  }
  return v;
}

}  // namespace ectrl
