#include "ectrl/rng.hpp"

#include <cmath>
#include <numbers>

#include "ectrl/error.hpp"

namespace ectrl {

Rng::Rng(std::uint64_t seed) {
  gmp_randinit_mt(state_);
  Bigint s;
  mpz_import(s.get_mpz_t(), 1, 1, sizeof(seed), 0, 0, &seed);
  gmp_randseed(state_, s.get_mpz_t());
}

Rng::~Rng() { gmp_randclear(state_); }

std::uint64_t Rng::next_u64() {
  Bigint r;
  mpz_urandomb(r.get_mpz_t(), state_, 64);
  std::uint64_t out = 0;
  mpz_export(&out, nullptr, -1, sizeof(out), 0, 0, r.get_mpz_t());
  return out;
}

double Rng::uniform_real() {
  // 53 uniform bits -> [0, 1) on the double grid
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform_range(double lo, double hi) {
  return lo + (hi - lo) * uniform_real();
}

double Rng::normal() {
  double u1 = 1.0 - uniform_real();  // (0, 1], keeps the log finite
  double u2 = uniform_real();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Bigint Rng::uniform_below(const Bigint& bound) {
  if (bound <= 0) fail("invalid_argument", "uniform_below needs a positive bound");
  Bigint r;
  mpz_urandomm(r.get_mpz_t(), state_, bound.get_mpz_t());
  return r;
}

Bigint Rng::uniform_bits(unsigned long bits) {
  Bigint r;
  mpz_urandomb(r.get_mpz_t(), state_, bits);
  return r;
}

}  // namespace ectrl
