#include "ectrl/paillier.hpp"

#include <vector>

#include "ectrl/error.hpp"

namespace ectrl {

namespace {

const std::vector<unsigned long>& small_primes() {
  static const std::vector<unsigned long> primes = [] {
    std::vector<unsigned long> out;
    std::vector<bool> sieve(1000, true);
    for (unsigned long i = 2; i < sieve.size(); ++i) {
      if (!sieve[i]) continue;
      out.push_back(i);
      for (unsigned long j = i * i; j < sieve.size(); j += i) sieve[j] = false;
    }
    return out;
  }();
  return primes;
}

Bigint powm(const Bigint& base, const Bigint& exp, const Bigint& mod) {
  Bigint r;
  mpz_powm(r.get_mpz_t(), base.get_mpz_t(), exp.get_mpz_t(), mod.get_mpz_t());
  return r;
}

// One Miller-Rabin round; n odd >= 5, n - 1 = d * 2^s, witness a in [2, n-2].
bool mr_round(const Bigint& n, const Bigint& d, unsigned long s, const Bigint& a) {
  Bigint x = powm(a, d, n);
  Bigint n1 = n - 1;
  if (x == 1 || x == n1) return true;
  for (unsigned long i = 1; i < s; ++i) {
    x = (x * x) % n;
    if (x == n1) return true;
  }
  return false;
}

Bigint random_prime(unsigned long bits, unsigned rounds, Rng& rng) {
  // Expected candidates until a prime is ~ bits * ln(2) / 2 for odd
  // numbers; the cap leaves two orders of magnitude of slack.
  const unsigned long max_candidates = 200 * bits + 1000;
  for (unsigned long attempt = 0; attempt < max_candidates; ++attempt) {
    Bigint cand = rng.uniform_bits(bits);
    mpz_setbit(cand.get_mpz_t(), bits - 1);
    if (bits >= 2) mpz_setbit(cand.get_mpz_t(), bits - 2);  // keeps p*q at full width
    mpz_setbit(cand.get_mpz_t(), 0);
    if (is_probable_prime(cand, rounds, rng)) return cand;
  }
  fail("key", "prime generation exhausted its retry budget");
}

std::pair<PaillierPublicKey, PaillierPrivateKey> make_keypair(const Bigint& p,
                                                              const Bigint& q) {
  PaillierPublicKey pk;
  pk.kappa_p = p * q;
  pk.kappa_p_sq = pk.kappa_p * pk.kappa_p;
  pk.key_bits = bit_width(pk.kappa_p);

  Bigint phi = (p - 1) * (q - 1);
  Bigint g;
  mpz_gcd(g.get_mpz_t(), pk.kappa_p.get_mpz_t(), phi.get_mpz_t());
  if (g != 1) fail("key", "gcd(p*q, (p-1)*(q-1)) != 1");

  PaillierPrivateKey sk;
  mpz_lcm(sk.lambda.get_mpz_t(), Bigint(p - 1).get_mpz_t(), Bigint(q - 1).get_mpz_t());
  if (mpz_invert(sk.mu_dec.get_mpz_t(), sk.lambda.get_mpz_t(), pk.kappa_p.get_mpz_t()) == 0) {
    fail("key", "lambda is not invertible modulo kappa_p");
  }
  return {pk, sk};
}

void check_ciphertext_range(const Ciphertext& c, const PaillierPublicKey& pk,
                            const char* what) {
  if (c.value < 0 || c.value >= pk.kappa_p_sq) {
    fail("ciphertext", std::string(what) + ": ciphertext out of range for this key");
  }
}

}  // namespace

bool is_probable_prime(const Bigint& n, unsigned rounds, Rng& rng) {
  if (n < 2) return false;
  for (unsigned long p : small_primes()) {
    if (n == p) return true;
    if (mpz_divisible_ui_p(n.get_mpz_t(), p)) return false;
  }
  // n is odd and > max(small_primes) here
  Bigint d = n - 1;
  unsigned long s = mpz_scan1(d.get_mpz_t(), 0);
  mpz_fdiv_q_2exp(d.get_mpz_t(), d.get_mpz_t(), s);

  if (!mr_round(n, d, s, 2)) return false;
  for (unsigned r = 0; r < rounds; ++r) {
    Bigint a = 2 + rng.uniform_below(n - 4);  // [2, n-3]
    if (!mr_round(n, d, s, a)) return false;
  }
  return true;
}

std::pair<PaillierPublicKey, PaillierPrivateKey> keygen(std::size_t key_bits, Rng& rng) {
  if (key_bits < 16) fail("invalid_argument", "key_bits must be at least 16");
  const unsigned rounds = 40;
  const unsigned long p_bits = static_cast<unsigned long>(key_bits - key_bits / 2);
  const unsigned long q_bits = static_cast<unsigned long>(key_bits / 2);

  Bigint p = random_prime(p_bits, rounds, rng);
  for (int attempt = 0; attempt < 64; ++attempt) {
    Bigint q = random_prime(q_bits, rounds, rng);
    if (q == p) continue;
    Bigint g, phi = (p - 1) * (q - 1);
    Bigint n = p * q;
    mpz_gcd(g.get_mpz_t(), n.get_mpz_t(), phi.get_mpz_t());
    if (g != 1) continue;
    if (bit_width(n) != key_bits) continue;  // cannot happen with forced top bits
    return make_keypair(p, q);
  }
  fail("key", "could not find a compatible second prime");
}

std::pair<PaillierPublicKey, PaillierPrivateKey> keypair_from_primes(const Bigint& p,
                                                                     const Bigint& q) {
  if (p < 2 || q < 2 || p == q) {
    fail("invalid_argument", "keypair_from_primes needs two distinct primes");
  }
  return make_keypair(p, q);
}

Ciphertext encrypt(const Bigint& plaintext, const PaillierPublicKey& pk, Rng& rng) {
  Bigint r;
  do {
    r = 1 + rng.uniform_below(pk.kappa_p - 1);  // [1, kappa_p)
  } while (gcd(r, pk.kappa_p) != 1);
  return encrypt_with_nonce(plaintext, r, pk);
}

Ciphertext encrypt_with_nonce(const Bigint& plaintext, const Bigint& r,
                              const PaillierPublicKey& pk) {
  if (plaintext < 0 || plaintext >= pk.kappa_p) {
    fail("invalid_argument", "plaintext out of range [0, kappa_p)");
  }
  if (r < 1 || r >= pk.kappa_p || gcd(r, pk.kappa_p) != 1) {
    fail("invalid_argument", "nonce must be a unit in [1, kappa_p)");
  }
  // (kappa_p + 1)^x = 1 + x*kappa_p (mod kappa_p^2), exactly
  Bigint c = (1 + plaintext * pk.kappa_p) % pk.kappa_p_sq;
  c = (c * powm(r, pk.kappa_p, pk.kappa_p_sq)) % pk.kappa_p_sq;
  return Ciphertext{c};
}

Bigint decrypt(const Ciphertext& c, const PaillierPublicKey& pk,
               const PaillierPrivateKey& sk) {
  check_ciphertext_range(c, pk, "decrypt");
  Bigint z = powm(c.value, sk.lambda, pk.kappa_p_sq);
  Bigint t = z - 1;
  if (!mpz_divisible_p(t.get_mpz_t(), pk.kappa_p.get_mpz_t())) {
    fail("ciphertext", "corrupted or foreign ciphertext (decoding division not exact)");
  }
  Bigint l = t / pk.kappa_p;
  return (l * sk.mu_dec) % pk.kappa_p;
}

Ciphertext hom_add(const Ciphertext& a, const Ciphertext& b, const PaillierPublicKey& pk) {
  check_ciphertext_range(a, pk, "hom_add");
  check_ciphertext_range(b, pk, "hom_add");
  return Ciphertext{(a.value * b.value) % pk.kappa_p_sq};
}

Ciphertext scalar_mul(const Ciphertext& c, const Bigint& k, const PaillierPublicKey& pk) {
  check_ciphertext_range(c, pk, "scalar_mul");
  if (k < 0 || k >= pk.kappa_p) fail("invalid_argument", "scalar out of range [0, kappa_p)");
  // An embedded negative sits just below kappa_p; exponentiating by the
  // small centered value (via the inverse ciphertext) encrypts the same
  // plaintext and keeps the exponent short.
  if (2 * k > pk.kappa_p) {
    Bigint inv;
    if (mpz_invert(inv.get_mpz_t(), c.value.get_mpz_t(), pk.kappa_p_sq.get_mpz_t()) != 0) {
      return Ciphertext{powm(inv, pk.kappa_p - k, pk.kappa_p_sq)};
    }
  }
  return Ciphertext{powm(c.value, k, pk.kappa_p_sq)};
}

Bigint embed_signed(const Bigint& v, const PaillierPublicKey& pk) {
  Bigint r;
  mpz_mod(r.get_mpz_t(), v.get_mpz_t(), pk.kappa_p.get_mpz_t());
  return r;
}

Bigint center_signed(const Bigint& residue, const PaillierPublicKey& pk) {
  Bigint r;
  mpz_mod(r.get_mpz_t(), residue.get_mpz_t(), pk.kappa_p.get_mpz_t());
  if (2 * r >= pk.kappa_p) r -= pk.kappa_p;
  return r;
}

}  // namespace ectrl
