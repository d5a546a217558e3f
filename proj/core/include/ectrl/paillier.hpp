#pragma once

#include <cstddef>
#include <utility>

#include "ectrl/bigint.hpp"
#include "ectrl/rng.hpp"

namespace ectrl {

/// Public half of a Paillier key pair. kappa_p = p*q is the plaintext
/// modulus; ciphertexts live in Z_{kappa_p^2}.
struct PaillierPublicKey {
  Bigint kappa_p;
  Bigint kappa_p_sq;  // cached kappa_p^2
  std::size_t key_bits = 0;

  bool operator==(const PaillierPublicKey& other) const {
    return kappa_p == other.kappa_p;
  }
};

/// Private half: lambda = lcm(p-1, q-1) and its inverse modulo kappa_p.
struct PaillierPrivateKey {
  Bigint lambda;
  Bigint mu_dec;  // lambda^{-1} mod kappa_p
};

/// A Paillier ciphertext: a residue in [0, kappa_p^2).
struct Ciphertext {
  Bigint value;
};

/// Generates a key pair whose modulus has exactly key_bits bits
/// (two random primes of key_bits/2 bits each, top two bits forced).
/// Requires key_bits >= 16; throws Error("key") if prime generation does
/// not succeed within a bounded number of candidates.
std::pair<PaillierPublicKey, PaillierPrivateKey> keygen(std::size_t key_bits, Rng& rng);

/// Builds a key pair from explicitly chosen primes (test hook; bypasses
/// random generation). Validates primality of small inputs is NOT done;
/// callers are expected to pass primes.
std::pair<PaillierPublicKey, PaillierPrivateKey> keypair_from_primes(const Bigint& p,
                                                                     const Bigint& q);

/// Encrypts a plaintext in [0, kappa_p) with a fresh uniformly drawn
/// nonce r from Z*_{kappa_p}. Throws Error("invalid_argument") when the
/// plaintext is out of range.
Ciphertext encrypt(const Bigint& plaintext, const PaillierPublicKey& pk, Rng& rng);

/// Deterministic variant with caller-chosen nonce (test/reproduction
/// hook). r must lie in [1, kappa_p) with gcd(r, kappa_p) = 1.
Ciphertext encrypt_with_nonce(const Bigint& plaintext, const Bigint& r,
                              const PaillierPublicKey& pk);

/// Decrypts to the plaintext residue in [0, kappa_p). The divisibility
/// step of the decoding function is checked exactly; a non-exact division
/// means the ciphertext is corrupted or was produced under a different
/// key, and raises Error("ciphertext").
Bigint decrypt(const Ciphertext& c, const PaillierPublicKey& pk,
               const PaillierPrivateKey& sk);

/// Homomorphic addition: decrypt(hom_add(a, b)) = decrypt(a) + decrypt(b)
/// modulo kappa_p.
Ciphertext hom_add(const Ciphertext& a, const Ciphertext& b, const PaillierPublicKey& pk);

/// Plaintext-scalar multiplication: decrypt(scalar_mul(c, k)) =
/// k * decrypt(c) modulo kappa_p. k must lie in [0, kappa_p).
Ciphertext scalar_mul(const Ciphertext& c, const Bigint& k, const PaillierPublicKey& pk);

/// Signed-value embedding into the plaintext ring: v mod kappa_p.
Bigint embed_signed(const Bigint& v, const PaillierPublicKey& pk);

/// Inverse of embed_signed on the centered range: maps a residue to its
/// representative in [-kappa_p/2, kappa_p/2).
Bigint center_signed(const Bigint& residue, const PaillierPublicKey& pk);

/// Miller-Rabin primality test: trial division by small primes, a base-2
/// round, then `rounds` random bases.
bool is_probable_prime(const Bigint& n, unsigned rounds, Rng& rng);

}  // namespace ectrl
