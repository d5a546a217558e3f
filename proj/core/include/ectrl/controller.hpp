#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "ectrl/fixed_point.hpp"
#include "ectrl/linalg.hpp"
#include "ectrl/paillier.hpp"
#include "ectrl/plant.hpp"
#include "ectrl/rng.hpp"

namespace ectrl {

/// Real-valued resetting linear controller:
///   u[k]     = C x_c[k] + D y[k]
///   x_c[k+1] = A x_c[k] + B y[k],  except x_c[k+1] = 0 when (k+1) mod T = 0.
/// T = kNonResetting disables the reset (the overflow-demo variant).
struct ControllerRealization {
  Matrix A;  // n_c x n_c
  Matrix B;  // n_c x n_y
  Matrix C;  // n_u x n_c
  Matrix D;  // n_u x n_y
  int T = 1;

  static constexpr int kNonResetting = std::numeric_limits<int>::max();

  std::size_t n_c() const { return A.rows(); }
  std::size_t n_y() const { return B.cols(); }
  std::size_t n_u() const { return C.rows(); }

  /// Throws Error("dimension") on internal shape mismatch; also checks
  /// compatibility against a plant when one is given.
  void validate(const PlantModel* plant = nullptr) const;
};

/// The controller with every matrix projected onto Q(n, m).
struct QuantizedController {
  QuantizedMatrix A, B, C, D;
  int T = 1;

  FixedPointFormat format() const { return A.format; }
  std::size_t n_c() const { return A.rows; }
  std::size_t n_y() const { return B.cols; }
  std::size_t n_u() const { return C.rows; }
};

QuantizedController quantize_controller(const ControllerRealization& ctrl,
                                        FixedPointFormat fmt);

/// The quantized controller pushed into Z_{2^n_tilde}. A and C images are
/// time-invariant residues; the B and D images depend on the step index
/// (they absorb the growing fractional scale), so their signed raws are
/// kept and shifted per step.
struct RingController {
  std::vector<Bigint> A_ring, C_ring;  // residues mod 2^n_tilde, row-major
  std::vector<Bigint> B_raw, D_raw;    // signed Q(n,m) raws, row-major
  std::size_t n_c = 0, n_y = 0, n_u = 0;
  FixedPointFormat fmt;
  IntegerRingParams ring;
  int T = 1;

  /// Ring image of B at in-period index j: (B_raw * 2^{m*j}) mod 2^n_tilde.
  Bigint B_at(std::size_t i, std::size_t jcol, long j) const;
  Bigint D_at(std::size_t i, std::size_t jcol, long j) const;
};

RingController ring_controller(const QuantizedController& ctrl, IntegerRingParams ring);

/// The ring controller prepared for homomorphic evaluation: the same
/// integer parameters embedded into the plaintext ring Z_{kappa_p} of a
/// public key. Holds no private key, by type.
struct EncryptedController {
  std::vector<Bigint> A_pt, C_pt;    // signed raws embedded mod kappa_p
  std::vector<Bigint> B_raw, D_raw;  // signed raws; per-step embedding below
  std::size_t n_c = 0, n_y = 0, n_u = 0;
  FixedPointFormat fmt;
  IntegerRingParams ring;
  int T = 1;
  PaillierPublicKey pk;

  Bigint B_scalar(std::size_t i, std::size_t jcol, long j) const;
  Bigint D_scalar(std::size_t i, std::size_t jcol, long j) const;
};

EncryptedController encrypted_controller(const RingController& ctrl,
                                         const PaillierPublicKey& pk);

/// Session-wide parameters shared by every realization of one loop.
struct SessionParams {
  FixedPointFormat format;
  IntegerRingParams ring;
  int T = 1;
  const PaillierPublicKey* public_key = nullptr;    // encrypted domain only
  const PaillierPrivateKey* private_key = nullptr;  // decrypting side only

  /// Hard checks (positive widths, 2^{n_tilde+1} <= kappa_p when a key is
  /// attached); throws Error("config"). Returns false when the ring width
  /// is below its growth-bound recommendation (soft: the canonical
  /// configurations sit exactly at the bound).
  bool validate(std::size_t n_c, std::size_t n_y, std::size_t n_u) const;
};

struct RealControllerState {
  Vector x;
  long k = 0;
};

/// Exact dyadic state; raw carries fractional scale m*((k mod T) + 1).
struct QuantizedControllerState {
  std::vector<Bigint> raw;
  long k = 0;
};

/// Ring residues in [0, 2^n_tilde).
struct RingControllerState {
  std::vector<Bigint> w;
  long k = 0;
};

/// Ciphertext state; plaintexts carry the same bookkeeping as the ring
/// realization, embedded in Z_{kappa_p}.
struct EncryptedControllerState {
  std::vector<Ciphertext> x;
  long k = 0;
};

/// Exact unbounded integers (the "infinite ring" reference used to locate
/// the first corrupted step of the non-resetting variant).
struct UnboundedControllerState {
  std::vector<Bigint> v;
  long k = 0;
};

std::pair<RealControllerState, Vector> reset_step_real(const RealControllerState& state,
                                                       const Vector& y,
                                                       const ControllerRealization& ctrl);

/// y_raw are Q(n,m) raws of the quantized measurement. Returns the u raws
/// at fractional scale m*((k mod T) + 2); all arithmetic exact.
std::pair<QuantizedControllerState, std::vector<Bigint>> reset_step_quantized(
    const QuantizedControllerState& state, const std::vector<Bigint>& y_raw,
    const QuantizedController& ctrl);

/// y_ring = (2^m ybar) mod 2^n_tilde, i.e. the measurement raws embedded
/// in the ring. Returns the ring image of u at scale m*((k mod T) + 2).
std::pair<RingControllerState, std::vector<Bigint>> reset_step_integer(
    const RingControllerState& state, const std::vector<Bigint>& y_ring,
    const RingController& ctrl, const SessionParams& session);

/// Same recursion with k substituted for k mod T: scales grow without
/// bound and overflow silently corrupts (by design; nothing throws).
std::pair<RingControllerState, std::vector<Bigint>> nonresetting_step_integer(
    const RingControllerState& state, const std::vector<Bigint>& y_ring,
    const RingController& ctrl, const SessionParams& session);

/// The unbounded-integer surrogate of the non-resetting variant. y_raw
/// are plain signed measurement raws.
std::pair<UnboundedControllerState, std::vector<Bigint>> nonresetting_step_unbounded(
    const UnboundedControllerState& state, const std::vector<Bigint>& y_raw,
    const RingController& ctrl);

/// Homomorphic evaluation of the integer recursion on ciphertexts. State
/// refreshes to a fresh encryption of zero at reset steps (hence the rng).
/// Throws Error("protocol") when an input ciphertext is out of range for
/// the session key.
std::pair<EncryptedControllerState, std::vector<Ciphertext>> reset_step_encrypted(
    const EncryptedControllerState& state, const std::vector<Ciphertext>& y_enc,
    const EncryptedController& ctrl, const SessionParams& session, Rng& rng);

/// Decrypts one homomorphically computed value back to its ring residue:
/// decrypt, take the centered signed representative mod kappa_p, then
/// reduce mod 2^n_tilde. Exact whenever the underlying signed value fits
/// the plaintext ring (guaranteed by kappa_p >= 2^{n_tilde+1} plus the
/// width budgets).
Bigint decrypt_to_ring(const Ciphertext& c, const PaillierPublicKey& pk,
                       const PaillierPrivateKey& sk, const IntegerRingParams& ring);

enum class Realization { real, quantized, integer, integer_nonresetting, encrypted };

Realization realization_from_string(const std::string& name);
std::string to_string(Realization r);

struct TraceRow {
  long k = 0;
  Vector x;       // plant state
  Vector xc;      // controller state, decoded to doubles where applicable
  Vector u;       // applied input
  double norm_x = 0.0;
  double norm_xc = 0.0;
  bool overflow = false;
};

struct SimulationTrace {
  std::size_t n_x = 0, n_c = 0, n_u = 0;
  std::vector<TraceRow> rows;
  bool any_overflow = false;

  /// CSV with columns k, x_1..x_{n_x}, xc_1..xc_{n_c}, u_1..u_{n_u},
  /// norm_x, norm_xc, overflow_flag. Doubles printed with %.17g so equal
  /// runs produce byte-identical files.
  std::string to_csv() const;
};

/// Closes the loop between the double-precision plant and the selected
/// controller realization. The encrypted realization needs both key
/// halves on the session and an rng.
SimulationTrace run_closed_loop(const PlantModel& plant, const ControllerRealization& ctrl,
                                const SessionParams& session, long horizon,
                                Realization realization, Rng* rng = nullptr);

struct TowerReport {
  bool ok = true;
  long first_mismatch = -1;
  std::string detail;
};

/// Runs the quantized, integer and (optionally) encrypted realizations in
/// lock step on identical measurement streams and verifies bit-exact
/// agreement at every step and component. real_cmp is the double-equality
/// check of the real realization run on quantized data; it only holds
/// exactly while every raw fits a double, so callers disable it for long
/// high-precision runs.
TowerReport run_lockstep_tower(const PlantModel& plant, const ControllerRealization& ctrl,
                               const SessionParams& session, long horizon, Rng& rng,
                               bool with_encrypted, bool real_cmp);

}  // namespace ectrl
