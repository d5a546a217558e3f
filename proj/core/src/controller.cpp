#include "ectrl/controller.hpp"

#include <cmath>
#include <cstdio>

#include "ectrl/error.hpp"

namespace ectrl {

namespace {

// Fractional scale exponents carried by the running values at step k:
// the state ahead of the update, and the actuation produced by it.
int state_scale(long k, int T, int m) { return m * static_cast<int>(k % T + 1); }
int input_scale(long k, int T, int m) { return m * static_cast<int>(k % T + 2); }

void check_session_matches(const SessionParams& session, const FixedPointFormat& fmt,
                           const IntegerRingParams& ring) {
  if (!(session.format == fmt) || !(session.ring == ring)) {
    fail("config", "session parameters do not match the controller's encoding");
  }
}

std::vector<Bigint> zeros(std::size_t n) { return std::vector<Bigint>(n, Bigint(0)); }

}  // namespace

void ControllerRealization::validate(const PlantModel* plant) const {
  if (A.rows() == 0 || A.rows() != A.cols()) fail("dimension", "controller: A must be square");
  if (B.rows() != A.rows() || B.cols() == 0) fail("dimension", "controller: B shape mismatch");
  if (C.cols() != A.rows() || C.rows() == 0) fail("dimension", "controller: C shape mismatch");
  if (D.rows() != C.rows() || D.cols() != B.cols()) {
    fail("dimension", "controller: D shape mismatch");
  }
  if (!A.all_finite() || !B.all_finite() || !C.all_finite() || !D.all_finite()) {
    fail("invalid_argument", "controller: non-finite entries");
  }
  if (T < 1) fail("invalid_argument", "controller: reset period must be >= 1");
  if (plant) {
    if (n_y() != plant->n_y() || n_u() != plant->n_u()) {
      fail("dimension", "controller does not match the plant's input/output dimensions");
    }
  }
}

QuantizedController quantize_controller(const ControllerRealization& ctrl,
                                        FixedPointFormat fmt) {
  ctrl.validate();
  QuantizedController q;
  q.A = quantize_matrix(ctrl.A, fmt);
  q.B = quantize_matrix(ctrl.B, fmt);
  q.C = quantize_matrix(ctrl.C, fmt);
  q.D = quantize_matrix(ctrl.D, fmt);
  q.T = ctrl.T;
  return q;
}

Bigint RingController::B_at(std::size_t i, std::size_t jcol, long j) const {
  Bigint shifted = B_raw[i * n_y + jcol] << static_cast<unsigned long>(fmt.m * j);
  return mod_pow2(shifted, static_cast<unsigned long>(ring.n_tilde));
}

Bigint RingController::D_at(std::size_t i, std::size_t jcol, long j) const {
  Bigint shifted = D_raw[i * n_y + jcol] << static_cast<unsigned long>(fmt.m * j);
  return mod_pow2(shifted, static_cast<unsigned long>(ring.n_tilde));
}

RingController ring_controller(const QuantizedController& ctrl, IntegerRingParams ring) {
  if (ring.n_tilde < 2) fail("invalid_argument", "ring width must be at least 2 bits");
  RingController r;
  r.n_c = ctrl.n_c();
  r.n_y = ctrl.n_y();
  r.n_u = ctrl.n_u();
  r.fmt = ctrl.format();
  r.ring = ring;
  r.T = ctrl.T;
  r.A_ring.reserve(ctrl.A.raw.size());
  for (const Bigint& v : ctrl.A.raw) r.A_ring.push_back(ring_embed_checked(v, ring));
  r.C_ring.reserve(ctrl.C.raw.size());
  for (const Bigint& v : ctrl.C.raw) r.C_ring.push_back(ring_embed_checked(v, ring));
  r.B_raw = ctrl.B.raw;
  r.D_raw = ctrl.D.raw;
  return r;
}

Bigint EncryptedController::B_scalar(std::size_t i, std::size_t jcol, long j) const {
  Bigint shifted = B_raw[i * n_y + jcol] << static_cast<unsigned long>(fmt.m * j);
  return embed_signed(shifted, pk);
}

Bigint EncryptedController::D_scalar(std::size_t i, std::size_t jcol, long j) const {
  Bigint shifted = D_raw[i * n_y + jcol] << static_cast<unsigned long>(fmt.m * j);
  return embed_signed(shifted, pk);
}

EncryptedController encrypted_controller(const RingController& ctrl,
                                         const PaillierPublicKey& pk) {
  if (pk.kappa_p < pow2(static_cast<unsigned long>(ctrl.ring.n_tilde) + 1)) {
    fail("config", "plaintext modulus too small for the ring: need kappa_p >= 2^(n_tilde+1)");
  }
  EncryptedController e;
  e.n_c = ctrl.n_c;
  e.n_y = ctrl.n_y;
  e.n_u = ctrl.n_u;
  e.fmt = ctrl.fmt;
  e.ring = ctrl.ring;
  e.T = ctrl.T;
  e.pk = pk;
  e.A_pt.reserve(ctrl.A_ring.size());
  for (const Bigint& v : ctrl.A_ring) {
    e.A_pt.push_back(embed_signed(ring_center(v, ctrl.ring), pk));
  }
  e.C_pt.reserve(ctrl.C_ring.size());
  for (const Bigint& v : ctrl.C_ring) {
    e.C_pt.push_back(embed_signed(ring_center(v, ctrl.ring), pk));
  }
  e.B_raw = ctrl.B_raw;
  e.D_raw = ctrl.D_raw;
  return e;
}

bool SessionParams::validate(std::size_t n_c, std::size_t n_y, std::size_t n_u) const {
  if (format.n < 1 || format.m < 0 || format.m > format.n) {
    fail("config", "session: invalid fixed-point format");
  }
  if (ring.n_tilde < 2) fail("config", "session: ring width must be at least 2 bits");
  if (T < 1) fail("config", "session: reset period must be >= 1");
  if (public_key) {
    if (public_key->kappa_p < pow2(static_cast<unsigned long>(ring.n_tilde) + 1)) {
      fail("config", "session: need 2^(n_tilde+1) <= kappa_p");
    }
  }
  if (T == ControllerRealization::kNonResetting) return false;  // no finite width suffices
  int bound = ring_bits_lower_bound(T, format.n, static_cast<int>(n_c),
                                    static_cast<int>(n_y), static_cast<int>(n_u));
  return ring.n_tilde >= bound;
}

std::pair<RealControllerState, Vector> reset_step_real(const RealControllerState& state,
                                                       const Vector& y,
                                                       const ControllerRealization& ctrl) {
  if (state.x.size() != ctrl.n_c()) fail("dimension", "controller step: state size mismatch");
  if (y.size() != ctrl.n_y()) fail("dimension", "controller step: measurement size mismatch");
  Vector u = vec_add(matvec(ctrl.C, state.x), matvec(ctrl.D, y));
  RealControllerState next;
  next.k = state.k + 1;
  if ((state.k + 1) % ctrl.T == 0) {
    next.x = Vector(ctrl.n_c(), 0.0);
  } else {
    next.x = vec_add(matvec(ctrl.A, state.x), matvec(ctrl.B, y));
  }
  return {next, u};
}

std::pair<QuantizedControllerState, std::vector<Bigint>> reset_step_quantized(
    const QuantizedControllerState& state, const std::vector<Bigint>& y_raw,
    const QuantizedController& ctrl) {
  const std::size_t n_c = ctrl.n_c(), n_y = ctrl.n_y(), n_u = ctrl.n_u();
  if (state.raw.size() != n_c) fail("dimension", "quantized step: state size mismatch");
  if (y_raw.size() != n_y) fail("dimension", "quantized step: measurement size mismatch");
  const unsigned long lift = static_cast<unsigned long>(ctrl.format().m) *
                             static_cast<unsigned long>(state.k % ctrl.T);

  std::vector<Bigint> u(n_u, Bigint(0));
  for (std::size_t i = 0; i < n_u; ++i) {
    Bigint acc = 0, meas = 0;
    for (std::size_t c = 0; c < n_c; ++c) acc += ctrl.C.at(i, c) * state.raw[c];
    for (std::size_t l = 0; l < n_y; ++l) meas += ctrl.D.at(i, l) * y_raw[l];
    u[i] = acc + (meas << lift);
  }

  QuantizedControllerState next;
  next.k = state.k + 1;
  if ((state.k + 1) % ctrl.T == 0) {
    next.raw = zeros(n_c);
  } else {
    next.raw.resize(n_c);
    for (std::size_t i = 0; i < n_c; ++i) {
      Bigint acc = 0, meas = 0;
      for (std::size_t c = 0; c < n_c; ++c) acc += ctrl.A.at(i, c) * state.raw[c];
      for (std::size_t l = 0; l < n_y; ++l) meas += ctrl.B.at(i, l) * y_raw[l];
      next.raw[i] = acc + (meas << lift);
    }
  }
  return {next, u};
}

namespace {

// Shared body of the resetting and non-resetting ring recursions; j is the
// scale index (k mod T, or k itself when never resetting).
std::pair<RingControllerState, std::vector<Bigint>> ring_step(
    const RingControllerState& state, const std::vector<Bigint>& y_ring,
    const RingController& ctrl, long j, bool reset_next) {
  const std::size_t n_c = ctrl.n_c, n_y = ctrl.n_y, n_u = ctrl.n_u;
  if (state.w.size() != n_c) fail("dimension", "ring step: state size mismatch");
  if (y_ring.size() != n_y) fail("dimension", "ring step: measurement size mismatch");
  const unsigned long width = static_cast<unsigned long>(ctrl.ring.n_tilde);

  std::vector<Bigint> u(n_u, Bigint(0));
  for (std::size_t i = 0; i < n_u; ++i) {
    Bigint acc = 0;
    for (std::size_t c = 0; c < n_c; ++c) acc += ctrl.C_ring[i * n_c + c] * state.w[c];
    for (std::size_t l = 0; l < n_y; ++l) acc += ctrl.D_at(i, l, j) * y_ring[l];
    u[i] = mod_pow2(acc, width);
  }

  RingControllerState next;
  next.k = state.k + 1;
  if (reset_next) {
    next.w = zeros(n_c);
  } else {
    next.w.resize(n_c);
    for (std::size_t i = 0; i < n_c; ++i) {
      Bigint acc = 0;
      for (std::size_t c = 0; c < n_c; ++c) acc += ctrl.A_ring[i * n_c + c] * state.w[c];
      for (std::size_t l = 0; l < n_y; ++l) acc += ctrl.B_at(i, l, j) * y_ring[l];
      next.w[i] = mod_pow2(acc, width);
    }
  }
  return {next, u};
}

}  // namespace

std::pair<RingControllerState, std::vector<Bigint>> reset_step_integer(
    const RingControllerState& state, const std::vector<Bigint>& y_ring,
    const RingController& ctrl, const SessionParams& session) {
  check_session_matches(session, ctrl.fmt, ctrl.ring);
  if (session.T != ctrl.T) fail("config", "session reset period does not match controller");
  return ring_step(state, y_ring, ctrl, state.k % ctrl.T, (state.k + 1) % ctrl.T == 0);
}

std::pair<RingControllerState, std::vector<Bigint>> nonresetting_step_integer(
    const RingControllerState& state, const std::vector<Bigint>& y_ring,
    const RingController& ctrl, const SessionParams& session) {
  check_session_matches(session, ctrl.fmt, ctrl.ring);
  return ring_step(state, y_ring, ctrl, state.k, false);
}

std::pair<UnboundedControllerState, std::vector<Bigint>> nonresetting_step_unbounded(
    const UnboundedControllerState& state, const std::vector<Bigint>& y_raw,
    const RingController& ctrl) {
  const std::size_t n_c = ctrl.n_c, n_y = ctrl.n_y, n_u = ctrl.n_u;
  if (state.v.size() != n_c) fail("dimension", "unbounded step: state size mismatch");
  if (y_raw.size() != n_y) fail("dimension", "unbounded step: measurement size mismatch");
  const unsigned long lift = static_cast<unsigned long>(ctrl.fmt.m) *
                             static_cast<unsigned long>(state.k);

  std::vector<Bigint> u(n_u, Bigint(0));
  for (std::size_t i = 0; i < n_u; ++i) {
    Bigint acc = 0, meas = 0;
    for (std::size_t c = 0; c < n_c; ++c) {
      acc += ring_center(ctrl.C_ring[i * n_c + c], ctrl.ring) * state.v[c];
    }
    for (std::size_t l = 0; l < n_y; ++l) meas += ctrl.D_raw[i * n_y + l] * y_raw[l];
    u[i] = acc + (meas << lift);
  }

  UnboundedControllerState next;
  next.k = state.k + 1;
  next.v.resize(n_c);
  for (std::size_t i = 0; i < n_c; ++i) {
    Bigint acc = 0, meas = 0;
    for (std::size_t c = 0; c < n_c; ++c) {
      acc += ring_center(ctrl.A_ring[i * n_c + c], ctrl.ring) * state.v[c];
    }
    for (std::size_t l = 0; l < n_y; ++l) meas += ctrl.B_raw[i * n_y + l] * y_raw[l];
    next.v[i] = acc + (meas << lift);
  }
  return {next, u};
}

std::pair<EncryptedControllerState, std::vector<Ciphertext>> reset_step_encrypted(
    const EncryptedControllerState& state, const std::vector<Ciphertext>& y_enc,
    const EncryptedController& ctrl, const SessionParams& session, Rng& rng) {
  check_session_matches(session, ctrl.fmt, ctrl.ring);
  if (session.T != ctrl.T) fail("config", "session reset period does not match controller");
  if (!session.public_key || !(*session.public_key == ctrl.pk)) {
    fail("config", "session public key does not match the encrypted controller");
  }
  const std::size_t n_c = ctrl.n_c, n_y = ctrl.n_y, n_u = ctrl.n_u;
  if (state.x.size() != n_c) fail("dimension", "encrypted step: state size mismatch");
  if (y_enc.size() != n_y) fail("dimension", "encrypted step: measurement size mismatch");
  for (const Ciphertext& c : y_enc) {
    if (c.value < 1 || c.value >= ctrl.pk.kappa_p_sq) {
      fail("protocol", "measurement ciphertext out of range for the session key");
    }
  }
  const long j = state.k % ctrl.T;
  const Ciphertext one{Bigint(1)};  // multiplicative identity: encryption of 0 with unit nonce

  std::vector<Ciphertext> u(n_u, one);
  for (std::size_t i = 0; i < n_u; ++i) {
    Ciphertext acc = one;
    for (std::size_t c = 0; c < n_c; ++c) {
      acc = hom_add(acc, scalar_mul(state.x[c], ctrl.C_pt[i * n_c + c], ctrl.pk), ctrl.pk);
    }
    for (std::size_t l = 0; l < n_y; ++l) {
      acc = hom_add(acc, scalar_mul(y_enc[l], ctrl.D_scalar(i, l, j), ctrl.pk), ctrl.pk);
    }
    u[i] = acc;
  }

  EncryptedControllerState next;
  next.k = state.k + 1;
  next.x.reserve(n_c);
  if ((state.k + 1) % ctrl.T == 0) {
    for (std::size_t i = 0; i < n_c; ++i) next.x.push_back(encrypt(0, ctrl.pk, rng));
  } else {
    for (std::size_t i = 0; i < n_c; ++i) {
      Ciphertext acc = one;
      for (std::size_t c = 0; c < n_c; ++c) {
        acc = hom_add(acc, scalar_mul(state.x[c], ctrl.A_pt[i * n_c + c], ctrl.pk), ctrl.pk);
      }
      for (std::size_t l = 0; l < n_y; ++l) {
        acc = hom_add(acc, scalar_mul(y_enc[l], ctrl.B_scalar(i, l, j), ctrl.pk), ctrl.pk);
      }
      next.x.push_back(acc);
    }
  }
  return {next, u};
}

Bigint decrypt_to_ring(const Ciphertext& c, const PaillierPublicKey& pk,
                       const PaillierPrivateKey& sk, const IntegerRingParams& ring) {
  Bigint plain = decrypt(c, pk, sk);
  Bigint centered = center_signed(plain, pk);
  return mod_pow2(centered, static_cast<unsigned long>(ring.n_tilde));
}

Realization realization_from_string(const std::string& name) {
  if (name == "real") return Realization::real;
  if (name == "quantized") return Realization::quantized;
  if (name == "integer") return Realization::integer;
  if (name == "integer-nonresetting") return Realization::integer_nonresetting;
  if (name == "encrypted") return Realization::encrypted;
  fail("invalid_argument", "unknown realization: " + name);
}

std::string to_string(Realization r) {
  switch (r) {
    case Realization::real: return "real";
    case Realization::quantized: return "quantized";
    case Realization::integer: return "integer";
    case Realization::integer_nonresetting: return "integer-nonresetting";
    case Realization::encrypted: return "encrypted";
  }
  fail("invalid_argument", "unknown realization enum value");
}

std::string SimulationTrace::to_csv() const {
  std::string out = "k";
  auto col = [&out](const std::string& base, std::size_t count) {
    for (std::size_t i = 1; i <= count; ++i) out += "," + base + "_" + std::to_string(i);
  };
  col("x", n_x);
  col("xc", n_c);
  col("u", n_u);
  out += ",norm_x,norm_xc,overflow_flag\n";
  char buf[40];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, ",%.17g", v);
    out += buf;
  };
  for (const TraceRow& row : rows) {
    out += std::to_string(row.k);
    for (double v : row.x) put(v);
    for (double v : row.xc) put(v);
    for (double v : row.u) put(v);
    put(row.norm_x);
    put(row.norm_xc);
    out += row.overflow ? ",1\n" : ",0\n";
  }
  return out;
}

namespace {

struct QuantizedMeasurement {
  std::vector<Bigint> raw;
  bool saturated = false;
};

QuantizedMeasurement quantize_measurement(const Vector& y, FixedPointFormat fmt) {
  QuantizedMeasurement q;
  q.raw.reserve(y.size());
  for (double v : y) {
    FixedPointScalar s = proj(v, fmt);
    q.saturated = q.saturated || s.saturated;
    q.raw.push_back(s.raw);
  }
  return q;
}

Vector decode_ring_vector(const std::vector<Bigint>& w, int scale,
                          const IntegerRingParams& ring) {
  Vector out(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) out[i] = from_ring(w[i], scale, ring);
  return out;
}

Vector decode_raw_vector(const std::vector<Bigint>& raw, int scale) {
  Vector out(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) out[i] = to_double_scaled(raw[i], scale);
  return out;
}

}  // namespace

SimulationTrace run_closed_loop(const PlantModel& plant, const ControllerRealization& ctrl,
                                const SessionParams& session, long horizon,
                                Realization realization, Rng* rng) {
  plant.validate();
  ctrl.validate(&plant);
  if (horizon < 1) fail("invalid_argument", "horizon must be positive");
  session.validate(ctrl.n_c(), ctrl.n_y(), ctrl.n_u());
  const bool needs_key = realization == Realization::encrypted;
  if (needs_key) {
    if (!session.public_key || !session.private_key) {
      fail("config", "encrypted realization needs both key halves on the session");
    }
    if (!rng) fail("invalid_argument", "encrypted realization needs an rng");
  }

  const int m = session.format.m;
  const int T = session.T;
  SimulationTrace trace;
  trace.n_x = plant.n_x();
  trace.n_c = ctrl.n_c();
  trace.n_u = plant.n_u();
  trace.rows.reserve(static_cast<std::size_t>(horizon));

  PlantState ps{plant.x0, 0};

  ControllerRealization session_ctrl = ctrl;
  session_ctrl.T = T;
  QuantizedController qc = quantize_controller(session_ctrl, session.format);
  RingController rc = ring_controller(qc, session.ring);
  EncryptedController ec;
  if (needs_key) ec = encrypted_controller(rc, *session.public_key);

  RealControllerState real_state{Vector(ctrl.n_c(), 0.0), 0};
  QuantizedControllerState quant_state{zeros(ctrl.n_c()), 0};
  RingControllerState ring_state{zeros(ctrl.n_c()), 0};
  UnboundedControllerState unbounded_state{zeros(ctrl.n_c()), 0};
  EncryptedControllerState enc_state;
  if (needs_key) {
    enc_state.x.reserve(ctrl.n_c());
    for (std::size_t i = 0; i < ctrl.n_c(); ++i) {
      enc_state.x.push_back(encrypt(0, *session.public_key, *rng));
    }
  }

  const bool nonreset = realization == Realization::integer_nonresetting;

  for (long k = 0; k < horizon; ++k) {
    TraceRow row;
    row.k = k;
    row.x = ps.x;
    row.norm_x = norm2(ps.x);

    Vector y = output(ps, plant);
    Vector u_applied;

    switch (realization) {
      case Realization::real: {
        row.xc = real_state.x;
        auto [next, u] = reset_step_real(real_state, y, session_ctrl);
        real_state = next;
        u_applied = u;
        break;
      }
      case Realization::quantized: {
        QuantizedMeasurement qy = quantize_measurement(y, session.format);
        row.overflow = qy.saturated;
        row.xc = decode_raw_vector(quant_state.raw, state_scale(k, T, m));
        auto [next, u_raw] = reset_step_quantized(quant_state, qy.raw, qc);
        quant_state = next;
        u_applied = decode_raw_vector(u_raw, input_scale(k, T, m));
        break;
      }
      case Realization::integer:
      case Realization::integer_nonresetting: {
        QuantizedMeasurement qy = quantize_measurement(y, session.format);
        row.overflow = qy.saturated;
        const int s_scale = nonreset ? m * static_cast<int>(k + 1) : state_scale(k, T, m);
        const int u_scale = nonreset ? m * static_cast<int>(k + 2) : input_scale(k, T, m);
        row.xc = decode_ring_vector(ring_state.w, s_scale, session.ring);

        std::vector<Bigint> y_ring(qy.raw.size());
        for (std::size_t i = 0; i < qy.raw.size(); ++i) {
          y_ring[i] = mod_pow2(qy.raw[i], static_cast<unsigned long>(session.ring.n_tilde));
        }
        std::pair<RingControllerState, std::vector<Bigint>> stepped =
            nonreset ? nonresetting_step_integer(ring_state, y_ring, rc, session)
                     : reset_step_integer(ring_state, y_ring, rc, session);

        // Shadow exact-integer run: flags the first step where the ring
        // residues stop being faithful two's-complement encodings.
        std::vector<Bigint> u_true;
        if (nonreset) {
          auto [unext, uu] = nonresetting_step_unbounded(unbounded_state, qy.raw, rc);
          unbounded_state = unext;
          u_true = uu;
        } else {
          QuantizedControllerState shadow{unbounded_state.v, unbounded_state.k};
          auto [unext, uu] = reset_step_quantized(shadow, qy.raw, qc);
          unbounded_state = UnboundedControllerState{unext.raw, unext.k};
          u_true = uu;
        }
        for (std::size_t i = 0; i < u_true.size() && !row.overflow; ++i) {
          if (ring_center(stepped.second[i], session.ring) != u_true[i]) row.overflow = true;
        }
        for (std::size_t i = 0; i < unbounded_state.v.size() && !row.overflow; ++i) {
          if (ring_center(stepped.first.w[i], session.ring) != unbounded_state.v[i]) {
            row.overflow = true;
          }
        }

        ring_state = stepped.first;
        u_applied.resize(stepped.second.size());
        for (std::size_t i = 0; i < stepped.second.size(); ++i) {
          u_applied[i] = from_ring(stepped.second[i], u_scale, session.ring);
        }
        break;
      }
      case Realization::encrypted: {
        QuantizedMeasurement qy = quantize_measurement(y, session.format);
        row.overflow = qy.saturated;
        row.xc.resize(enc_state.x.size());
        for (std::size_t i = 0; i < enc_state.x.size(); ++i) {
          Bigint w = decrypt_to_ring(enc_state.x[i], *session.public_key,
                                     *session.private_key, session.ring);
          row.xc[i] = from_ring(w, state_scale(k, T, m), session.ring);
        }
        std::vector<Ciphertext> y_enc;
        y_enc.reserve(qy.raw.size());
        for (const Bigint& raw : qy.raw) {
          y_enc.push_back(
              encrypt(embed_signed(raw, *session.public_key), *session.public_key, *rng));
        }
        auto [next, u_enc] = reset_step_encrypted(enc_state, y_enc, ec, session, *rng);
        enc_state = next;
        u_applied.resize(u_enc.size());
        for (std::size_t i = 0; i < u_enc.size(); ++i) {
          Bigint w = decrypt_to_ring(u_enc[i], *session.public_key, *session.private_key,
                                     session.ring);
          u_applied[i] = from_ring(w, input_scale(k, T, m), session.ring);
        }
        break;
      }
    }

    row.norm_xc = norm2(row.xc);
    row.u = u_applied;
    trace.any_overflow = trace.any_overflow || row.overflow;
    trace.rows.push_back(std::move(row));

    for (double v : u_applied) {
      if (!std::isfinite(v)) fail("numeric", "actuation became non-finite");
    }
    ps = step(ps, u_applied, plant);
    if (!std::isfinite(norm2(ps.x))) fail("numeric", "plant state became non-finite");
  }
  return trace;
}

TowerReport run_lockstep_tower(const PlantModel& plant, const ControllerRealization& ctrl,
                               const SessionParams& session, long horizon, Rng& rng,
                               bool with_encrypted, bool real_cmp) {
  plant.validate();
  ctrl.validate(&plant);
  session.validate(ctrl.n_c(), ctrl.n_y(), ctrl.n_u());
  if (with_encrypted && (!session.public_key || !session.private_key)) {
    fail("config", "tower with encryption needs both key halves on the session");
  }

  const int m = session.format.m;
  const int T = session.T;

  ControllerRealization session_ctrl = ctrl;
  session_ctrl.T = T;
  QuantizedController qc = quantize_controller(session_ctrl, session.format);
  RingController rc = ring_controller(qc, session.ring);
  EncryptedController ec;
  if (with_encrypted) ec = encrypted_controller(rc, *session.public_key);

  // The real comparison runs the double-precision recursion on the
  // quantized data; it matches bit-for-bit only while every raw stays
  // within the 53-bit exact range of a double.
  ControllerRealization decoded_ctrl = session_ctrl;
  decoded_ctrl.A = qc.A.to_matrix();
  decoded_ctrl.B = qc.B.to_matrix();
  decoded_ctrl.C = qc.C.to_matrix();
  decoded_ctrl.D = qc.D.to_matrix();

  PlantState ps{plant.x0, 0};
  QuantizedControllerState quant_state{zeros(ctrl.n_c()), 0};
  RingControllerState ring_state{zeros(ctrl.n_c()), 0};
  RealControllerState real_state{Vector(ctrl.n_c(), 0.0), 0};
  EncryptedControllerState enc_state;
  if (with_encrypted) {
    for (std::size_t i = 0; i < ctrl.n_c(); ++i) {
      enc_state.x.push_back(encrypt(0, *session.public_key, rng));
    }
  }

  auto mismatch = [](long k, const std::string& what) {
    return TowerReport{false, k, what};
  };

  for (long k = 0; k < horizon; ++k) {
    Vector y = output(ps, plant);
    QuantizedMeasurement qy = quantize_measurement(y, session.format);
    std::vector<Bigint> y_ring(qy.raw.size());
    for (std::size_t i = 0; i < qy.raw.size(); ++i) {
      y_ring[i] = mod_pow2(qy.raw[i], static_cast<unsigned long>(session.ring.n_tilde));
    }

    auto [q_next, u_raw] = reset_step_quantized(quant_state, qy.raw, qc);
    auto [r_next, u_ring] = reset_step_integer(ring_state, y_ring, rc, session);

    for (std::size_t i = 0; i < u_raw.size(); ++i) {
      if (ring_center(u_ring[i], session.ring) != u_raw[i]) {
        return mismatch(k, "ring actuation diverged from the exact raws at component " +
                               std::to_string(i));
      }
    }
    for (std::size_t i = 0; i < q_next.raw.size(); ++i) {
      if (ring_center(r_next.w[i], session.ring) != q_next.raw[i]) {
        return mismatch(k, "ring state diverged from the exact raws at component " +
                               std::to_string(i));
      }
    }

    if (with_encrypted) {
      std::vector<Ciphertext> y_enc;
      y_enc.reserve(qy.raw.size());
      for (const Bigint& raw : qy.raw) {
        y_enc.push_back(
            encrypt(embed_signed(raw, *session.public_key), *session.public_key, rng));
      }
      auto [e_next, u_enc] = reset_step_encrypted(enc_state, y_enc, ec, session, rng);
      for (std::size_t i = 0; i < u_enc.size(); ++i) {
        Bigint w = decrypt_to_ring(u_enc[i], *session.public_key, *session.private_key,
                                   session.ring);
        if (w != u_ring[i]) {
          return mismatch(k, "decrypted actuation diverged from the ring at component " +
                                 std::to_string(i));
        }
      }
      for (std::size_t i = 0; i < e_next.x.size(); ++i) {
        Bigint w = decrypt_to_ring(e_next.x[i], *session.public_key, *session.private_key,
                                   session.ring);
        if (w != r_next.w[i]) {
          return mismatch(k, "decrypted state diverged from the ring at component " +
                                 std::to_string(i));
        }
      }
      enc_state = e_next;
    }

    if (real_cmp) {
      Vector y_decoded(qy.raw.size());
      for (std::size_t i = 0; i < qy.raw.size(); ++i) {
        y_decoded[i] = to_double_scaled(qy.raw[i], m);
      }
      auto [real_next, u_real] = reset_step_real(real_state, y_decoded, decoded_ctrl);
      for (std::size_t i = 0; i < u_real.size(); ++i) {
        if (u_real[i] != to_double_scaled(u_raw[i], input_scale(k, T, m))) {
          return mismatch(k, "double-precision actuation diverged at component " +
                                 std::to_string(i));
        }
      }
      for (std::size_t i = 0; i < real_next.x.size(); ++i) {
        if (real_next.x[i] != to_double_scaled(q_next.raw[i], state_scale(k + 1, T, m))) {
          return mismatch(k, "double-precision state diverged at component " +
                                 std::to_string(i));
        }
      }
      real_state = real_next;
    }

    quant_state = q_next;
    ring_state = r_next;

    Vector u_applied = decode_raw_vector(u_raw, input_scale(k, T, m));
    ps = step(ps, u_applied, plant);
  }
  return TowerReport{};
}

}  // namespace ectrl
