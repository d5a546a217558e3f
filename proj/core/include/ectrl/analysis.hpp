#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "ectrl/controller.hpp"
#include "ectrl/linalg.hpp"
#include "ectrl/plant.hpp"

namespace ectrl {

/// The augmented closed-loop transition matrix
///   F = [A + B D_c C, B C_c; B_c C, A_c]
/// together with the reset projector H = diag(I_{n_x}, 0) and the
/// post-reset map F_tilde = H F.
struct ClosedLoopMatrix {
  Matrix F;
  Matrix F_tilde;
  Matrix H;
  std::size_t n_x = 0, n_c = 0;
};

ClosedLoopMatrix build_closed_loop(const PlantModel& plant, const ControllerRealization& ctrl);

/// A Lyapunov-style stability certificate for the resetting loop:
///   (a) P >= eps_small I, (b) F^T P F <= (1+mu) P,
///   (c) F_tilde^T P F_tilde <= delta P, (d) delta (1+mu)^{T-1} < eps_bar.
struct StabilityCertificate {
  Matrix P;
  double mu = 0.0;         // in [-1, 0)
  double delta = 1.0;      // in [1, inf)
  double eps_small = 0.0;  // margin of P > 0
  double eps_bar = 1.0;    // in (0, 1)
  int T = 1;
};

struct CertificateVerdict {
  bool p_positive = false;       // (a)
  bool contraction = false;      // (b)
  bool reset_jump = false;       // (c)
  bool horizon = false;          // (d)
  double margin_p = 0.0;         // min eig(P - eps_small I)
  double margin_contraction = 0.0;  // max eig(F^T P F - (1+mu) P)
  double margin_reset = 0.0;        // max eig(F_tilde^T P F_tilde - delta P)
  double horizon_value = 0.0;       // delta (1+mu)^{T-1}

  bool all() const { return p_positive && contraction && reset_jump && horizon; }
};

/// Checks the four certificate conditions separately; eigenvalue margins
/// are accepted up to tol.
CertificateVerdict check_certificate(const ClosedLoopMatrix& cl,
                                     const StabilityCertificate& cert, double tol);

/// Uniform grid of `count` points spanning (-0.99, -0.01), endpoints
/// included; the default search grid for the contraction rate.
std::vector<double> default_mu_grid(int count = 30);

/// For every grid rate mu with rho(F)^2 < 1+mu, solves the Lyapunov
/// recipe P = dlyap(F, I, 1+mu), takes the minimal delta for (c) via the
/// generalized eigenvalue, sets eps_small = min_eig(P)/2 and the minimal
/// T making (d) hold (exponent T-1). Returns the grid point with smallest
/// T, ties broken toward smaller |mu|; nullopt when rho(F) >= 1 or the
/// grid is exhausted.
std::optional<StabilityCertificate> find_certificate(const ClosedLoopMatrix& cl,
                                                     const std::vector<double>& mu_grid,
                                                     double eps_bar = 1.0 - 1e-9);

/// Smallest integer T >= 1 with delta (1+mu)^e < eps_bar, where the
/// exponent e is T when exponent_offset = 0 (the reporting convention
/// that reproduces the published horizons) and T-1 when
/// exponent_offset = 1 (the certificate-condition convention).
int min_reset_horizon(double delta, double mu, double eps_bar, int exponent_offset = 0);

/// Lower bound on the total word length n required for the saturation-free
/// guarantee: log2(lambda_max(C^T C)/eps_small * x0^T H P H x0) + 1,
/// with x0 the augmented initial state (controller part zero). Returns
/// -infinity when the argument of the log vanishes.
double word_length_bound(const Matrix& P, double eps_small, const Matrix& C,
                         const Vector& x0_augmented);

/// rho(H F^T): the exact spectral oracle for the noise-free reset loop
/// sampled every T steps.
double lifted_spectral_radius(const ClosedLoopMatrix& cl, int T);

}  // namespace ectrl
