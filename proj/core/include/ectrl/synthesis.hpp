#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "ectrl/analysis.hpp"
#include "ectrl/controller.hpp"
#include "ectrl/linalg.hpp"
#include "ectrl/plant.hpp"

namespace ectrl {

/// The linearizing synthesis variables nu = (X, Y, K1, K2, K3, K4).
/// X, Y are symmetric n_x x n_x; K1 is n_x x n_x, K2 is n_x x n_y,
/// K3 is n_u x n_x, K4 is n_u x n_y.
struct SynthesisVariables {
  Matrix X, Y, K1, K2, K3, K4;
};

/// Verdicts of the three synthesis feasibility conditions at (mu, delta).
struct SynthesisCertificate {
  SynthesisVariables nu;
  double mu = 0.0;
  double delta = 1.0;
  bool p_positive = false;       // P(nu) > 0
  bool l_psd = false;            // L(nu) >= 0
  bool ltilde_psd = false;       // Ltilde(nu) >= 0
  double margin_p = 0.0;         // min eig P(nu)
  double margin_l = 0.0;         // min eig L(nu)
  double margin_ltilde = 0.0;    // min eig Ltilde(nu)

  bool all() const { return p_positive && l_psd && ltilde_psd; }
};

/// Output of the controller reconstruction: the Lyapunov matrix in
/// original coordinates, the controller, and the factorization pair with
/// V U^T = I - Y X.
struct ReconstructedController {
  Matrix P;  // 2 n_x x 2 n_x, positive definite
  Matrix A_c, B_c, C_c, D_c;
  Matrix U, V;
};

/// P(nu) = [Y, I; I, X].
Matrix build_P_of_nu(const SynthesisVariables& nu);

/// F(nu) = [A Y + B K3, A + B K4 C; K1, X A + K2 C].
Matrix build_F_of_nu(const PlantModel& plant, const SynthesisVariables& nu);

/// Ftilde(nu) = [A Y + B K3, A + B K4 C; X B K3 + X A Y, X A + X B K4 C];
/// its second block row is X times the first.
Matrix build_Ftilde_of_nu(const PlantModel& plant, const SynthesisVariables& nu);

/// R(nu) = (A Y + B K3, A + B K4 C)  — the top block row of F(nu).
Matrix build_R_of_nu(const PlantModel& plant, const SynthesisVariables& nu);

/// L(nu) = [(1+mu) P(nu), F(nu)^T; F(nu), P(nu)].
Matrix build_L_of_nu(const PlantModel& plant, const SynthesisVariables& nu, double mu);

/// Ltilde(nu) = [delta P(nu), R(nu)^T; R(nu), 2 I - X]  — the convexified
/// sufficient form of the reset-jump condition.
Matrix build_Ltilde_of_nu(const PlantModel& plant, const SynthesisVariables& nu, double delta);

/// S(nu) = [delta P(nu), Ftilde(nu)^T; Ftilde(nu), P(nu)]  — the exact
/// reset-jump condition; Ltilde(nu) >= 0 implies S(nu) >= 0.
Matrix build_S_of_nu(const PlantModel& plant, const SynthesisVariables& nu, double delta);

/// Eigenvalue-based verdicts for P(nu) > 0, L(nu) >= 0, Ltilde(nu) >= 0
/// at tolerance tol.
SynthesisCertificate check_synthesis_certificate(const PlantModel& plant,
                                                 const SynthesisVariables& nu, double mu,
                                                 double delta, double tol);

/// Recovers (P, controller) from nu: full-rank factorization
/// V U^T = I - Y X by singular value decomposition, then the inverse
/// change of variables. Requires P(nu) positive definite
/// (Error("not_positive_definite") otherwise).
ReconstructedController reconstruct_controller(const PlantModel& plant,
                                               const SynthesisVariables& nu);

/// The forward change of variables (P, controller) -> nu. P is
/// partitioned as [X, U; U^T, *]; U must be nonsingular
/// (Error("singular") otherwise).
SynthesisVariables apply_change_of_variables(const Matrix& P, const Matrix& A_c,
                                             const Matrix& B_c, const Matrix& C_c,
                                             const Matrix& D_c, const PlantModel& plant);

enum class ProjectionScheme {
  alternating,  // plain alternating projections
  reflected,    // Douglas-Rachford reflections of the same two projections
};

struct SolverOptions {
  ProjectionScheme scheme = ProjectionScheme::reflected;
  int max_iterations = 5000;
  int restarts = 3;
  double tolerance = 1e-7;  // relative eigenvalue feasibility tolerance
  double margin = 1e-3;     // PSD clip margin during projection
  std::uint64_t seed = 2024;
};

struct FeasibilityResult {
  bool feasible = false;
  SynthesisVariables nu;
  double mu = 0.0;
  double delta = 0.0;
  int iterations = 0;
};

/// Best-effort LMI feasibility at fixed (mu, delta): projection splitting
/// between the PSD cone (blockwise eigenvalue clipping) and the affine
/// image of nu. Infeasible-within-budget is a value, not an error.
FeasibilityResult solve_feasibility(const PlantModel& plant, double mu, double delta,
                                    const SolverOptions& options);

/// Line search over mu and bisection over delta (range [lo, hi], absolute
/// tolerance delta_tol) around solve_feasibility. Returns the smallest
/// feasible delta found with its nu; no global-optimality claim.
FeasibilityResult feasibility_search(const PlantModel& plant,
                                     const std::vector<double>& mu_grid,
                                     double delta_lo = 1.0, double delta_hi = 1e4,
                                     double delta_tol = 0.5,
                                     const SolverOptions& options = {});

}  // namespace ectrl
