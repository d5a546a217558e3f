#include "ectrl/analysis.hpp"

#include <cmath>
#include <limits>

#include "ectrl/error.hpp"

namespace ectrl {

namespace {

Matrix matrix_power(const Matrix& m, int e) {
  Matrix out = Matrix::identity(m.rows());
  for (int i = 0; i < e; ++i) out = out * m;
  return out;
}

}  // namespace

ClosedLoopMatrix build_closed_loop(const PlantModel& plant, const ControllerRealization& ctrl) {
  plant.validate();
  ctrl.validate(&plant);
  const std::size_t n_x = plant.n_x(), n_c = ctrl.n_c();
  ClosedLoopMatrix cl;
  cl.n_x = n_x;
  cl.n_c = n_c;
  cl.F = Matrix(n_x + n_c, n_x + n_c);
  cl.F.set_block(0, 0, plant.A + plant.B * ctrl.D * plant.C);
  cl.F.set_block(0, n_x, plant.B * ctrl.C);
  cl.F.set_block(n_x, 0, ctrl.B * plant.C);
  cl.F.set_block(n_x, n_x, ctrl.A);
  cl.H = Matrix(n_x + n_c, n_x + n_c);
  cl.H.set_block(0, 0, Matrix::identity(n_x));
  cl.F_tilde = cl.H * cl.F;
  return cl;
}

CertificateVerdict check_certificate(const ClosedLoopMatrix& cl,
                                     const StabilityCertificate& cert, double tol) {
  const std::size_t n = cl.F.rows();
  if (cert.P.rows() != n || cert.P.cols() != n) {
    fail("dimension", "certificate P does not match the closed loop");
  }
  if (tol < 0) fail("invalid_argument", "tolerance must be nonnegative");

  CertificateVerdict v;
  Matrix shifted = cert.P - cert.eps_small * Matrix::identity(n);
  v.margin_p = min_eig_sym(shifted);
  v.p_positive = v.margin_p >= -tol;

  Matrix contraction = cl.F.transpose() * cert.P * cl.F - (1.0 + cert.mu) * cert.P;
  v.margin_contraction = max_eig_sym(contraction);
  v.contraction = v.margin_contraction <= tol;

  Matrix reset = cl.F_tilde.transpose() * cert.P * cl.F_tilde - cert.delta * cert.P;
  v.margin_reset = max_eig_sym(reset);
  v.reset_jump = v.margin_reset <= tol;

  v.horizon_value = cert.delta * std::pow(1.0 + cert.mu, cert.T - 1);
  v.horizon = cert.T >= 1 && v.horizon_value < cert.eps_bar;
  return v;
}

std::vector<double> default_mu_grid(int count) {
  if (count < 1) fail("invalid_argument", "grid needs at least one point");
  const double lo = -0.99, hi = -0.01;
  std::vector<double> grid(static_cast<std::size_t>(count));
  if (count == 1) {
    grid[0] = lo;
    return grid;
  }
  for (int i = 0; i < count; ++i) grid[i] = lo + (hi - lo) * i / (count - 1);
  return grid;
}

int min_reset_horizon(double delta, double mu, double eps_bar, int exponent_offset) {
  if (!(delta >= 1.0)) fail("invalid_argument", "min_reset_horizon: delta must be >= 1");
  if (!(mu > -1.0 && mu < 0.0)) {
    fail("invalid_argument", "min_reset_horizon: mu must lie in (-1, 0)");
  }
  if (!(eps_bar > 0.0 && eps_bar <= 1.0)) {
    fail("invalid_argument", "min_reset_horizon: eps_bar must lie in (0, 1]");
  }
  if (exponent_offset != 0 && exponent_offset != 1) {
    fail("invalid_argument", "min_reset_horizon: exponent offset must be 0 or 1");
  }
  for (int T = 1; T <= 1000000; ++T) {
    if (delta * std::pow(1.0 + mu, T - exponent_offset) < eps_bar) return T;
  }
  fail("numeric", "min_reset_horizon: no horizon below 10^6 steps");
}

std::optional<StabilityCertificate> find_certificate(const ClosedLoopMatrix& cl,
                                                     const std::vector<double>& mu_grid,
                                                     double eps_bar) {
  const double rho = spectral_radius(cl.F);
  if (rho >= 1.0) return std::nullopt;
  const std::size_t n = cl.F.rows();

  std::optional<StabilityCertificate> best;
  for (double mu : mu_grid) {
    if (!(mu > -1.0 && mu < 0.0)) continue;
    if (rho * rho >= 1.0 + mu) continue;
    Matrix P = solve_discrete_lyapunov(cl.F, Matrix::identity(n), 1.0 + mu);
    double min_p = min_eig_sym(P);
    if (min_p <= 0.0) continue;
    Matrix jump = cl.F_tilde.transpose() * P * cl.F_tilde;
    double delta = std::max(1.0, max_gen_eig(jump, P));
    int T = min_reset_horizon(delta, mu, eps_bar, 1);
    if (!best || T < best->T || (T == best->T && std::abs(mu) < std::abs(best->mu))) {
      StabilityCertificate cert;
      cert.P = P;
      cert.mu = mu;
      cert.delta = delta;
      cert.eps_small = min_p / 2.0;
      cert.eps_bar = eps_bar;
      cert.T = T;
      best = cert;
    }
  }
  return best;
}

double word_length_bound(const Matrix& P, double eps_small, const Matrix& C,
                         const Vector& x0_augmented) {
  if (P.rows() != P.cols() || P.rows() != x0_augmented.size()) {
    fail("dimension", "word_length_bound: P and x0 dimensions differ");
  }
  if (C.cols() > P.rows()) fail("dimension", "word_length_bound: C wider than the loop");
  if (!(eps_small > 0.0)) fail("invalid_argument", "word_length_bound: eps_small must be > 0");
  double lam_cc = max_eig_sym(C.transpose() * C);
  double xpx = dot(x0_augmented, matvec(P, x0_augmented));
  double arg = lam_cc / eps_small * xpx;
  if (arg <= 0.0) return -std::numeric_limits<double>::infinity();
  return std::log2(arg) + 1.0;
}

double lifted_spectral_radius(const ClosedLoopMatrix& cl, int T) {
  if (T < 1) fail("invalid_argument", "lifted_spectral_radius: T must be >= 1");
  return spectral_radius(cl.H * matrix_power(cl.F, T));
}

}  // namespace ectrl
