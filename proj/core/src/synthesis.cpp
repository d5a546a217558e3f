#include "ectrl/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "ectrl/error.hpp"
#include "ectrl/rng.hpp"

namespace ectrl {

namespace {

void check_nu_shapes(const PlantModel& plant, const SynthesisVariables& nu) {
  const std::size_t nx = plant.n_x(), nu_g = plant.n_u(), ny = plant.n_y();
  auto is = [](const Matrix& m, std::size_t r, std::size_t c) {
    return m.rows() == r && m.cols() == c;
  };
  if (!is(nu.X, nx, nx) || !is(nu.Y, nx, nx) || !is(nu.K1, nx, nx) ||
      !is(nu.K2, nx, ny) || !is(nu.K3, nu_g, nx) || !is(nu.K4, nu_g, ny)) {
    fail("dimension", "synthesis variables do not match the plant dimensions");
  }
}

Matrix top_row(const PlantModel& plant, const SynthesisVariables& nu) {
  return hstack(plant.A * nu.Y + plant.B * nu.K3,
                plant.A + plant.B * nu.K4 * plant.C);
}

}  // namespace

Matrix build_P_of_nu(const SynthesisVariables& nu) {
  const std::size_t nx = nu.X.rows();
  Matrix p(2 * nx, 2 * nx);
  p.set_block(0, 0, nu.Y);
  p.set_block(0, nx, Matrix::identity(nx));
  p.set_block(nx, 0, Matrix::identity(nx));
  p.set_block(nx, nx, nu.X);
  return p;
}

Matrix build_F_of_nu(const PlantModel& plant, const SynthesisVariables& nu) {
  check_nu_shapes(plant, nu);
  return vstack(top_row(plant, nu),
                hstack(nu.K1, nu.X * plant.A + nu.K2 * plant.C));
}

Matrix build_Ftilde_of_nu(const PlantModel& plant, const SynthesisVariables& nu) {
  check_nu_shapes(plant, nu);
  Matrix r1 = top_row(plant, nu);
  Matrix r2 = hstack(nu.X * plant.B * nu.K3 + nu.X * plant.A * nu.Y,
                     nu.X * plant.A + nu.X * plant.B * nu.K4 * plant.C);
  return vstack(r1, r2);
}

Matrix build_R_of_nu(const PlantModel& plant, const SynthesisVariables& nu) {
  check_nu_shapes(plant, nu);
  return top_row(plant, nu);
}

Matrix build_L_of_nu(const PlantModel& plant, const SynthesisVariables& nu, double mu) {
  check_nu_shapes(plant, nu);
  const std::size_t n = 2 * plant.n_x();
  Matrix p = build_P_of_nu(nu);
  Matrix f = build_F_of_nu(plant, nu);
  Matrix l(2 * n, 2 * n);
  l.set_block(0, 0, (1.0 + mu) * p);
  l.set_block(0, n, f.transpose());
  l.set_block(n, 0, f);
  l.set_block(n, n, p);
  return l;
}

Matrix build_Ltilde_of_nu(const PlantModel& plant, const SynthesisVariables& nu, double delta) {
  check_nu_shapes(plant, nu);
  const std::size_t nx = plant.n_x(), n = 2 * nx;
  Matrix p = build_P_of_nu(nu);
  Matrix r = build_R_of_nu(plant, nu);
  Matrix lt(n + nx, n + nx);
  lt.set_block(0, 0, delta * p);
  lt.set_block(0, n, r.transpose());
  lt.set_block(n, 0, r);
  lt.set_block(n, n, 2.0 * Matrix::identity(nx) - nu.X);
  return lt;
}

Matrix build_S_of_nu(const PlantModel& plant, const SynthesisVariables& nu, double delta) {
  check_nu_shapes(plant, nu);
  const std::size_t n = 2 * plant.n_x();
  Matrix p = build_P_of_nu(nu);
  Matrix ft = build_Ftilde_of_nu(plant, nu);
  Matrix s(2 * n, 2 * n);
  s.set_block(0, 0, delta * p);
  s.set_block(0, n, ft.transpose());
  s.set_block(n, 0, ft);
  s.set_block(n, n, p);
  return s;
}

SynthesisCertificate check_synthesis_certificate(const PlantModel& plant,
                                                 const SynthesisVariables& nu, double mu,
                                                 double delta, double tol) {
  if (tol < 0) fail("invalid_argument", "tolerance must be nonnegative");
  SynthesisCertificate cert;
  cert.nu = nu;
  cert.mu = mu;
  cert.delta = delta;
  Matrix p = build_P_of_nu(nu);
  Matrix l = build_L_of_nu(plant, nu, mu);
  Matrix lt = build_Ltilde_of_nu(plant, nu, delta);
  cert.margin_p = min_eig_sym(p);
  cert.margin_l = min_eig_sym(l);
  cert.margin_ltilde = min_eig_sym(lt);
  // P must be strictly positive; the big blocks are accepted down to a
  // relative slack, matching the solver's acceptance rule.
  cert.p_positive = cert.margin_p > 0.0;
  cert.l_psd = cert.margin_l >= -tol * std::max(1.0, l.norm_fro());
  cert.ltilde_psd = cert.margin_ltilde >= -tol * std::max(1.0, lt.norm_fro());
  return cert;
}

ReconstructedController reconstruct_controller(const PlantModel& plant,
                                               const SynthesisVariables& nu) {
  check_nu_shapes(plant, nu);
  const std::size_t nx = plant.n_x(), nu_g = plant.n_u(), ny = plant.n_y();
  Matrix p_nu = build_P_of_nu(nu);
  if (min_eig_sym(p_nu) <= 0.0) {
    fail("not_positive_definite", "reconstruction requires P(nu) > 0");
  }

  // Full-rank factorization V U^T = I - Y X through the SVD.
  Matrix gap = Matrix::identity(nx) - nu.Y * nu.X;
  Svd dec = svd(gap);
  Matrix sqrt_s(nx, nx);
  for (std::size_t i = 0; i < nx; ++i) sqrt_s(i, i) = std::sqrt(dec.singular_values[i]);
  Matrix v_fac = dec.u * sqrt_s;
  Matrix u_fac = dec.v * sqrt_s;

  Matrix lhs(nx + nu_g, nx + nu_g);
  lhs.set_block(0, 0, u_fac);
  lhs.set_block(0, nx, nu.X * plant.B);
  lhs.set_block(nx, nx, Matrix::identity(nu_g));

  Matrix rhs(nx + ny, nx + ny);
  rhs.set_block(0, 0, v_fac.transpose());
  rhs.set_block(nx, 0, plant.C * nu.Y);
  rhs.set_block(nx, nx, Matrix::identity(ny));

  Matrix k(nx + nu_g, nx + ny);
  k.set_block(0, 0, nu.K1 - nu.X * plant.A * nu.Y);
  k.set_block(0, nx, nu.K2);
  k.set_block(nx, 0, nu.K3);
  k.set_block(nx, nx, nu.K4);

  Matrix theta = lu_solve(lhs, k) * inverse(rhs);

  ReconstructedController out;
  out.A_c = theta.block(0, 0, nx, nx);
  out.B_c = theta.block(0, nx, nx, ny);
  out.C_c = theta.block(nx, 0, nu_g, nx);
  out.D_c = theta.block(nx, nx, nu_g, ny);
  out.U = u_fac;
  out.V = v_fac;

  Matrix cal_y(2 * nx, 2 * nx);
  cal_y.set_block(0, 0, nu.Y);
  cal_y.set_block(0, nx, Matrix::identity(nx));
  cal_y.set_block(nx, 0, v_fac.transpose());
  out.P = symmetrize(lu_solve(cal_y.transpose(), p_nu) * inverse(cal_y));
  return out;
}

SynthesisVariables apply_change_of_variables(const Matrix& P, const Matrix& A_c,
                                             const Matrix& B_c, const Matrix& C_c,
                                             const Matrix& D_c, const PlantModel& plant) {
  const std::size_t nx = plant.n_x(), nu_g = plant.n_u(), ny = plant.n_y();
  if (P.rows() != 2 * nx || P.cols() != 2 * nx) {
    fail("dimension", "change of variables expects a 2 n_x Lyapunov matrix");
  }
  if (A_c.rows() != nx || A_c.cols() != nx || B_c.rows() != nx || B_c.cols() != ny ||
      C_c.rows() != nu_g || C_c.cols() != nx || D_c.rows() != nu_g || D_c.cols() != ny) {
    fail("dimension", "controller dimensions do not match the plant");
  }

  Matrix x_blk = P.block(0, 0, nx, nx);
  Matrix u_blk = P.block(0, nx, nx, nx);
  inverse(u_blk);  // diagnoses a singular U before committing to the formulas
  Matrix p_inv = inverse(P);
  Matrix y_blk = p_inv.block(0, 0, nx, nx);
  Matrix v_blk = p_inv.block(0, nx, nx, nx);

  Matrix left(nx + nu_g, nx + nu_g);
  left.set_block(0, 0, u_blk);
  left.set_block(0, nx, x_blk * plant.B);
  left.set_block(nx, nx, Matrix::identity(nu_g));

  Matrix mid(nx + nu_g, nx + ny);
  mid.set_block(0, 0, A_c);
  mid.set_block(0, nx, B_c);
  mid.set_block(nx, 0, C_c);
  mid.set_block(nx, nx, D_c);

  Matrix right(nx + ny, nx + ny);
  right.set_block(0, 0, v_blk.transpose());
  right.set_block(nx, 0, plant.C * y_blk);
  right.set_block(nx, nx, Matrix::identity(ny));

  Matrix k = left * mid * right;

  SynthesisVariables nu;
  nu.X = x_blk;
  nu.Y = y_blk;
  nu.K1 = k.block(0, 0, nx, nx) + x_blk * plant.A * y_blk;
  nu.K2 = k.block(0, nx, nx, ny);
  nu.K3 = k.block(nx, 0, nu_g, nx);
  nu.K4 = k.block(nx, nx, nu_g, ny);
  return nu;
}

// ---------------------------------------------------------------------------
// LMI feasibility by projection splitting

namespace {

struct Packing {
  std::size_t nx, nu_g, ny;
  std::size_t nvar;

  std::size_t sym_count(std::size_t r) const { return r * (r + 1) / 2; }

  explicit Packing(const PlantModel& plant)
      : nx(plant.n_x()), nu_g(plant.n_u()), ny(plant.n_y()) {
    nvar = 2 * sym_count(nx) + nx * nx + nx * ny + nu_g * nx + nu_g * ny;
  }

  SynthesisVariables unpack(const Vector& v) const {
    SynthesisVariables nu;
    std::size_t i = 0;
    auto take_sym = [&](std::size_t r) {
      Matrix m(r, r);
      for (std::size_t a = 0; a < r; ++a)
        for (std::size_t b = a; b < r; ++b) {
          m(a, b) = m(b, a) = v[i++];
        }
      return m;
    };
    auto take_full = [&](std::size_t r, std::size_t c) {
      Matrix m(r, c);
      for (std::size_t a = 0; a < r; ++a)
        for (std::size_t b = 0; b < c; ++b) m(a, b) = v[i++];
      return m;
    };
    nu.X = take_sym(nx);
    nu.Y = take_sym(nx);
    nu.K1 = take_full(nx, nx);
    nu.K2 = take_full(nx, ny);
    nu.K3 = take_full(nu_g, nx);
    nu.K4 = take_full(nu_g, ny);
    return nu;
  }
};

void append_flat(Vector& out, const Matrix& m) {
  out.insert(out.end(), m.data().begin(), m.data().end());
}

Matrix reshape(const Vector& flat, std::size_t off, std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n * n; ++i) m.data()[i] = flat[off + i];
  return m;
}

Matrix psd_clip(const Matrix& m, double floor_value) {
  SymEig e = sym_eig(m);
  const std::size_t n = m.rows();
  Matrix out(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    double lam = std::max(e.values[k], floor_value);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        out(i, j) += lam * e.vectors(i, k) * e.vectors(j, k);
  }
  return out;
}

struct StackedProblem {
  Packing pack;
  std::size_t s1, s2, s3;      // block side lengths
  std::size_t n1, n2, n3, total;
  Vector b0;                   // affine offset of the stacked map
  Matrix amap;                 // total x nvar
  Matrix aw;                   // row-weighted amap
  Vector w;                    // per-row weights
  Matrix normal_inv;           // (Aw^T Aw + reg I)^{-1}

  StackedProblem(const PlantModel& plant, double mu, double delta) : pack(plant) {
    s1 = 2 * pack.nx;
    s2 = 4 * pack.nx;
    s3 = 3 * pack.nx;
    n1 = s1 * s1;
    n2 = s2 * s2;
    n3 = s3 * s3;
    total = n1 + n2 + n3;

    auto stacked = [&](const Vector& v) {
      SynthesisVariables nu = pack.unpack(v);
      Vector out;
      out.reserve(total);
      append_flat(out, build_P_of_nu(nu));
      append_flat(out, build_L_of_nu(plant, nu, mu));
      append_flat(out, build_Ltilde_of_nu(plant, nu, delta));
      return out;
    };

    b0 = stacked(Vector(pack.nvar, 0.0));
    amap = Matrix(total, pack.nvar);
    for (std::size_t c = 0; c < pack.nvar; ++c) {
      Vector e(pack.nvar, 0.0);
      e[c] = 1.0;
      Vector col = stacked(e);
      for (std::size_t r = 0; r < total; ++r) amap(r, c) = col[r] - b0[r];
    }

    w.assign(total, 1.0);
    for (std::size_t r = n1 + n2; r < total; ++r) w[r] = 1.0 / (1.0 + delta);

    aw = amap;
    for (std::size_t r = 0; r < total; ++r)
      for (std::size_t c = 0; c < pack.nvar; ++c) aw(r, c) *= w[r];

    Matrix normal = aw.transpose() * aw;
    for (std::size_t i = 0; i < pack.nvar; ++i) normal(i, i) += 1e-12;
    normal_inv = inverse(normal);
  }

  Vector solve_normal(const Vector& weighted_target) const {
    // v = (Aw^T Aw)^{-1} Aw^T (target - b0*w)
    Vector rhs(pack.nvar, 0.0);
    for (std::size_t c = 0; c < pack.nvar; ++c) {
      double s = 0.0;
      for (std::size_t r = 0; r < total; ++r) {
        s += aw(r, c) * (weighted_target[r] - b0[r] * w[r]);
      }
      rhs[c] = s;
    }
    return matvec(normal_inv, rhs);
  }

  Vector image(const Vector& v, bool weighted) const {
    Vector out(total);
    for (std::size_t r = 0; r < total; ++r) {
      double s = b0[r];
      for (std::size_t c = 0; c < pack.nvar; ++c) s += amap(r, c) * v[c];
      out[r] = weighted ? s * w[r] : s;
    }
    return out;
  }

  Vector clip_blocks(const Vector& flat, double f1, double f2, double f3) const {
    Vector out;
    out.reserve(total);
    append_flat(out, psd_clip(reshape(flat, 0, s1), f1));
    append_flat(out, psd_clip(reshape(flat, n1, s2), f2));
    append_flat(out, psd_clip(reshape(flat, n1 + n2, s3), f3));
    return out;
  }
};

bool nu_feasible(const PlantModel& plant, const SynthesisVariables& nu, double mu,
                 double delta, double tol_rel) {
  return check_synthesis_certificate(plant, nu, mu, delta, tol_rel).all();
}

}  // namespace

FeasibilityResult solve_feasibility(const PlantModel& plant, double mu, double delta,
                                    const SolverOptions& options) {
  plant.validate();
  if (!(mu > -1.0)) fail("invalid_argument", "solve_feasibility: mu must exceed -1");
  if (!(delta >= 1.0)) fail("invalid_argument", "solve_feasibility: delta must be >= 1");
  if (options.max_iterations < 1 || options.restarts < 1 || !(options.margin > 0.0) ||
      !(options.tolerance > 0.0)) {
    fail("invalid_argument", "solve_feasibility: invalid solver options");
  }

  StackedProblem prob(plant, mu, delta);
  FeasibilityResult result;
  result.mu = mu;
  result.delta = delta;
  int total_iters = 0;
  const double margin = options.margin;
  const double tol = options.tolerance;

  for (int rs = 0; rs < options.restarts; ++rs) {
    if (options.scheme == ProjectionScheme::alternating) {
      Rng rng(options.seed + static_cast<std::uint64_t>(rs));
      Vector v(prob.pack.nvar);
      for (double& x : v) x = rng.normal() * (0.5 * (rs + 1));
      for (int it = 0; it < options.max_iterations; ++it) {
        ++total_iters;
        Vector z = prob.image(v, false);
        Vector clipped = prob.clip_blocks(z, 10 * margin, margin, margin);
        for (std::size_t r = 0; r < prob.total; ++r) clipped[r] *= prob.w[r];
        v = prob.solve_normal(clipped);
        if (it % 100 == 99 && nu_feasible(plant, prob.pack.unpack(v), mu, delta, tol)) {
          result.feasible = true;
          result.nu = prob.pack.unpack(v);
          result.iterations = total_iters;
          return result;
        }
      }
      if (nu_feasible(plant, prob.pack.unpack(v), mu, delta, tol)) {
        result.feasible = true;
        result.nu = prob.pack.unpack(v);
        result.iterations = total_iters;
        return result;
      }
    } else {
      // Douglas-Rachford on the same pair of projections: reflect through
      // the affine set, clip, and take the half-sum update.
      Rng rng(options.seed + 31 * static_cast<std::uint64_t>(rs));
      Vector v(prob.pack.nvar);
      for (double& x : v) x = rng.normal() * (0.3 + 0.5 * rs);
      Vector zw = prob.image(v, true);
      for (int it = 0; it < options.max_iterations; ++it) {
        ++total_iters;
        v = prob.solve_normal(zw);
        Vector pz = prob.image(v, true);
        if (it % 200 == 0 && nu_feasible(plant, prob.pack.unpack(v), mu, delta, tol)) {
          result.feasible = true;
          result.nu = prob.pack.unpack(v);
          result.iterations = total_iters;
          return result;
        }
        Vector reflected(prob.total);
        for (std::size_t r = 0; r < prob.total; ++r) {
          reflected[r] = (2.0 * pz[r] - zw[r]) / prob.w[r];
        }
        Vector clipped = prob.clip_blocks(reflected, margin, margin, margin);
        for (std::size_t r = 0; r < prob.total; ++r) {
          zw[r] += clipped[r] * prob.w[r] - pz[r];
        }
      }
      if (nu_feasible(plant, prob.pack.unpack(v), mu, delta, tol)) {
        result.feasible = true;
        result.nu = prob.pack.unpack(v);
        result.iterations = total_iters;
        return result;
      }
    }
  }
  result.iterations = total_iters;
  return result;
}

FeasibilityResult feasibility_search(const PlantModel& plant,
                                     const std::vector<double>& mu_grid, double delta_lo,
                                     double delta_hi, double delta_tol,
                                     const SolverOptions& options) {
  if (mu_grid.empty()) fail("invalid_argument", "feasibility_search: empty mu grid");
  if (!(delta_lo >= 1.0) || !(delta_hi > delta_lo) || !(delta_tol > 0.0)) {
    fail("invalid_argument", "feasibility_search: invalid delta range");
  }

  FeasibilityResult best;
  int total_iters = 0;
  for (double mu : mu_grid) {
    FeasibilityResult top = solve_feasibility(plant, mu, delta_hi, options);
    total_iters += top.iterations;
    if (!top.feasible) continue;

    double lo = delta_lo, hi = delta_hi;
    FeasibilityResult at_hi = top;
    while (hi - lo > delta_tol) {
      double mid = 0.5 * (lo + hi);
      FeasibilityResult r = solve_feasibility(plant, mu, mid, options);
      total_iters += r.iterations;
      if (r.feasible) {
        hi = mid;
        at_hi = r;
      } else {
        lo = mid;
      }
    }
    if (!best.feasible || at_hi.delta < best.delta) best = at_hi;
  }
  best.iterations = total_iters;
  return best;
}

}  // namespace ectrl
