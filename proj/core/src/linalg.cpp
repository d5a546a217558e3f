#include "ectrl/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ectrl/error.hpp"

namespace ectrl {

namespace {

void require(bool cond, const char* code, const char* msg) {
  if (!cond) fail(code, msg);
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    fail("dimension", std::string(what) + ": shape mismatch");
  }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ ? rows.begin()->size() : 0;
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    require(r.size() == cols_, "dimension", "ragged initializer list");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::transpose() const {
  Matrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

void Matrix::set_block(std::size_t i0, std::size_t j0, const Matrix& m) {
  require(i0 + m.rows() <= rows_ && j0 + m.cols() <= cols_, "dimension",
          "set_block out of range");
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) (*this)(i0 + i, j0 + j) = m(i, j);
}

Matrix Matrix::block(std::size_t i0, std::size_t j0, std::size_t r, std::size_t c) const {
  require(i0 + r <= rows_ && j0 + c <= cols_, "dimension", "block out of range");
  Matrix out(r, c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out(i, j) = (*this)(i0 + i, j0 + j);
  return out;
}

double Matrix::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

double Matrix::norm_fro() const {
  double s = 0.0;
  for (double v : data_) s += v * v;
  return std::sqrt(s);
}

bool Matrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

bool Matrix::operator==(const Matrix& other) const {
  return rows_ == other.rows_ && cols_ == other.cols_ && data_ == other.data_;
}

Matrix operator+(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "operator+");
  Matrix out = a;
  for (std::size_t i = 0; i < out.data().size(); ++i) out.data()[i] += b.data()[i];
  return out;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "operator-");
  Matrix out = a;
  for (std::size_t i = 0; i < out.data().size(); ++i) out.data()[i] -= b.data()[i];
  return out;
}

Matrix operator-(const Matrix& a) { return -1.0 * a; }

Matrix operator*(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) fail("dimension", "operator*: inner dimensions differ");
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  }
  return out;
}

Matrix operator*(double s, const Matrix& a) {
  Matrix out = a;
  for (double& v : out.data()) v *= s;
  return out;
}

Matrix operator*(const Matrix& a, double s) { return s * a; }

Vector matvec(const Matrix& a, const Vector& x) {
  if (a.cols() != x.size()) fail("dimension", "matvec: dimensions differ");
  Vector y(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) y[i] += a(i, j) * x[j];
  return y;
}

Vector vec_add(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) fail("dimension", "vec_add: sizes differ");
  Vector out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  return out;
}

Vector vec_scale(double s, const Vector& a) {
  Vector out = a;
  for (double& v : out) v *= s;
  return out;
}

double norm2(const Vector& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double dot(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) fail("dimension", "dot: sizes differ");
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

Matrix hstack(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) fail("dimension", "hstack: row counts differ");
  Matrix out(a.rows(), a.cols() + b.cols());
  out.set_block(0, 0, a);
  out.set_block(0, a.cols(), b);
  return out;
}

Matrix vstack(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) fail("dimension", "vstack: column counts differ");
  Matrix out(a.rows() + b.rows(), a.cols());
  out.set_block(0, 0, a);
  out.set_block(a.rows(), 0, b);
  return out;
}

Matrix symmetrize(const Matrix& s) {
  if (s.rows() != s.cols()) fail("dimension", "symmetrize: matrix not square");
  Matrix out(s.rows(), s.cols());
  for (std::size_t i = 0; i < s.rows(); ++i)
    for (std::size_t j = 0; j < s.cols(); ++j) out(i, j) = 0.5 * (s(i, j) + s(j, i));
  return out;
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) {
      double aij = a(i, j);
      if (aij == 0.0) continue;
      for (std::size_t k = 0; k < b.rows(); ++k)
        for (std::size_t l = 0; l < b.cols(); ++l)
          out(i * b.rows() + k, j * b.cols() + l) = aij * b(k, l);
    }
  return out;
}

// ---------------------------------------------------------------------------
// LU with partial pivoting

namespace {

struct LuFactors {
  Matrix lu;
  std::vector<std::size_t> perm;
};

LuFactors lu_factor(const Matrix& a) {
  require(a.rows() == a.cols(), "dimension", "lu_factor: matrix not square");
  const std::size_t n = a.rows();
  LuFactors f{a, std::vector<std::size_t>(n)};
  std::iota(f.perm.begin(), f.perm.end(), std::size_t{0});
  const double scale = a.max_abs();
  const double tiny = scale * n * std::numeric_limits<double>::epsilon() * 16 +
                      std::numeric_limits<double>::min();
  Matrix& m = f.lu;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(m(i, k)) > std::abs(m(piv, k))) piv = i;
    if (std::abs(m(piv, k)) <= tiny) fail("singular", "lu_factor: singular matrix");
    if (piv != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(m(k, j), m(piv, j));
      std::swap(f.perm[k], f.perm[piv]);
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      m(i, k) /= m(k, k);
      double lik = m(i, k);
      if (lik == 0.0) continue;
      for (std::size_t j = k + 1; j < n; ++j) m(i, j) -= lik * m(k, j);
    }
  }
  return f;
}

Vector lu_apply(const LuFactors& f, const Vector& b) {
  const std::size_t n = f.lu.rows();
  Vector x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = b[f.perm[i]];
  for (std::size_t i = 1; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) x[i] -= f.lu(i, j) * x[j];
  for (std::size_t ii = n; ii-- > 0;) {
    for (std::size_t j = ii + 1; j < n; ++j) x[ii] -= f.lu(ii, j) * x[j];
    x[ii] /= f.lu(ii, ii);
  }
  return x;
}

}  // namespace

Vector lu_solve(const Matrix& a, const Vector& b) {
  if (a.rows() != b.size()) fail("dimension", "lu_solve: rhs size mismatch");
  return lu_apply(lu_factor(a), b);
}

Matrix lu_solve(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) fail("dimension", "lu_solve: rhs shape mismatch");
  LuFactors f = lu_factor(a);
  Matrix x(a.rows(), b.cols());
  Vector col(a.rows());
  for (std::size_t j = 0; j < b.cols(); ++j) {
    for (std::size_t i = 0; i < a.rows(); ++i) col[i] = b(i, j);
    Vector xj = lu_apply(f, col);
    for (std::size_t i = 0; i < a.rows(); ++i) x(i, j) = xj[i];
  }
  return x;
}

Matrix inverse(const Matrix& a) { return lu_solve(a, Matrix::identity(a.rows())); }

// ---------------------------------------------------------------------------
// General eigenvalues: real Hessenberg reduction, then complex shifted QR
// with Givens rotations. Dimensions here are tiny, so the simple O(n^2)
// explicit-shift iteration is plenty.

namespace {

using Cplx = std::complex<double>;

// Householder reduction to upper Hessenberg form (in place).
void hessenberg(Matrix& h) {
  const std::size_t n = h.rows();
  for (std::size_t k = 0; k + 2 < n; ++k) {
    double norm = 0.0;
    for (std::size_t i = k + 1; i < n; ++i) norm += h(i, k) * h(i, k);
    norm = std::sqrt(norm);
    if (norm == 0.0) continue;
    double alpha = h(k + 1, k) >= 0 ? -norm : norm;
    Vector v(n, 0.0);
    v[k + 1] = h(k + 1, k) - alpha;
    for (std::size_t i = k + 2; i < n; ++i) v[i] = h(i, k);
    double vtv = 0.0;
    for (std::size_t i = k + 1; i < n; ++i) vtv += v[i] * v[i];
    if (vtv == 0.0) continue;
    // H := (I - 2 v v^T / v^T v) H (I - 2 v v^T / v^T v)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t i = k + 1; i < n; ++i) s += v[i] * h(i, j);
      s *= 2.0 / vtv;
      for (std::size_t i = k + 1; i < n; ++i) h(i, j) -= s * v[i];
    }
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = k + 1; j < n; ++j) s += h(i, j) * v[j];
      s *= 2.0 / vtv;
      for (std::size_t j = k + 1; j < n; ++j) h(i, j) -= s * v[j];
    }
  }
}

struct GivensC {
  double c;  // real by construction
  Cplx s;
};

// Rotation with G [a; b] = [r; 0] for complex a, b.
GivensC make_givens(Cplx a, Cplx b, Cplx& r) {
  double na = std::abs(a), nb = std::abs(b);
  if (nb == 0.0) {
    r = a;
    return {1.0, Cplx(0.0)};
  }
  if (na == 0.0) {
    r = b;
    return {0.0, Cplx(1.0)};
  }
  double nu = std::hypot(na, nb);
  Cplx alpha = a / na;
  GivensC g{na / nu, alpha * std::conj(b) / nu};
  r = alpha * nu;
  return g;
}

std::pair<Cplx, Cplx> eig2(Cplx a, Cplx b, Cplx c, Cplx d) {
  Cplx tr = a + d;
  Cplx det = a * d - b * c;
  Cplx disc = std::sqrt(tr * tr - 4.0 * det);
  Cplx l1 = 0.5 * (tr + disc);
  Cplx l2 = 0.5 * (tr - disc);
  return {l1, l2};
}

}  // namespace

std::vector<std::complex<double>> eigenvalues(const Matrix& m) {
  require(m.rows() == m.cols(), "dimension", "eigenvalues: matrix not square");
  require(m.all_finite(), "invalid_argument", "eigenvalues: non-finite entries");
  const std::size_t n = m.rows();
  std::vector<Cplx> eig(n);
  if (n == 0) return eig;

  Matrix hr = m;
  hessenberg(hr);
  std::vector<std::vector<Cplx>> h(n, std::vector<Cplx>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) h[i][j] = Cplx(hr(i, j), 0.0);

  const double eps = std::numeric_limits<double>::epsilon();
  long p = static_cast<long>(n) - 1;
  long iter_in_block = 0;
  long total_iter = 0;
  const long max_total = 200 * static_cast<long>(n) + 200;

  while (p >= 0) {
    // deflation scan
    long l = p;
    while (l > 0) {
      double s = std::abs(h[l - 1][l - 1]) + std::abs(h[l][l]);
      if (s == 0.0) s = 1.0;
      if (std::abs(h[l][l - 1]) <= eps * s) {
        h[l][l - 1] = 0.0;
        break;
      }
      --l;
    }
    if (l == p) {
      eig[p] = h[p][p];
      --p;
      iter_in_block = 0;
      continue;
    }
    if (l == p - 1) {
      auto [l1, l2] = eig2(h[p - 1][p - 1], h[p - 1][p], h[p][p - 1], h[p][p]);
      eig[p - 1] = l1;
      eig[p] = l2;
      p -= 2;
      iter_in_block = 0;
      continue;
    }

    if (++total_iter > max_total) fail("numeric", "eigenvalue iteration did not converge");
    ++iter_in_block;

    // Wilkinson shift from the trailing 2x2; occasionally an exceptional
    // shift to break symmetric stalls.
    Cplx shift;
    if (iter_in_block % 13 == 0) {
      shift = Cplx(1.5 * (std::abs(h[p][p - 1]) + std::abs(h[p - 1][p - 2])), 0.0);
    } else {
      auto [l1, l2] = eig2(h[p - 1][p - 1], h[p - 1][p], h[p][p - 1], h[p][p]);
      shift = (std::abs(l1 - h[p][p]) < std::abs(l2 - h[p][p])) ? l1 : l2;
    }

    // QR step on the active block [l, p]: factor H - shift I with Givens
    // rotations, then reapply them from the right and restore the shift.
    for (long i = l; i <= p; ++i) h[i][i] -= shift;
    std::vector<GivensC> rot(static_cast<std::size_t>(p - l));
    for (long k = l; k < p; ++k) {
      Cplx r;
      GivensC g = make_givens(h[k][k], h[k + 1][k], r);
      rot[static_cast<std::size_t>(k - l)] = g;
      h[k][k] = r;
      h[k + 1][k] = 0.0;
      for (long j = k + 1; j <= p; ++j) {
        Cplx t1 = h[k][j], t2 = h[k + 1][j];
        h[k][j] = g.c * t1 + g.s * t2;
        h[k + 1][j] = -std::conj(g.s) * t1 + g.c * t2;
      }
    }
    for (long k = l; k < p; ++k) {
      const GivensC& g = rot[static_cast<std::size_t>(k - l)];
      // After the left sweep the block is upper triangular, so columns k and
      // k+1 are dense down to row k+1: the rotation touches rows l..k+1.
      for (long i = l; i <= k + 1; ++i) {
        Cplx t1 = h[i][k], t2 = h[i][k + 1];
        h[i][k] = g.c * t1 + std::conj(g.s) * t2;
        h[i][k + 1] = -g.s * t1 + g.c * t2;
      }
    }
    for (long i = l; i <= p; ++i) h[i][i] += shift;
  }
  return eig;
}

double spectral_radius(const Matrix& m) {
  double r = 0.0;
  for (const auto& ev : eigenvalues(m)) r = std::max(r, std::abs(ev));
  return r;
}

// ---------------------------------------------------------------------------
// Symmetric eigenproblem: cyclic Jacobi

SymEig sym_eig(const Matrix& sym) {
  require(sym.rows() == sym.cols(), "dimension", "sym_eig: matrix not square");
  const std::size_t n = sym.rows();
  Matrix a = symmetrize(sym);
  Matrix v = Matrix::identity(n);
  const double tol = 1e-14 * (a.norm_fro() + 1e-300);

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += 2.0 * a(i, j) * a(i, j);
    if (std::sqrt(off) <= tol) break;
    if (sweep == 99) fail("numeric", "sym_eig: Jacobi iteration did not converge");

    for (std::size_t pp = 0; pp + 1 < n; ++pp) {
      for (std::size_t q = pp + 1; q < n; ++q) {
        double apq = a(pp, q);
        if (std::abs(apq) <= 1e-300) continue;
        double tau = (a(q, q) - a(pp, pp)) / (2.0 * apq);
        double t = (tau >= 0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        double c = 1.0 / std::sqrt(1.0 + t * t);
        double s = t * c;
        for (std::size_t i = 0; i < n; ++i) {
          double aip = a(i, pp), aiq = a(i, q);
          a(i, pp) = c * aip - s * aiq;
          a(i, q) = s * aip + c * aiq;
        }
        for (std::size_t j = 0; j < n; ++j) {
          double apj = a(pp, j), aqj = a(q, j);
          a(pp, j) = c * apj - s * aqj;
          a(q, j) = s * apj + c * aqj;
        }
        for (std::size_t i = 0; i < n; ++i) {
          double vip = v(i, pp), viq = v(i, q);
          v(i, pp) = c * vip - s * viq;
          v(i, q) = s * vip + c * viq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return a(i, i) < a(j, j); });
  SymEig out;
  out.values.resize(n);
  out.vectors = Matrix(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    out.values[j] = a(order[j], order[j]);
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, j) = v(i, order[j]);
  }
  return out;
}

double min_eig_sym(const Matrix& s) { return sym_eig(s).values.front(); }
double max_eig_sym(const Matrix& s) { return sym_eig(s).values.back(); }

Matrix cholesky(const Matrix& sym) {
  require(sym.rows() == sym.cols(), "dimension", "cholesky: matrix not square");
  const std::size_t n = sym.rows();
  Matrix l(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = sym(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      if (i == j) {
        if (s <= 0.0) fail("not_positive_definite", "cholesky: matrix not positive definite");
        l(i, i) = std::sqrt(s);
      } else {
        l(i, j) = s / l(j, j);
      }
    }
  }
  return l;
}

Matrix solve_discrete_lyapunov(const Matrix& f, const Matrix& q, double rho) {
  require(f.rows() == f.cols(), "dimension", "solve_discrete_lyapunov: F not square");
  require_same_shape(f, q, "solve_discrete_lyapunov");
  require(rho > 0.0, "invalid_argument", "solve_discrete_lyapunov: rho must be positive");
  const std::size_t n = f.rows();
  Matrix ft = f.transpose();
  Matrix big = kron(ft, ft);
  for (std::size_t i = 0; i < n * n; ++i) big(i, i) -= rho;
  // column-major vec: index (i, j) -> i + j*n
  Vector rhs(n * n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) rhs[i + j * n] = -q(i, j);
  Vector sol = lu_solve(big, rhs);
  Matrix p(n, n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) p(i, j) = sol[i + j * n];
  return symmetrize(p);
}

namespace {

// Solves L X = B for lower-triangular L.
Matrix forward_subst(const Matrix& l, const Matrix& b) {
  const std::size_t n = l.rows();
  Matrix x = b;
  for (std::size_t j = 0; j < b.cols(); ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = x(i, j);
      for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * x(k, j);
      x(i, j) = s / l(i, i);
    }
  }
  return x;
}

}  // namespace

double max_gen_eig(const Matrix& m, const Matrix& p) {
  require_same_shape(m, p, "max_gen_eig");
  Matrix l = cholesky(symmetrize(p));
  Matrix w1 = forward_subst(l, symmetrize(m));      // L^{-1} M
  Matrix w = forward_subst(l, w1.transpose());      // L^{-1} M^T L^{-T}, transposed
  return max_eig_sym(symmetrize(w));
}

Svd svd(const Matrix& input) {
  if (input.rows() < input.cols()) {
    Svd t = svd(input.transpose());
    return Svd{t.v, t.singular_values, t.u};
  }
  const std::size_t rows = input.rows(), cols = input.cols();
  Matrix a = input;
  Matrix v = Matrix::identity(cols);

  for (int sweep = 0; sweep < 60; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < cols; ++p) {
      for (std::size_t q = p + 1; q < cols; ++q) {
        double app = 0.0, aqq = 0.0, apq = 0.0;
        for (std::size_t i = 0; i < rows; ++i) {
          app += a(i, p) * a(i, p);
          aqq += a(i, q) * a(i, q);
          apq += a(i, p) * a(i, q);
        }
        if (std::abs(apq) <= 1e-15 * std::sqrt(app * aqq) || apq == 0.0) continue;
        rotated = true;
        double zeta = (aqq - app) / (2.0 * apq);
        double t = (zeta >= 0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        double c = 1.0 / std::sqrt(1.0 + t * t);
        double s = c * t;
        for (std::size_t i = 0; i < rows; ++i) {
          double aip = a(i, p), aiq = a(i, q);
          a(i, p) = c * aip - s * aiq;
          a(i, q) = s * aip + c * aiq;
        }
        for (std::size_t i = 0; i < cols; ++i) {
          double vip = v(i, p), viq = v(i, q);
          v(i, p) = c * vip - s * viq;
          v(i, q) = s * vip + c * viq;
        }
      }
    }
    if (!rotated) break;
    if (sweep == 59) fail("numeric", "svd: Jacobi iteration did not converge");
  }

  Svd out;
  out.singular_values.resize(cols);
  out.u = Matrix(rows, cols);
  std::vector<std::size_t> order(cols);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Vector norms(cols);
  for (std::size_t j = 0; j < cols; ++j) {
    double nj = 0.0;
    for (std::size_t i = 0; i < rows; ++i) nj += a(i, j) * a(i, j);
    norms[j] = std::sqrt(nj);
  }
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return norms[i] > norms[j]; });
  out.v = Matrix(cols, cols);
  for (std::size_t jj = 0; jj < cols; ++jj) {
    std::size_t j = order[jj];
    out.singular_values[jj] = norms[j];
    if (norms[j] > 0.0) {
      for (std::size_t i = 0; i < rows; ++i) out.u(i, jj) = a(i, j) / norms[j];
    } else if (jj < rows) {
      out.u(jj, jj) = 1.0;  // degenerate column; exact rank deficiency
    }
    for (std::size_t i = 0; i < cols; ++i) out.v(i, jj) = v(i, j);
  }
  return out;
}

}  // namespace ectrl
