#pragma once

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <vector>

namespace ectrl {

using Vector = std::vector<double>;

/// Dense row-major matrix of doubles. Small fixed-cost control problems
/// only; nothing here is tuned for large dimensions.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  const double& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  Matrix transpose() const;

  /// Copies `m` into this matrix with top-left corner at (i0, j0).
  void set_block(std::size_t i0, std::size_t j0, const Matrix& m);

  /// Extracts the r x c submatrix with top-left corner at (i0, j0).
  Matrix block(std::size_t i0, std::size_t j0, std::size_t r, std::size_t c) const;

  double max_abs() const;
  double norm_fro() const;

  bool all_finite() const;

  bool operator==(const Matrix& other) const;

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<double> data_;
};

Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a);
Matrix operator*(const Matrix& a, const Matrix& b);
Matrix operator*(double s, const Matrix& a);
Matrix operator*(const Matrix& a, double s);

Vector matvec(const Matrix& a, const Vector& x);
Vector vec_add(const Vector& a, const Vector& b);
Vector vec_scale(double s, const Vector& a);
double norm2(const Vector& v);
double dot(const Vector& a, const Vector& b);

/// [a b] side by side; both must have the same row count.
Matrix hstack(const Matrix& a, const Matrix& b);
/// a stacked on top of b; both must have the same column count.
Matrix vstack(const Matrix& a, const Matrix& b);
/// (s + s^T)/2.
Matrix symmetrize(const Matrix& s);
/// Kronecker product a (x) b.
Matrix kron(const Matrix& a, const Matrix& b);

/// Solves a x = b by LU factorization with partial pivoting.
/// Throws Error("singular") when a pivot collapses.
Vector lu_solve(const Matrix& a, const Vector& b);
Matrix lu_solve(const Matrix& a, const Matrix& b);
Matrix inverse(const Matrix& a);

/// All eigenvalues of a general square matrix (Hessenberg reduction
/// followed by the implicitly shifted QR iteration).
std::vector<std::complex<double>> eigenvalues(const Matrix& m);

/// max |lambda_i(m)|.
double spectral_radius(const Matrix& m);

struct SymEig {
  Vector values;   // ascending
  Matrix vectors;  // orthonormal columns, same order as values
};

/// Eigendecomposition of a symmetric matrix (cyclic Jacobi).
SymEig sym_eig(const Matrix& s);

double min_eig_sym(const Matrix& s);
double max_eig_sym(const Matrix& s);

/// Lower-triangular Cholesky factor of a symmetric positive definite
/// matrix; throws Error("not_positive_definite") otherwise.
Matrix cholesky(const Matrix& s);

/// Solves F^T P F - rho P = -Q for symmetric P via the Kronecker
/// vectorization of the Stein equation. Q must be symmetric; rho > 0.
Matrix solve_discrete_lyapunov(const Matrix& f, const Matrix& q, double rho);

/// Largest generalized eigenvalue of (m, p): max lambda with
/// m v = lambda p v, for symmetric m and symmetric positive definite p.
double max_gen_eig(const Matrix& m, const Matrix& p);

struct Svd {
  Matrix u;                // orthonormal columns
  Vector singular_values;  // descending, non-negative
  Matrix v;                // orthonormal columns
};

/// Thin singular value decomposition (one-sided Jacobi): m = u S v^T.
Svd svd(const Matrix& m);

}  // namespace ectrl
