#pragma once

#include <cstddef>

#include "ectrl/linalg.hpp"

namespace ectrl {

/// Discrete-time LTI plant x[k+1] = A x[k] + B u[k], y[k] = C x[k].
struct PlantModel {
  Matrix A;   // n_x x n_x
  Matrix B;   // n_x x n_u
  Matrix C;   // n_y x n_x
  Vector x0;  // initial state

  std::size_t n_x() const { return A.rows(); }
  std::size_t n_u() const { return B.cols(); }
  std::size_t n_y() const { return C.rows(); }

  /// Throws Error("dimension") on shape mismatch or non-finite entries.
  void validate() const;
};

struct PlantState {
  Vector x;
  long k = 0;
};

/// One simulation step: x' = A x + B u.
PlantState step(const PlantState& state, const Vector& u, const PlantModel& model);

/// y = C x.
Vector output(const PlantState& state, const PlantModel& model);

/// The discretized unstable batch-reactor benchmark (4 states, 1 input,
/// 2 outputs), entries stored exactly as printed in the source model.
PlantModel batch_reactor();

}  // namespace ectrl
