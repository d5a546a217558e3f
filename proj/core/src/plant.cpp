#include "ectrl/plant.hpp"

#include "ectrl/error.hpp"

namespace ectrl {

void PlantModel::validate() const {
  if (A.rows() == 0 || A.rows() != A.cols()) fail("dimension", "plant: A must be square");
  if (B.rows() != A.rows() || B.cols() == 0) fail("dimension", "plant: B shape mismatch");
  if (C.cols() != A.rows() || C.rows() == 0) fail("dimension", "plant: C shape mismatch");
  if (x0.size() != A.rows()) fail("dimension", "plant: x0 length mismatch");
  if (!A.all_finite() || !B.all_finite() || !C.all_finite()) {
    fail("invalid_argument", "plant: non-finite entries");
  }
  for (double v : x0) {
    if (!std::isfinite(v)) fail("invalid_argument", "plant: non-finite initial state");
  }
}

PlantState step(const PlantState& state, const Vector& u, const PlantModel& model) {
  if (state.x.size() != model.n_x()) fail("dimension", "plant step: state size mismatch");
  if (u.size() != model.n_u()) fail("dimension", "plant step: input size mismatch");
  PlantState next;
  next.x = vec_add(matvec(model.A, state.x), matvec(model.B, u));
  next.k = state.k + 1;
  return next;
}

Vector output(const PlantState& state, const PlantModel& model) {
  if (state.x.size() != model.n_x()) fail("dimension", "plant output: state size mismatch");
  return matvec(model.C, state.x);
}

PlantModel batch_reactor() {
  PlantModel p;
  p.A = Matrix{{1.18, 0.0, 0.51, -0.40},
               {-0.05, 0.66, -0.01, 0.06},
               {0.08, 0.34, 0.56, 0.38},
               {0.0, 0.34, 0.09, 0.85}};
  p.B = Matrix{{0.0}, {0.47}, {0.21}, {0.21}};
  p.C = Matrix{{1.0, 0.0, 1.0, -1.0},
               {0.0, 1.0, 0.0, 0.0}};
  p.x0 = Vector{-6.83, -5.18, -4.05, -3.12};
  p.validate();
  return p;
}

}  // namespace ectrl
