// Shared fixtures for the test suite: the two case-study controllers used
// throughout (verbatim two-decimal entries, same as the CLI presets) and a
// couple of numeric helpers.
#pragma once

#include <cmath>
#include <string>
#include <utility>

#include "ectrl/controller.hpp"
#include "ectrl/error.hpp"
#include "ectrl/plant.hpp"

namespace ectrl_test {

// Runs f and reports the Error code it threw, "<no-throw>" when it
// returned, or "<wrong-exception-type>"; pairs with CHECK_ERROR_CODE so a
// failure message shows the actual code.
template <class F>
inline std::string error_code_of(F&& f) {
  try {
    std::forward<F>(f)();
  } catch (const ectrl::Error& e) {
    return e.code();
  } catch (...) {
    return "<wrong-exception-type>";
  }
  return "<no-throw>";
}

// Slow-reset case-study controller (stabilizing design, reset horizon 25).
inline ectrl::ControllerRealization controller_a(int T = 25) {
  ectrl::ControllerRealization c;
  c.A = ectrl::Matrix{{0.26, -0.03, -0.29, 0.31},
                      {-0.32, 1.24, 1.40, -3.05},
                      {-0.45, 0.02, 0.87, -0.75},
                      {-0.05, -0.04, 0.72, -0.51}};
  c.B = ectrl::Matrix{{-0.52, -0.03}, {5.46, 1.25}, {2.32, -0.01}, {2.28, -0.08}};
  c.C = ectrl::Matrix{{1.02, -2.65, -2.65, 6.28}};
  c.D = ectrl::Matrix{{-11.3, -4.09}};
  c.T = T;
  return c;
}

// Fast-reset case-study controller (larger gains, reset horizon 8).
inline ectrl::ControllerRealization controller_b(int T = 8) {
  ectrl::ControllerRealization c;
  c.A = ectrl::Matrix{{-0.18, -0.01, -0.77, 0.84},
                      {9.17, 0.43, 13.4, -16.2},
                      {1.24, 0.10, 3.82, -4.22},
                      {1.32, 0.10, 3.47, -3.87}};
  c.B = ectrl::Matrix{{-1.11, -0.01}, {22.8, 0.42}, {7.81, 0.06}, {7.89, 0.06}};
  c.C = ectrl::Matrix{{-19.6, -0.93, -28.8, 34.9}};
  c.D = ectrl::Matrix{{-49.0, -2.33}};
  c.T = T;
  return c;
}

// Double integrator: the small synthesis benchmark plant.
inline ectrl::PlantModel double_integrator() {
  ectrl::PlantModel p;
  p.A = ectrl::Matrix{{1.0, 1.0}, {0.0, 1.0}};
  p.B = ectrl::Matrix{{0.0}, {1.0}};
  p.C = ectrl::Matrix{{1.0, 0.0}};
  p.x0 = {1.0, 0.0};
  return p;
}

inline bool close(double a, double b, double rel_tol) {
  return std::fabs(a - b) <= rel_tol * std::max(1.0, std::max(std::fabs(a), std::fabs(b)));
}

}  // namespace ectrl_test

// Asserts that evaluating expr throws ectrl::Error with the given code.
#define CHECK_ERROR_CODE(expr, expected_code) \
  CHECK(ectrl_test::error_code_of([&] { (void)(expr); }) == std::string(expected_code))
