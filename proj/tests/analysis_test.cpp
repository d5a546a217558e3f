#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ectrl/analysis.hpp"
#include "ectrl/error.hpp"
#include "support.hpp"

using namespace ectrl;
using ectrl_test::controller_a;
using ectrl_test::controller_b;

TEST_CASE("closed-loop assembly") {
  PlantModel p = batch_reactor();
  auto c = controller_a();
  auto cl = build_closed_loop(p, c);
  REQUIRE(cl.F.rows() == 8);
  CHECK(cl.n_x == 4);
  CHECK(cl.n_c == 4);

  // block structure recomputed with dense products
  Matrix tl = p.A + p.B * c.D * p.C;
  Matrix tr = p.B * c.C;
  Matrix bl = c.B * p.C;
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) {
      CHECK(cl.F(i, j) == doctest::Approx(tl(i, j)).epsilon(1e-15));
      CHECK(cl.F(i, j + 4) == doctest::Approx(tr(i, j)).epsilon(1e-15));
      CHECK(cl.F(i + 4, j) == doctest::Approx(bl(i, j)).epsilon(1e-15));
      CHECK(cl.F(i + 4, j + 4) == c.A(i, j));
    }

  // the projector zeroes the controller rows of F_tilde
  for (std::size_t i = 4; i < 8; ++i)
    for (std::size_t j = 0; j < 8; ++j) CHECK(cl.F_tilde(i, j) == 0.0);
  CHECK(cl.F_tilde == cl.H * cl.F);

  // decoupled blocks when the cross terms vanish
  auto decoupled = c;
  decoupled.B = Matrix(4, 2);
  decoupled.C = Matrix(1, 4);
  decoupled.D = Matrix(1, 2);
  auto cl2 = build_closed_loop(p, decoupled);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) {
      CHECK(cl2.F(i, j) == p.A(i, j));
      CHECK(cl2.F(i, j + 4) == 0.0);
      CHECK(cl2.F(i + 4, j) == 0.0);
    }
}

TEST_CASE("closed loop with the slow-reset controller is a contraction candidate") {
  auto cl = build_closed_loop(batch_reactor(), controller_a());
  CHECK(spectral_radius(cl.F) == doctest::Approx(0.8654944503958779).epsilon(1e-9));
}

TEST_CASE("published reset horizons from the reporting convention") {
  CHECK(min_reset_horizon(55.0, -0.15, 1.0 - 1e-9, 0) == 25);
  CHECK(min_reset_horizon(3000.0, -0.65, 1.0 - 1e-9, 0) == 8);

  // certificate convention shifts the exponent by one
  CHECK(min_reset_horizon(55.0, -0.15, 1.0 - 1e-9, 1) == 26);
  CHECK(min_reset_horizon(1.0, -0.5, 0.9, 0) == 1);

  CHECK_THROWS_AS(min_reset_horizon(0.5, -0.15, 0.99, 0), Error);   // delta < 1
  CHECK_THROWS_AS(min_reset_horizon(55.0, 0.1, 0.99, 0), Error);    // mu >= 0
  CHECK_THROWS_AS(min_reset_horizon(55.0, -1.5, 0.99, 0), Error);   // mu <= -1
  CHECK_THROWS_AS(min_reset_horizon(55.0, -0.15, 1.5, 0), Error);   // eps_bar > 1
  CHECK_THROWS_AS(min_reset_horizon(55.0, -0.15, 0.99, 2), Error);  // bad offset
}

TEST_CASE("hand-solvable certificate search") {
  // F = 0.5 I with H keeping the first coordinate: P = 4 I from the
  // Lyapunov recipe at mu = -0.5, delta = 1, eps = 2, T = 2.
  ClosedLoopMatrix toy;
  toy.F = Matrix{{0.5, 0}, {0, 0.5}};
  toy.H = Matrix{{1, 0}, {0, 0}};
  toy.F_tilde = toy.H * toy.F;
  toy.n_x = 1;
  toy.n_c = 1;

  auto cert = find_certificate(toy, {-0.5});
  REQUIRE(cert.has_value());
  CHECK(cert->mu == -0.5);
  CHECK((cert->P - 4.0 * Matrix::identity(2)).max_abs() < 1e-12);
  CHECK(cert->delta == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(cert->eps_small == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(cert->T == 2);

  auto verdict = check_certificate(toy, *cert, 1e-8);
  CHECK(verdict.all());
}

TEST_CASE("certificate for the slow-reset case-study loop") {
  auto cl = build_closed_loop(batch_reactor(), controller_a());
  auto cert = find_certificate(cl, default_mu_grid());
  REQUIRE(cert.has_value());
  CHECK(cert->T == 26);
  CHECK(cert->mu == doctest::Approx(-0.21275862068965523).epsilon(1e-12));
  CHECK(cert->delta == doctest::Approx(388.193049337).epsilon(1e-6));
  CHECK(cert->eps_small == doctest::Approx(0.6351409779949747).epsilon(1e-9));

  auto verdict = check_certificate(cl, *cert, 1e-8);
  CHECK(verdict.p_positive);
  CHECK(verdict.contraction);
  CHECK(verdict.reset_jump);
  CHECK(verdict.horizon);

  // the lifted one-period map is a strict contraction at the found T
  CHECK(lifted_spectral_radius(cl, cert->T) ==
        doctest::Approx(0.09135317220766706).epsilon(1e-9));
  CHECK(lifted_spectral_radius(cl, cert->T) < 1.0);
  // and at the published horizon as well
  CHECK(lifted_spectral_radius(cl, 25) ==
        doctest::Approx(0.08300702572476597).epsilon(1e-9));
}

TEST_CASE("certificate for the fast-reset case-study loop") {
  auto cl = build_closed_loop(batch_reactor(), controller_b());
  auto cert = find_certificate(cl, default_mu_grid());
  REQUIRE(cert.has_value());
  CHECK(cert->T == 12);
  CHECK(cert->mu == doctest::Approx(-0.44931034482758625).epsilon(1e-12));
  CHECK(cert->delta == doctest::Approx(546.192659822).epsilon(1e-6));
  CHECK(check_certificate(cl, *cert, 1e-8).all());
  CHECK(lifted_spectral_radius(cl, 8) ==
        doctest::Approx(0.14267373623884805).epsilon(1e-9));
}

TEST_CASE("check_certificate rejects broken certificates") {
  auto cl = build_closed_loop(batch_reactor(), controller_a());
  auto cert = find_certificate(cl, default_mu_grid());
  REQUIRE(cert.has_value());

  auto wrong_p = *cert;
  wrong_p.P = Matrix::identity(8);  // loses the contraction inequality
  auto v1 = check_certificate(cl, wrong_p, 1e-8);
  CHECK_FALSE(v1.contraction);

  auto wrong_mu = *cert;
  wrong_mu.mu = -0.9;  // far too optimistic
  CHECK_FALSE(check_certificate(cl, wrong_mu, 1e-8).contraction);

  auto wrong_T = *cert;
  wrong_T.T = 1;
  auto v3 = check_certificate(cl, wrong_T, 1e-8);
  CHECK_FALSE(v3.horizon);  // delta (1+mu)^0 = delta >= 1 > eps_bar

  auto negative = *cert;
  negative.P = -1.0 * negative.P;
  CHECK_FALSE(check_certificate(cl, negative, 1e-8).p_positive);
}

TEST_CASE("no certificate for an expansive loop") {
  ClosedLoopMatrix bad;
  bad.F = Matrix{{1.2, 0}, {0, 0.5}};
  bad.H = Matrix{{1, 0}, {0, 0}};
  bad.F_tilde = bad.H * bad.F;
  bad.n_x = 1;
  bad.n_c = 1;
  CHECK_FALSE(find_certificate(bad, default_mu_grid()).has_value());
}

TEST_CASE("mu grid shape") {
  auto grid = default_mu_grid();
  REQUIRE(grid.size() == 30);
  CHECK(grid.front() == doctest::Approx(-0.99).epsilon(1e-15));
  CHECK(grid.back() == doctest::Approx(-0.01).epsilon(1e-15));
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) CHECK(grid[i] < grid[i + 1]);
  CHECK(default_mu_grid(1).size() == 1);
  CHECK_THROWS_AS(default_mu_grid(0), Error);
}

TEST_CASE("word-length bound for the certified case-study loop") {
  PlantModel p = batch_reactor();
  auto cl = build_closed_loop(p, controller_a());
  auto cert = find_certificate(cl, default_mu_grid());
  REQUIRE(cert.has_value());

  Vector x0_aug = p.x0;
  x0_aug.resize(8, 0.0);
  double bound = word_length_bound(cert->P, cert->eps_small, p.C, x0_aug);
  CHECK(bound == doctest::Approx(21.44760288455744).epsilon(1e-9));
  CHECK(bound >= 10.0);
  CHECK(bound <= 24.0);

  // degenerate input: zero x0 sends the bound to -inf
  Vector zero(8, 0.0);
  CHECK(std::isinf(word_length_bound(cert->P, cert->eps_small, p.C, zero)));
}
