/// @file test_oracles.cpp
/// @brief Closed-form solution family, spatially homogeneous ODE values, PDE
/// defect measurements, and observed-order reporting.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <stdexcept>

#include "harnacklab/harnack.hpp"
#include "harnacklab/oracles.hpp"

using namespace harnacklab;

namespace {
const double kLn2 = std::log(2.0);
}

TEST_CASE("closed-form family at hand-computed points") {
  LogGaussianParams p;
  p.a = 1.0;
  p.n = 1;
  p.C = 0.0;
  LogGaussianEval at0 = log_gaussian(p, {0.0}, kLn2);
  // beta(ln 2) = -(1/2) e^{ln 2} ln|1 - e^{-ln 2}| = ln 2, so w(0) = 2.
  CHECK(at0.ln_value == doctest::Approx(kLn2).epsilon(1e-15));

  p.n = 2;
  LogGaussianEval at = log_gaussian(p, {0.3, -0.2}, kLn2);
  CHECK(at.ln_value ==
        doctest::Approx(-0.5 * 0.13 + 2.0 * kLn2).epsilon(1e-14));
  REQUIRE(at.grad_ln.size() == 2);
  CHECK(at.grad_ln[0] == doctest::Approx(-0.3).epsilon(1e-15));
  CHECK(at.grad_ln[1] == doctest::Approx(0.2).epsilon(1e-15));
  // The frame Hessian is diagonal with the sharp constant on the diagonal.
  CHECK(at.hessian_diag == -correction_term(1.0, 1, kLn2));
  CHECK(at.laplacian_ln == -correction_term(1.0, 2, kLn2));
  CHECK(at.laplacian_ln == doctest::Approx(-2.0).epsilon(1e-15));
}

TEST_CASE("free constant shifts the value but not the derivatives") {
  std::vector<double> x = {0.4, 0.1};
  double t = 0.9;
  LogGaussianParams base;
  base.a = -1.0;
  base.n = 2;
  base.C = 0.0;
  LogGaussianEval ref = log_gaussian(base, x, t);
  for (double c : {-1.0, 1.0}) {
    LogGaussianParams p = base;
    p.C = c;
    LogGaussianEval eval = log_gaussian(p, x, t);
    CHECK(eval.grad_ln == ref.grad_ln);
    CHECK(eval.hessian_diag == ref.hessian_diag);
    CHECK(eval.laplacian_ln == ref.laplacian_ln);
    CHECK(eval.ln_value - ref.ln_value ==
          doctest::Approx(c * std::exp(-t)).epsilon(1e-13));
  }
}

TEST_CASE("closed-form family validates its arguments") {
  LogGaussianParams p;
  p.a = 0.0;
  CHECK_THROWS_AS(log_gaussian(p, {0.0, 0.0}, 0.5), std::invalid_argument);
  p.a = 1.0;
  CHECK_THROWS_AS(log_gaussian(p, {0.0}, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(log_gaussian(p, {0.0, 0.0}, 0.0), std::invalid_argument);
}

TEST_CASE("corrected form solves the equation, the variant misses it") {
  LogGaussianParams p;
  p.a = 1.0;
  p.n = 2;
  p.C = 0.7;  // the defect must not depend on the free constant
  std::vector<std::vector<double>> points = {{0.0, 0.0}, {0.3, -0.2}};
  double corrected =
      pde_residual(p, GaussianForm::Corrected, points, kLn2, 1e-3);
  double variant =
      pde_residual(p, GaussianForm::PrintedVariant, points, kLn2, 1e-3);
  CHECK(corrected <= 1e-8);
  CHECK(variant >= 0.1);
  // Hand value of the variant's defect at (a=1, n=2, t=ln 2): 3/2 - ln 2.
  CHECK(variant == doctest::Approx(1.5 - kLn2).epsilon(1e-6));

  CHECK_THROWS_AS(
      pde_residual(p, GaussianForm::Corrected, points, 1.5e-3, 1e-3),
      std::invalid_argument);  // t must exceed the differencing window
}

TEST_CASE("homogeneous values follow the three growth laws") {
  FlowSpec heat;
  heat.equation = Equation::LogHeat;
  heat.a = -1.0;
  CHECK(homogeneous_log_value(heat, 0.5, 1.0) ==
        doctest::Approx(0.5 * std::exp(-1.0)).epsilon(1e-14));

  FlowSpec norm;
  norm.equation = Equation::LogSobolev;
  norm.metric = MetricSchedule::ricci_sphere(2.0);
  CHECK(homogeneous_log_value(norm, -0.5, 1.0) ==
        doctest::Approx(-0.5 * std::exp(-1.0)).epsilon(1e-14));

  // With epsilon = 0 the surface law reduces to the normalized one.
  FlowSpec surf0;
  surf0.equation = Equation::LogSobolevEps;
  surf0.epsilon = 0.0;
  surf0.metric = MetricSchedule::eps_ricci_sphere(2.0, 0.0);
  CHECK(homogeneous_log_value(surf0, -0.5, 1.0) ==
        doctest::Approx(homogeneous_log_value(norm, -0.5, 1.0))
            .epsilon(1e-13));

  // With epsilon > 0 the curvature source makes the value strictly larger.
  FlowSpec surf;
  surf.equation = Equation::LogSobolevEps;
  surf.epsilon = 0.5;
  surf.metric = MetricSchedule::eps_ricci_sphere(1.0, 0.5);
  CHECK(homogeneous_log_value(surf, -0.5, 0.6) >
        homogeneous_log_value(norm, -0.5, 0.6));

  for (const FlowSpec& spec : {heat, norm, surf}) {
    CHECK(homogeneous_pde_residual(spec, -0.5, 0.5, 1e-4) <= 1e-10);
  }
}

TEST_CASE("observed orders from error ladders") {
  ConvergenceReport clean =
      convergence_order({16, 32, 64}, {1e-2, 2.5e-3, 6.25e-4});
  REQUIRE(clean.orders.size() == 2);
  CHECK(clean.orders[0] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(clean.orders[1] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(clean.monotone);
  CHECK(!clean.exact);
  CHECK(clean.diagnostic.empty());

  ConvergenceReport exact =
      convergence_order({16, 32, 64}, {1e-13, 1e-14, 1e-15});
  CHECK(exact.exact);

  ConvergenceReport bumpy =
      convergence_order({16, 32, 64}, {1e-3, 2e-3, 1e-3});
  CHECK(!bumpy.monotone);
  CHECK(!bumpy.diagnostic.empty());
  for (double order : bumpy.orders) CHECK(std::isnan(order));

  CHECK_THROWS_AS(convergence_order({16}, {1e-3}), std::invalid_argument);
  CHECK_THROWS_AS(convergence_order({16, 32}, {1e-3}),
                  std::invalid_argument);
}
