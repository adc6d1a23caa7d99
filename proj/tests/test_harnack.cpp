/// @file test_harnack.cpp
/// @brief Margin fields, correction terms, integrated two-point checks, path
/// energy bounds, evolution-identity residuals, and the closed-form scalar
/// inequalities, pinned against hand-computed values.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <stdexcept>

#include "harnacklab/dynamics.hpp"
#include "harnacklab/geometry.hpp"
#include "harnacklab/harnack.hpp"

using namespace harnacklab;

namespace {

const double kLn2 = std::log(2.0);

ScalarField constant_field(const ManifoldGrid& grid, double value, double t) {
  ScalarField f;
  f.values.assign(grid.node_count(), value);
  f.time = t;
  return f;
}

FlowSpec log_heat_spec(double a, double t_end, int outputs) {
  FlowSpec spec;
  spec.equation = Equation::LogHeat;
  spec.a = a;
  spec.metric = MetricSchedule::static_torus();
  spec.t_end = t_end;
  for (int k = 1; k <= outputs; ++k) {
    spec.output_times.push_back(t_end * k / outputs);
  }
  return spec;
}

}  // namespace

TEST_CASE("correction term at hand-computed points") {
  CHECK(correction_term(1.0, 2, kLn2) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(correction_term(-1.0, 2, kLn2) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(correction_term(0.0, 2, 1.0) == 1.0);
  CHECK(correction_term(0.0, 3, 0.5) == 3.0);

  // a*n/(2(1-e^{-at})) with a=-1, n=2 collapses to 1/(e^t - 1) exactly.
  for (int k = 1; k <= 20; ++k) {
    double t = 0.11 * k;
    CHECK(correction_term(-1.0, 2, t) == 1.0 / std::expm1(t));
  }

  // Continuity across a = 0.
  double lim = correction_term(0.0, 3, 0.7);
  CHECK(std::abs(correction_term(1e-7, 3, 0.7) - lim) / lim < 1e-6);
  CHECK(std::abs(correction_term(-1e-7, 3, 0.7) - lim) / lim < 1e-6);

  // Strictly decreasing in t.
  CHECK(correction_term(1.0, 2, 0.2) > correction_term(1.0, 2, 0.4));
  CHECK(correction_term(-1.0, 2, 0.2) > correction_term(-1.0, 2, 0.4));
}

TEST_CASE("admissible constraint floor") {
  CHECK(constraint_floor(0.5) ==
        doctest::Approx(0.4241962407465937).epsilon(1e-14));
  CHECK(constraint_floor(0.5) < 0.5);  // (c0, K) = (0.5, 0.5) is admissible
  // The floor rises without bound as c0 -> 0 and falls to 0 as c0 -> 1.
  CHECK(constraint_floor(0.01) > constraint_floor(0.5));
  CHECK(constraint_floor(0.999) < 1e-2);
  CHECK(constraint_floor(0.999) > 0.0);
}

TEST_CASE("kind factories carry their constants into names and checks") {
  CHECK(kind_name(HarnackKind::trace(1.0)) == "trace");
  CHECK(kind_name(HarnackKind::constrained_trace(-1.0, ConstraintParams{})) ==
        "constrained_trace");
  CHECK(kind_name(HarnackKind::matrix(1.0)) == "matrix");
  CHECK(kind_name(HarnackKind::constrained_matrix(1.0, std::nullopt)) ==
        "constrained_matrix");
  CHECK(kind_name(HarnackKind::interpolated_surface(0.5)) == "interpolated");
  CHECK(kind_name(HarnackKind::gradient_estimate()) == "gradient");
}

TEST_CASE("margins of spatially constant fields equal the correction term") {
  ManifoldGrid torus = build_torus(2, 16, 1.0);
  ScalarField psi = constant_field(torus, 1.7, 0.4);
  ScalarField tq = trace_quantity(torus, psi, 0.4, 1.0, 1.0);
  ScalarField mm = matrix_min_margin(torus, psi, 0.4, 1.0, 1.0);
  for (std::size_t i = 0; i < tq.values.size(); ++i) {
    CHECK(tq.values[i] == correction_term(1.0, 2, 0.4));
    CHECK(mm.values[i] == correction_term(1.0, 1, 0.4));
  }

  // A constant ratio has no gradient, so the constrained margins coincide
  // with the unconstrained ones.
  ScalarField phi = constant_field(torus, 1.7 * 0.6, 0.4);
  ScalarField ctq = constrained_trace_margin(torus, phi, psi, 0.4, 1.0, 1.0);
  ScalarField cmm =
      constrained_matrix_min_margin(torus, phi, psi, 0.4, 1.0, 1.0);
  for (std::size_t i = 0; i < ctq.values.size(); ++i) {
    CHECK(ctq.values[i] == doctest::Approx(tq.values[i]).epsilon(1e-15));
    CHECK(cmm.values[i] == doctest::Approx(mm.values[i]).epsilon(1e-15));
  }
}

TEST_CASE("pair margins reject ratios at or above 1") {
  ManifoldGrid torus = build_torus(1, 16, 1.0);
  ScalarField psi = constant_field(torus, 1.0, 0.3);
  CHECK_THROWS_AS(constrained_trace_margin(torus, psi, psi, 0.3, 1.0, 1.0),
                  std::invalid_argument);
}

TEST_CASE("interpolated quantity adds the curvature and window shifts") {
  ManifoldGrid sphere = build_sphere(16);
  ScalarField f = constant_field(sphere, 0.8, kLn2);
  // lap ln f = 0, so the value is eps*R + 1/(e^t - 1) = 0.5*2 + 1 = 2.
  ScalarField q =
      interpolated_quantity(sphere, f, kLn2, 1.0, 0.5);
  ScalarField qr = interpolated_quantity(sphere, f, kLn2, 1.0, 0.5,
                                         CorrectionWindow::Reciprocal);
  for (std::size_t i = 0; i < q.values.size(); ++i) {
    CHECK(q.values[i] == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(qr.values[i] == doctest::Approx(1.0 + 1.0 / kLn2).epsilon(1e-15));
  }
}

TEST_CASE("gradient margin of a constant field is the window term") {
  ManifoldGrid torus = build_torus(1, 16, 1.0);
  ScalarField f = constant_field(torus, 0.5, kLn2);
  ScalarField m = gradient_margin(torus, f, kLn2, 1.0);
  for (double v : m.values) {
    CHECK(v == doctest::Approx(kLn2).epsilon(1e-14));  // ln 2 / (e^{ln 2}-1)
  }
  ScalarField bad = constant_field(torus, 1.5, kLn2);
  CHECK_THROWS_AS(gradient_margin(torus, bad, kLn2, 1.0),
                  std::invalid_argument);
}

TEST_CASE("verify reduces snapshots at or after t_min") {
  ManifoldGrid grid = build_torus(1, 64, 1.0);
  FlowSpec spec = log_heat_spec(1.0, 0.2, 4);  // outputs 0.05..0.2
  InitParams params;
  Trajectory traj = run(grid, spec, initial_field(grid, params));
  double tol = margin_tolerance(traj, 10.0);
  CHECK(tol == doctest::Approx(10.0 * (1.0 / 4096 + traj.dt_base))
                   .epsilon(1e-12));

  VerificationReport rep = verify(traj, HarnackKind::trace(1.0), 0.01, tol);
  CHECK(rep.records.size() == 4);
  CHECK(rep.overall_pass);
  CHECK(rep.worst_margin >= -tol);

  VerificationReport late = verify(traj, HarnackKind::trace(1.0), 0.12, tol);
  CHECK(late.records.size() == 2);

  // Kind constants must match the run.
  CHECK_THROWS_AS(verify(traj, HarnackKind::trace(-1.0), 0.01, tol),
                  std::invalid_argument);
  CHECK_THROWS_AS(verify(traj, HarnackKind::gradient_estimate(), 0.01, tol),
                  std::invalid_argument);
}

TEST_CASE("constrained kinds with negative coupling need curvature") {
  // Flat geometry cannot supply Ric >= -a*K > 0.
  ManifoldGrid grid = build_torus(1, 64, 1.0);
  FlowSpec spec = log_heat_spec(-1.0, 0.2, 4);
  InitParams params;
  auto [phi0, psi0] = initial_pair(grid, params, 9, 0.5);
  Trajectory traj = run_pair(grid, spec, phi0, psi0, 0.5);
  ConstraintParams cp{0.5, 0.5};
  CHECK_THROWS_AS(
      verify(traj, HarnackKind::constrained_trace(-1.0, cp), 0.01, 1e-3),
      std::invalid_argument);
  // The unconstrained bound allows a < 0 on flat geometry.
  VerificationReport rep =
      verify(traj, HarnackKind::trace(-1.0), 0.01, 1e-3);
  CHECK(rep.overall_pass);
}

TEST_CASE("path energy bound: static closed form and scaling") {
  MetricSchedule torus = MetricSchedule::static_torus();
  CHECK(path_energy_bound(torus, 1.0, kLn2, std::log(4.0)) ==
        doctest::Approx(1.0).epsilon(1e-13));
  // Quadratic in the span.
  CHECK(path_energy_bound(torus, 2.0, kLn2, std::log(4.0)) ==
        doctest::Approx(4.0).epsilon(1e-13));
  // Static sphere of radius 2 scales the weight by r^2 = 4.
  MetricSchedule sph = MetricSchedule::static_sphere(2.0);
  CHECK(path_energy_bound(sph, 1.0, kLn2, std::log(4.0)) ==
        doctest::Approx(4.0).epsilon(1e-13));
}

TEST_CASE("path energy bound on a shrinking sphere matches the minimizer") {
  // The exact minimum of (1/4) int w(t) theta'(t)^2 dt over paths covering a
  // fixed span is span^2 / (4 int dt/w), attained by theta' ~ 1/w.
  MetricSchedule metric = MetricSchedule::eps_ricci_sphere(1.0, 0.5);
  double t1 = 0.1, t2 = 0.5, span = 1.3;
  int m = 4000;
  double inv = 0.0;
  for (int k = 0; k <= m; ++k) {
    double t = t1 + (t2 - t1) * k / m;
    double w = std::exp(t) * metric.r_squared_at(t);
    double weight = (k == 0 || k == m) ? 0.5 : 1.0;
    inv += weight / w;
  }
  inv *= (t2 - t1) / m;
  double exact = span * span / (4.0 * inv);
  double bound = path_energy_bound(metric, span, t1, t2);
  CHECK(bound == doctest::Approx(exact).epsilon(1e-6));
  CHECK(bound >= exact - 1e-9);  // an upper bound of the infimum
}

TEST_CASE("integrated check on homogeneous data reduces to the log ratio") {
  ManifoldGrid grid = build_torus(1, 64, 1.0);
  FlowSpec spec = log_heat_spec(1.0, std::log(4.0), 1);
  spec.output_times = {0.1, kLn2, std::log(4.0)};
  Trajectory traj = run(grid, spec, constant_field(grid, std::exp(0.5), 0.0));

  PathCheckResult res = integrated_check(traj, 5, kLn2, 5, std::log(4.0), 1e-9);
  // ln psi(t) = e^t * 0.5, so the weighted difference vanishes; the distance
  // is zero, leaving rhs = (n/2) ln((1-e^{-t2})/(1-e^{-t1})) = 0.5 ln(3/2).
  CHECK(res.distance == 0.0);
  CHECK(std::abs(res.lhs) < 1e-10);
  CHECK(res.rhs == doctest::Approx(0.5 * std::log(1.5)).epsilon(1e-10));
  CHECK(res.satisfied);

  // Different nodes pick up the distance term a d^2/(4 (e^{a t2}-e^{a t1})).
  PathCheckResult far = integrated_check(traj, 0, kLn2, 32, std::log(4.0), 1e-9);
  CHECK(far.distance == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(far.rhs == doctest::Approx(0.25 * 0.25 / 2.0 + 0.5 * std::log(1.5))
                       .epsilon(1e-10));

  CHECK_THROWS_AS(integrated_check(traj, 0, 0.5, 3, 0.2, 1e-9),
                  std::invalid_argument);  // t1 < t2 required
  CHECK_THROWS_AS(integrated_check(traj, 0, 0.05, 3, 0.2, 1e-9),
                  std::invalid_argument);  // t1 below the snapshot range
}

TEST_CASE("evolution residuals vanish on spatially constant pairs") {
  ManifoldGrid grid = build_torus(1, 32, 1.0);
  FlowSpec spec = log_heat_spec(1.0, 0.3, 6);
  ScalarField psi0 = constant_field(grid, 1.0, 0.0);
  ScalarField phi0 = constant_field(grid, 0.6, 0.0);
  Trajectory traj = run_pair(grid, spec, phi0, psi0, std::nullopt);
  CHECK(evolution_residual(EvolutionIdentity::ConstrainedTrace, traj) <= 1e-14);
  CHECK(evolution_residual(EvolutionIdentity::ConstrainedMatrix, traj) <=
        1e-14);

  CHECK_THROWS_AS(evolution_residual(EvolutionIdentity::InterpolatedQuantity,
                                     traj),
                  std::invalid_argument);  // wrong geometry/equation
}

TEST_CASE("evolution residual needs at least three snapshots") {
  ManifoldGrid grid = build_torus(1, 32, 1.0);
  FlowSpec spec = log_heat_spec(1.0, 0.3, 2);
  Trajectory traj = run_pair(grid, spec, constant_field(grid, 0.6, 0.0),
                             constant_field(grid, 1.0, 0.0), std::nullopt);
  CHECK_THROWS_AS(evolution_residual(EvolutionIdentity::ConstrainedTrace, traj),
                  std::invalid_argument);
}

TEST_CASE("scalar claims hold on dense grids") {
  ScalarClaimsReport rep = scalar_claims_check(10000);
  CHECK(rep.all_hold);
  REQUIRE(rep.claims.size() == 5);
  CHECK(rep.claims[0].name == "ratio_gap_positive");
  CHECK(rep.claims[1].name == "log_factor_negative");
  CHECK(rep.claims[2].name == "window_weight_positive");
  CHECK(rep.claims[3].name == "window_sharper");
  CHECK(rep.claims[4].name == "admissible_floor");
  for (const ScalarClaim& claim : rep.claims) {
    CHECK(claim.checked >= 10000);
    CHECK(claim.violations == 0);
  }
}
