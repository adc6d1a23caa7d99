#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "harnacklab/geometry.hpp"

namespace harnacklab {

enum class Equation { LogHeat, LogSobolevEps, LogSobolev };

enum class MetricKind { StaticTorus, StaticSphere, EpsRicciSphere, RicciSphere };

/// Homothetic metric scale schedule r^2(t). The round sphere under the
/// epsilon-scaled curvature flow shrinks as r^2(t) = r0^2 - 2*eps*t and under
/// the unscaled flow as r^2(t) = r0^2 - 2t; static schedules are constant.
/// The flat torus keeps scale 1.
class MetricSchedule {
 public:
  static MetricSchedule static_torus();
  static MetricSchedule static_sphere(double r0);
  static MetricSchedule eps_ricci_sphere(double r0, double epsilon);
  static MetricSchedule ricci_sphere(double r0);

  MetricKind kind() const { return kind_; }
  double epsilon() const { return epsilon_; }
  double r0_squared() const { return r0_squared_; }
  bool is_sphere() const { return kind_ != MetricKind::StaticTorus; }
  bool is_static() const;

  /// First time at which r^2 reaches zero; +infinity for static schedules.
  double horizon() const;

  /// r^2 at time t. Throws std::domain_error for t < 0 or t at or beyond
  /// the horizon.
  double r_squared_at(double t) const;

 private:
  MetricSchedule() = default;
  MetricKind kind_ = MetricKind::StaticTorus;
  double r0_squared_ = 1.0;
  double epsilon_ = 0.0;
};

/// Everything that fixes one initial-value problem except the initial data:
/// which nonlinearity runs, its coupling constants, the metric schedule, the
/// step-size safety factor and the requested snapshot times.
struct FlowSpec {
  Equation equation = Equation::LogHeat;
  double a = 1.0;        // log-heat coupling; must be nonzero for LogHeat
  double epsilon = 0.0;  // curvature coupling for LogSobolevEps
  MetricSchedule metric = MetricSchedule::static_torus();
  double dt_safety = 0.25;
  double t_end = 1.0;
  std::vector<double> output_times;
};

/// Integration failure at a specific node and time (positivity loss, ratio
/// bound violation, non-positive field fed to the nonlinearity).
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, std::size_t node, double time);
  std::size_t node() const { return node_; }
  double time() const { return time_; }

 private:
  std::size_t node_;
  double time_;
};

/// Recorded state at one output time. For pair runs `field` is the dominating
/// solution psi and `partner` the dominated one phi.
struct Snapshot {
  double time = 0.0;
  double r_squared = 1.0;
  ScalarField field;
  std::optional<ScalarField> partner;
};

struct Trajectory {
  ManifoldGrid grid;
  FlowSpec spec;
  std::vector<Snapshot> snapshots;
  double dt_base = 0.0;           // uniform base step the run was planned with
  std::optional<double> c0;       // pair ratio floor, when one was enforced

  bool is_pair() const {
    return !snapshots.empty() && snapshots.front().partner.has_value();
  }
};

/// Seeded initial-data parameters. The log of the initial field is a
/// trigonometric polynomial with modes up to max_freq and coefficient
/// l1-norm equal to amplitude, shifted down by offset.
struct InitParams {
  std::uint64_t seed = 1;
  int max_freq = 3;
  double amplitude = 0.5;
  double offset = 0.0;
};

/// r^2 at time t under the flow's metric schedule.
double metric_schedule(const FlowSpec& spec, double t);

/// Validates cross-field consistency of (grid, spec) for a full run:
/// equation/metric/grid pairing, nonzero a for LogHeat, epsilon match,
/// horizon clearance of t_end, sane dt_safety and output times.
/// Throws std::invalid_argument with a diagnostic on the first violation.
void validate_for_run(const ManifoldGrid& grid, const FlowSpec& spec);

/// Largest stable step for the explicit scheme over [0, t_end]:
/// dt_safety * h^2 * r^2_min / (2 * dim), with coordinate spacing h and the
/// smallest metric scale reached by t_end (1 on the torus).
double stable_dt(const ManifoldGrid& grid, const FlowSpec& spec);

/// Right-hand side of the flow at time t:
///   LogHeat:       lap(w) + a * w * ln w
///   LogSobolevEps: lap(w) - w * ln w + eps * R(t) * w
///   LogSobolev:    lap(w) - w * ln w
/// Throws SolverError if the field is anywhere non-positive.
ScalarField rhs(const ManifoldGrid& grid, const FlowSpec& spec,
                const ScalarField& field, double t);

/// One classical fourth-order explicit step from t to t + dt with
/// metric-correct stage times. Enforces the stability precondition and
/// positivity of the result.
ScalarField step(const ManifoldGrid& grid, const FlowSpec& spec,
                 const ScalarField& field, double t, double dt);

/// Integrates from t = 0 and records a snapshot at every requested output
/// time, subdividing each interval uniformly so steps land on the targets
/// exactly. LogSobolev runs additionally enforce max w < 1 per snapshot.
Trajectory run(const ManifoldGrid& grid, const FlowSpec& spec,
               const ScalarField& init);

/// Runs a dominated/dominating pair (phi, psi) with identical steps and
/// monitors the ratio h = phi/psi after every step: h must stay inside
/// (c0, 1) when c0 is given, (0, 1) otherwise, with tolerance 1e-10.
Trajectory run_pair(const ManifoldGrid& grid, const FlowSpec& spec,
                    const ScalarField& phi0, const ScalarField& psi0,
                    std::optional<double> c0);

/// Seeded band-limited log-amplitude field s with sum of absolute mode
/// coefficients equal to amplitude. Torus modes are axis and diagonal waves;
/// sphere modes are cos(k*theta), smooth across the poles.
ScalarField random_log_field(const ManifoldGrid& grid, std::uint64_t seed,
                             int max_freq, double amplitude);

/// exp(s - offset) with s drawn as in random_log_field.
ScalarField initial_field(const ManifoldGrid& grid, const InitParams& params);

/// Seeded pair (phi0, psi0): psi0 = exp(s), phi0 = psi0 * h0 with the ratio
/// field h0 = c0 + (1 - c0) * (0.1 + 0.8 * sigma), sigma in [0, 1] built from
/// seed2, so h0 is bounded away from both ends of (c0, 1).
std::pair<ScalarField, ScalarField> initial_pair(const ManifoldGrid& grid,
                                                 const InitParams& params,
                                                 std::uint64_t seed2,
                                                 std::optional<double> c0);

}  // namespace harnacklab
