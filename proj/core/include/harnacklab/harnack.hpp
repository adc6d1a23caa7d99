#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "harnacklab/dynamics.hpp"
#include "harnacklab/geometry.hpp"

namespace harnacklab {

/// Dominated-pair constraint parameters: ratio floor c0 in (0,1) and
/// curvature coupling K. Admissible when K >= constraint_floor(c0); for
/// negative coupling a the geometry must additionally satisfy the tensor
/// bound (min Ricci eigenvalue) >= -a*K.
struct ConstraintParams {
  double c0 = 0.5;
  double K = 0.5;
};

/// Smallest admissible K for a given ratio floor: -ln(c0)/(1-c0^2) - 1/2.
double constraint_floor(double c0);

enum class HarnackFamily {
  Trace,
  ConstrainedTrace,
  Matrix,
  ConstrainedMatrix,
  InterpolatedSurface,
  GradientEstimate,
};

/// Which pointwise bound to verify, together with the constants it needs.
struct HarnackKind {
  HarnackFamily family = HarnackFamily::Trace;
  double a = 1.0;          // trace/matrix families
  double epsilon = 0.0;    // interpolated surface family
  std::optional<ConstraintParams> constraint;

  static HarnackKind trace(double a);
  static HarnackKind constrained_trace(double a,
                                       std::optional<ConstraintParams> p);
  static HarnackKind matrix(double a);
  static HarnackKind constrained_matrix(double a,
                                        std::optional<ConstraintParams> p);
  static HarnackKind interpolated_surface(double epsilon);
  static HarnackKind gradient_estimate();
};

/// Name used in CSV artifacts and reports: trace, constrained_trace, matrix,
/// constrained_matrix, interpolated, gradient.
std::string kind_name(const HarnackKind& kind);

/// Time-dependent additive correction a*n/(2*(1 - e^{-a t})), continuous in
/// a with the a = 0 limit n/(2t). Positive and strictly decreasing in t for
/// every fixed a; evaluated through expm1 so small |a*t| stays accurate.
/// Requires t > 0 and n >= 1.
double correction_term(double a, int n, double t);

/// Margin fields per snapshot; min_margin >= -tolerance means the bound
/// holds at that time.
struct MarginRecord {
  double time = 0.0;
  double min_margin = 0.0;
  std::size_t argmin_index = 0;
  double tolerance = 0.0;
};

struct VerificationReport {
  HarnackKind kind;
  double t_min_used = 0.0;
  std::vector<MarginRecord> records;
  double worst_margin = 0.0;
  double worst_time = 0.0;
  std::size_t worst_index = 0;
  bool overall_pass = false;
};

/// Switches the additive time window of the interpolated and gradient
/// bounds: the exponential window 1/(e^t - 1) is the one under test, the
/// reciprocal window 1/t is the classical comparison it sharpens.
enum class CorrectionWindow { Exponential, Reciprocal };

/// lap(ln psi) + correction_term(a, dim, t) at every node.
ScalarField trace_quantity(const ManifoldGrid& grid, const ScalarField& psi,
                           double t, double r_squared, double a);

/// Trace quantity minus |grad h|^2 / (1 - h^2), h = phi/psi. Throws if
/// h >= 1 anywhere.
ScalarField constrained_trace_margin(const ManifoldGrid& grid,
                                     const ScalarField& phi,
                                     const ScalarField& psi, double t,
                                     double r_squared, double a);

/// Smallest eigenvalue of Hess(ln psi) + (a / (2(1-e^{-at}))) * I.
ScalarField matrix_min_margin(const ManifoldGrid& grid, const ScalarField& psi,
                              double t, double r_squared, double a);

/// Smallest eigenvalue of Hess(ln psi) - grad h (x) grad h / (1-h^2)
/// + (a / (2(1-e^{-at}))) * I.
ScalarField constrained_matrix_min_margin(const ManifoldGrid& grid,
                                          const ScalarField& phi,
                                          const ScalarField& psi, double t,
                                          double r_squared, double a);

/// lap(ln f) + eps * R(t) + window(t) on the sphere.
ScalarField interpolated_quantity(const ManifoldGrid& grid,
                                  const ScalarField& f, double t,
                                  double r_squared, double epsilon,
                                  CorrectionWindow window =
                                      CorrectionWindow::Exponential);

/// u * window(t) - |grad u|^2 with u = -ln f. Throws if f >= 1 anywhere.
ScalarField gradient_margin(const ManifoldGrid& grid, const ScalarField& f,
                            double t, double r_squared,
                            CorrectionWindow window =
                                CorrectionWindow::Exponential);

/// Tolerance model for discrete margins: max(tol_c * (h_phys^2 + dt), 1e-7),
/// with the physical spacing at the initial metric scale and the planned
/// base step of the trajectory.
double margin_tolerance(const Trajectory& traj, double tol_c);

/// Evaluates the margin field of `kind` on every snapshot with
/// time >= t_min and reduces to per-time minima. Also validates that the
/// trajectory's flow actually supports the kind (equation match, pair data
/// present, curvature admissibility for constrained kinds).
VerificationReport verify(const Trajectory& traj, const HarnackKind& kind,
                          double t_min, double tolerance);

/// Two-point integrated bound along the optimal-speed minimal geodesic.
struct PathCheckResult {
  std::size_t x1 = 0;
  std::size_t x2 = 0;
  double t1 = 0.0;
  double t2 = 0.0;
  double distance = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  double tolerance = 0.0;
  bool satisfied = false;
};

/// Verifies the integrated two-point inequality implied by the pointwise
/// bounds: for log-heat runs the exponentially weighted log-ratio bound with
/// distance term a d^2 / (4 (e^{a t2} - e^{a t1})); for the surface runs the
/// path-energy bound with additive term ln((e^{t2}-1)/(e^{t1}-1)). Pair runs
/// subtract the trapezoidal integral of e^{-a t} |grad h|^2/(1-h^2) sampled
/// along the optimal-speed geodesic; single runs use a zero path term.
/// t1 < t2 must both lie within the snapshot range.
PathCheckResult integrated_check(const Trajectory& traj, std::size_t x1,
                                 double t1, std::size_t x2, double t2,
                                 double tolerance);

/// Quarter of the minimal weighted path energy int e^t |gamma'|^2 dt for a
/// path covering `coordinate_span` (metric distance at unit scale) between
/// t1 and t2. Closed form on static schedules; on evolving schedules a
/// golden-section search over monotone speed profiles theta' ~ w(t)^{-sigma},
/// w(t) = e^t r^2(t), which brackets the exact minimizer sigma = 1, so the
/// result is a tight upper bound of the infimum.
double path_energy_bound(const MetricSchedule& metric, double coordinate_span,
                         double t1, double t2);

/// Which discrete evolution identity to residual-check on a trajectory.
enum class EvolutionIdentity {
  ConstrainedTrace,    // flat pair, trace quantity
  ConstrainedMatrix,   // flat pair, full Hessian quantity
  InterpolatedQuantity,  // sphere, lap(ln f) shifted by the curvature term
  GradientQuantity,    // flat, |grad u|^2 - u/(e^t - 1)
};

/// Max-norm residual of the identity over all interior snapshot times,
/// nodes, and components, with the time derivative taken by 3-point
/// differencing of the recorded snapshots. Needs at least three snapshots.
double evolution_residual(EvolutionIdentity identity, const Trajectory& traj);

/// Closed-form scalar inequalities that the pointwise bounds lean on,
/// checked on log-uniform grids (no randomness):
///   1. 1/h - h + 2 h ln h > 0 on (0, 1)
///   2. 1 + 2 ln h / (1 - h^2) < 0 on (0, 1)
///   3. t e^t - e^t + 1 > 0 for t > 0
///   4. 1/(e^t - 1) < 1/t for t > 0
///   5. 2K + 1 + 2 ln h / (1 - h^2) > 0 for admissible (c0, K), h in (c0, 1)
struct ScalarClaim {
  std::string name;
  std::size_t checked = 0;
  std::size_t violations = 0;
  double worst_value = 0.0;  // closest approach to the forbidden region
};

struct ScalarClaimsReport {
  std::vector<ScalarClaim> claims;
  bool all_hold = false;
};

/// samples is the per-claim grid size (claim 5 uses a sqrt(samples) x
/// sqrt(samples) grid in (c0, h)).
ScalarClaimsReport scalar_claims_check(std::size_t samples);

}  // namespace harnacklab
