#include "harnacklab/harnack.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace harnacklab {
namespace {

void require(bool cond, const char* message) {
  if (!cond) throw std::invalid_argument(message);
}

std::vector<double> log_field(const ScalarField& field, const char* what) {
  std::vector<double> out(field.values.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!(field.values[i] > 0.0)) {
      throw std::invalid_argument(std::string(what) +
                                  ": field must be strictly positive");
    }
    out[i] = std::log(field.values[i]);
  }
  return out;
}

/// h = phi/psi, verified to stay strictly below 1 so 1 - h^2 > 0.
std::vector<double> ratio_field(const ScalarField& phi, const ScalarField& psi,
                                const char* what) {
  require(phi.values.size() == psi.values.size(),
          "constrained margin: pair fields must share the grid");
  std::vector<double> h(phi.values.size());
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (!(psi.values[i] > 0.0) || !(phi.values[i] > 0.0)) {
      throw std::invalid_argument(std::string(what) +
                                  ": pair fields must be strictly positive");
    }
    h[i] = phi.values[i] / psi.values[i];
    if (!(h[i] < 1.0)) {
      throw std::invalid_argument(std::string(what) +
                                  ": ratio phi/psi must stay below 1");
    }
  }
  return h;
}

ScalarField as_field(std::vector<double> values, double t) {
  ScalarField f;
  f.values = std::move(values);
  f.time = t;
  return f;
}

double window_value(CorrectionWindow window, double t) {
  require(t > 0.0, "time window needs t > 0");
  if (window == CorrectionWindow::Exponential) return 1.0 / std::expm1(t);
  return 1.0 / t;
}

/// Weights of the 3-point first-derivative stencil on times
/// (t - dm, t, t + dp); exact for quadratics, O(dm*dp) otherwise.
struct TimeWeights {
  double wm, w0, wp;
};

TimeWeights derivative_weights(double dm, double dp) {
  TimeWeights w;
  w.wm = -dp / (dm * (dm + dp));
  w.w0 = (dp - dm) / (dm * dp);
  w.wp = dm / (dp * (dm + dp));
  return w;
}

/// Index of the last snapshot with time <= t (within a small slack).
std::size_t lower_snapshot(const Trajectory& traj, double t) {
  const auto& snaps = traj.snapshots;
  require(!snaps.empty(), "trajectory has no snapshots");
  require(t >= snaps.front().time - 1e-12 && t <= snaps.back().time + 1e-12,
          "query time outside the recorded snapshot range");
  std::size_t lo = 0;
  for (std::size_t k = 0; k < snaps.size(); ++k) {
    if (snaps[k].time <= t + 1e-12) lo = k;
  }
  return lo;
}

/// Point at arc-length ell from p toward q along the minimal coordinate
/// geodesic (shortest wrap on the torus, the theta segment on the sphere).
/// Coordinates are at unit metric scale; ell is in the same units.
std::array<double, 2> point_along(const ManifoldGrid& grid,
                                  const std::array<double, 2>& p,
                                  const std::array<double, 2>& q, double span,
                                  double ell) {
  std::array<double, 2> pos = p;
  if (span <= 0.0) return pos;
  double frac = ell / span;
  if (grid.kind() == GridKind::SphereAxisym) {
    pos[0] = p[0] + frac * (q[0] - p[0]);
    return pos;
  }
  double period = grid.side_length();
  for (int axis = 0; axis < grid.dimension(); ++axis) {
    double delta = q[axis] - p[axis];
    delta -= period * std::round(delta / period);
    pos[axis] = p[axis] + frac * delta;
  }
  return pos;
}

/// Coordinate-level separation matching point_along: wrap distance on the
/// torus, |theta difference| on the sphere. Metric distance is this times
/// the metric scale r.
double coordinate_span(const ManifoldGrid& grid,
                       const std::array<double, 2>& p,
                       const std::array<double, 2>& q) {
  if (grid.kind() == GridKind::SphereAxisym) return std::abs(q[0] - p[0]);
  double period = grid.side_length();
  double sum = 0.0;
  for (int axis = 0; axis < grid.dimension(); ++axis) {
    double delta = std::abs(q[axis] - p[axis]);
    delta = std::min(delta, period - delta);
    sum += delta * delta;
  }
  return std::sqrt(sum);
}

struct PairFields {
  std::vector<double> ln_psi;
  std::vector<double> h;
  std::vector<double> q;  // 1 - h^2
};

PairFields pair_fields(const Snapshot& snap, const char* what) {
  require(snap.partner.has_value(), "constrained check needs a pair run");
  PairFields out;
  out.ln_psi = log_field(snap.field, what);
  ScalarField phi = *snap.partner;
  out.h = ratio_field(phi, snap.field, what);
  out.q.resize(out.h.size());
  for (std::size_t i = 0; i < out.h.size(); ++i) {
    out.q[i] = 1.0 - out.h[i] * out.h[i];
  }
  return out;
}

MarginRecord reduce_margin(const ScalarField& margin, double tolerance) {
  MarginRecord rec;
  rec.time = margin.time;
  rec.tolerance = tolerance;
  rec.min_margin = std::numeric_limits<double>::infinity();
  rec.argmin_index = 0;
  for (std::size_t i = 0; i < margin.values.size(); ++i) {
    if (margin.values[i] < rec.min_margin) {
      rec.min_margin = margin.values[i];
      rec.argmin_index = i;
    }
  }
  return rec;
}

void check_kind_constants(const HarnackKind& kind, const FlowSpec& spec) {
  switch (kind.family) {
    case HarnackFamily::Trace:
    case HarnackFamily::ConstrainedTrace:
    case HarnackFamily::Matrix:
    case HarnackFamily::ConstrainedMatrix:
      require(spec.equation == Equation::LogHeat,
              "trace/matrix bounds apply to log-heat runs");
      require(kind.a == spec.a, "kind coupling a differs from the run");
      break;
    case HarnackFamily::InterpolatedSurface:
      require(spec.equation == Equation::LogSobolevEps,
              "interpolated bound applies to the eps-flow surface runs");
      require(kind.epsilon == spec.epsilon,
              "kind epsilon differs from the run");
      break;
    case HarnackFamily::GradientEstimate:
      require(spec.equation == Equation::LogSobolev,
              "gradient estimate applies to the normalized runs");
      break;
  }
}

bool kind_is_constrained(const HarnackKind& kind) {
  return kind.family == HarnackFamily::ConstrainedTrace ||
         kind.family == HarnackFamily::ConstrainedMatrix;
}

/// Curvature admissibility of the bound on this trajectory's geometry.
/// Trace and matrix kinds want nonnegative curvature (Ricci resp.
/// sectional) for either sign of a; constrained kinds with a < 0 instead
/// want curvature >= -a*K with admissible (c0, K). Both model geometries
/// have parallel Ricci tensor, which the matrix kinds additionally assume.
void check_admissibility(const Trajectory& traj, const HarnackKind& kind) {
  if (kind.family == HarnackFamily::InterpolatedSurface ||
      kind.family == HarnackFamily::GradientEstimate) {
    return;  // geometry is pinned by the equation validation already
  }
  CurvatureInfo curv =
      curvature(traj.grid, traj.spec.metric.r_squared_at(0.0));
  bool matrix_family = kind.family == HarnackFamily::Matrix ||
                       kind.family == HarnackFamily::ConstrainedMatrix;
  double curv_min =
      matrix_family ? curv.sectional_min : curv.ricci_min_eigenvalue;
  if (kind.a > 0.0 || !kind_is_constrained(kind)) {
    require(curv_min >= 0.0, "bound needs nonnegative curvature");
    return;
  }
  require(kind.constraint.has_value(),
          "constrained kind with a < 0 needs constraint parameters");
  const ConstraintParams& p = *kind.constraint;
  require(p.c0 > 0.0 && p.c0 < 1.0, "constraint c0 must lie in (0, 1)");
  require(p.K >= constraint_floor(p.c0),
          "constraint K below the admissible floor for this c0");
  require(curv_min >= -kind.a * p.K,
          "curvature lower bound -a*K exceeds the geometry's curvature");
  require(traj.c0.has_value() && *traj.c0 >= p.c0 - 1e-12,
          "trajectory ratio floor is below the constraint's c0");
}

ScalarField margin_field(const Trajectory& traj, const HarnackKind& kind,
                         const Snapshot& snap) {
  const ManifoldGrid& grid = traj.grid;
  double t = snap.time;
  double r2 = snap.r_squared;
  switch (kind.family) {
    case HarnackFamily::Trace:
      return trace_quantity(grid, snap.field, t, r2, kind.a);
    case HarnackFamily::ConstrainedTrace:
      require(snap.partner.has_value(), "constrained check needs a pair run");
      return constrained_trace_margin(grid, *snap.partner, snap.field, t, r2,
                                      kind.a);
    case HarnackFamily::Matrix:
      return matrix_min_margin(grid, snap.field, t, r2, kind.a);
    case HarnackFamily::ConstrainedMatrix:
      require(snap.partner.has_value(), "constrained check needs a pair run");
      return constrained_matrix_min_margin(grid, *snap.partner, snap.field, t,
                                           r2, kind.a);
    case HarnackFamily::InterpolatedSurface:
      return interpolated_quantity(grid, snap.field, t, r2, kind.epsilon);
    case HarnackFamily::GradientEstimate:
      return gradient_margin(grid, snap.field, t, r2);
  }
  throw std::logic_error("unreachable margin family");
}

/// Frame-component norm |S|^2 = sum_ij S_ij^2 of a symmetric 2x2 (or 1x1).
double sym_norm_sq(int dim, double xx, double xy, double yy) {
  if (dim == 1) return xx * xx;
  return xx * xx + 2.0 * xy * xy + yy * yy;
}

double max_abs_diff(const std::vector<double>& lhs,
                    const std::vector<double>& rhs) {
  double worst = 0.0;
  for (std::size_t i = 0; i < lhs.size(); ++i) {
    worst = std::max(worst, std::abs(lhs[i] - rhs[i]));
  }
  return worst;
}

}  // namespace

double constraint_floor(double c0) {
  require(c0 > 0.0 && c0 < 1.0, "constraint c0 must lie in (0, 1)");
  // -ln(c0)/(1 - c0^2) - 1/2 through 1 - c0, which subtracts exactly for
  // c0 >= 0.5, so the floor stays accurate as c0 -> 1 where it tends to 0.
  double em = 1.0 - c0;
  return -std::log1p(-em) / (em * (2.0 - em)) - 0.5;
}

HarnackKind HarnackKind::trace(double a) {
  HarnackKind k;
  k.family = HarnackFamily::Trace;
  k.a = a;
  return k;
}

HarnackKind HarnackKind::constrained_trace(double a,
                                           std::optional<ConstraintParams> p) {
  HarnackKind k;
  k.family = HarnackFamily::ConstrainedTrace;
  k.a = a;
  k.constraint = p;
  return k;
}

HarnackKind HarnackKind::matrix(double a) {
  HarnackKind k;
  k.family = HarnackFamily::Matrix;
  k.a = a;
  return k;
}

HarnackKind HarnackKind::constrained_matrix(
    double a, std::optional<ConstraintParams> p) {
  HarnackKind k;
  k.family = HarnackFamily::ConstrainedMatrix;
  k.a = a;
  k.constraint = p;
  return k;
}

HarnackKind HarnackKind::interpolated_surface(double epsilon) {
  HarnackKind k;
  k.family = HarnackFamily::InterpolatedSurface;
  k.epsilon = epsilon;
  return k;
}

HarnackKind HarnackKind::gradient_estimate() {
  HarnackKind k;
  k.family = HarnackFamily::GradientEstimate;
  return k;
}

std::string kind_name(const HarnackKind& kind) {
  switch (kind.family) {
    case HarnackFamily::Trace:
      return "trace";
    case HarnackFamily::ConstrainedTrace:
      return "constrained_trace";
    case HarnackFamily::Matrix:
      return "matrix";
    case HarnackFamily::ConstrainedMatrix:
      return "constrained_matrix";
    case HarnackFamily::InterpolatedSurface:
      return "interpolated";
    case HarnackFamily::GradientEstimate:
      return "gradient";
  }
  return "unknown";
}

double correction_term(double a, int n, double t) {
  require(n >= 1, "correction term needs n >= 1");
  require(t > 0.0, "correction term needs t > 0");
  if (a == 0.0) return n / (2.0 * t);
  // 1 - e^{-a t} = -expm1(-a t); keeps full precision when |a t| is tiny.
  double denom = -std::expm1(-a * t);
  return a * n / (2.0 * denom);
}

ScalarField trace_quantity(const ManifoldGrid& grid, const ScalarField& psi,
                           double t, double r_squared, double a) {
  std::vector<double> ln_psi = log_field(psi, "trace quantity");
  ScalarField lap =
      laplacian(grid, as_field(std::move(ln_psi), t), r_squared);
  double corr = correction_term(a, grid.dimension(), t);
  for (double& v : lap.values) v += corr;
  lap.time = t;
  return lap;
}

ScalarField constrained_trace_margin(const ManifoldGrid& grid,
                                     const ScalarField& phi,
                                     const ScalarField& psi, double t,
                                     double r_squared, double a) {
  Snapshot snap;
  snap.time = t;
  snap.r_squared = r_squared;
  snap.field = psi;
  snap.partner = phi;
  PairFields pf = pair_fields(snap, "constrained trace margin");
  ScalarField lap =
      laplacian(grid, as_field(std::move(pf.ln_psi), t), r_squared);
  ScalarField h_field = as_field(pf.h, t);
  ScalarField gh2 = gradient_norm_sq(grid, h_field, r_squared);
  double corr = correction_term(a, grid.dimension(), t);
  for (std::size_t i = 0; i < lap.values.size(); ++i) {
    lap.values[i] += corr - gh2.values[i] / pf.q[i];
  }
  lap.time = t;
  return lap;
}

ScalarField matrix_min_margin(const ManifoldGrid& grid, const ScalarField& psi,
                              double t, double r_squared, double a) {
  std::vector<double> ln_psi = log_field(psi, "matrix margin");
  FrameHessian hess =
      hessian_frame(grid, as_field(std::move(ln_psi), t), r_squared);
  double per_direction = correction_term(a, 1, t);
  ScalarField out = min_eigenvalue(hess, per_direction);
  out.time = t;
  return out;
}

ScalarField constrained_matrix_min_margin(const ManifoldGrid& grid,
                                          const ScalarField& phi,
                                          const ScalarField& psi, double t,
                                          double r_squared, double a) {
  Snapshot snap;
  snap.time = t;
  snap.r_squared = r_squared;
  snap.field = psi;
  snap.partner = phi;
  PairFields pf = pair_fields(snap, "constrained matrix margin");
  FrameHessian hess =
      hessian_frame(grid, as_field(std::move(pf.ln_psi), t), r_squared);
  ScalarField h_field = as_field(pf.h, t);
  FrameGradient gh = gradient(grid, h_field, r_squared);
  for (std::size_t i = 0; i < hess.xx.size(); ++i) {
    double inv_q = 1.0 / pf.q[i];
    double g0 = gh.comp0[i];
    hess.xx[i] -= g0 * g0 * inv_q;
    if (hess.dim == 2) {
      double g1 = gh.comp1[i];
      hess.xy[i] -= g0 * g1 * inv_q;
      hess.yy[i] -= g1 * g1 * inv_q;
    }
  }
  double per_direction = correction_term(a, 1, t);
  ScalarField out = min_eigenvalue(hess, per_direction);
  out.time = t;
  return out;
}

ScalarField interpolated_quantity(const ManifoldGrid& grid,
                                  const ScalarField& f, double t,
                                  double r_squared, double epsilon,
                                  CorrectionWindow window) {
  require(grid.kind() == GridKind::SphereAxisym,
          "interpolated quantity lives on the sphere");
  require(epsilon >= 0.0, "interpolated quantity needs epsilon >= 0");
  std::vector<double> ln_f = log_field(f, "interpolated quantity");
  ScalarField lap = laplacian(grid, as_field(std::move(ln_f), t), r_squared);
  double shift = epsilon * curvature(grid, r_squared).scalar +
                 window_value(window, t);
  for (double& v : lap.values) v += shift;
  lap.time = t;
  return lap;
}

ScalarField gradient_margin(const ManifoldGrid& grid, const ScalarField& f,
                            double t, double r_squared,
                            CorrectionWindow window) {
  std::vector<double> u(f.values.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (!(f.values[i] > 0.0) || !(f.values[i] < 1.0)) {
      throw std::invalid_argument(
          "gradient margin: field must stay inside (0, 1)");
    }
    u[i] = -std::log(f.values[i]);
  }
  ScalarField u_field = as_field(std::move(u), t);
  ScalarField gu2 = gradient_norm_sq(grid, u_field, r_squared);
  double w = window_value(window, t);
  ScalarField out = u_field;
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    out.values[i] = u_field.values[i] * w - gu2.values[i];
  }
  out.time = t;
  return out;
}

double margin_tolerance(const Trajectory& traj, double tol_c) {
  require(tol_c > 0.0, "tolerance scale must be positive");
  double h = traj.grid.spacing();
  if (traj.grid.kind() == GridKind::SphereAxisym) {
    h *= std::sqrt(traj.spec.metric.r0_squared());
  }
  double tol = tol_c * (h * h + traj.dt_base);
  return std::max(tol, 1e-7);
}

VerificationReport verify(const Trajectory& traj, const HarnackKind& kind,
                          double t_min, double tolerance) {
  require(t_min >= 0.0, "t_min must be nonnegative");
  require(tolerance >= 0.0, "tolerance must be nonnegative");
  check_kind_constants(kind, traj.spec);
  if (kind_is_constrained(kind)) {
    require(traj.is_pair(), "constrained kinds need a pair trajectory");
  }
  check_admissibility(traj, kind);

  VerificationReport report;
  report.kind = kind;
  report.t_min_used = t_min;
  report.worst_margin = std::numeric_limits<double>::infinity();
  for (const Snapshot& snap : traj.snapshots) {
    if (snap.time < t_min - 1e-15) continue;
    ScalarField margin = margin_field(traj, kind, snap);
    MarginRecord rec = reduce_margin(margin, tolerance);
    if (rec.min_margin < report.worst_margin) {
      report.worst_margin = rec.min_margin;
      report.worst_time = rec.time;
      report.worst_index = rec.argmin_index;
    }
    report.records.push_back(rec);
  }
  require(!report.records.empty(),
          "no snapshots at or after t_min; nothing to verify");
  report.overall_pass = report.worst_margin >= -tolerance;
  return report;
}

double path_energy_bound(const MetricSchedule& metric, double coordinate_span,
                         double t1, double t2) {
  require(coordinate_span >= 0.0, "path energy needs a nonnegative span");
  require(t1 < t2, "path energy needs t1 < t2");
  require(t1 >= 0.0, "path energy needs t1 >= 0");
  double span2 = coordinate_span * coordinate_span;
  if (metric.is_static()) {
    double r2 = metric.r0_squared();
    // Quarter of span^2 r^2 / int e^{-t} dt with the optimal profile.
    double denom = std::exp(-t1) - std::exp(-t2);
    return 0.25 * span2 * r2 / denom;
  }
  // Evolving scale: minimize A(sigma) = span^2/4 * int w^{1-2 sigma} dt /
  // (int w^{-sigma} dt)^2 over speed profiles theta' ~ w^{-sigma} with
  // w(t) = e^t r^2(t). Simpson quadrature; unimodal in sigma.
  const int m = 256;  // even
  double dt = (t2 - t1) / m;
  auto w_at = [&](int k) {
    double t = t1 + k * dt;
    return std::exp(t) * metric.r_squared_at(t);
  };
  std::vector<double> w(m + 1);
  for (int k = 0; k <= m; ++k) w[k] = w_at(k);
  auto action = [&](double sigma) {
    double num = 0.0;
    double den = 0.0;
    for (int k = 0; k <= m; ++k) {
      double coef = (k == 0 || k == m) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
      num += coef * std::pow(w[k], 1.0 - 2.0 * sigma);
      den += coef * std::pow(w[k], -sigma);
    }
    num *= dt / 3.0;
    den *= dt / 3.0;
    return 0.25 * span2 * num / (den * den);
  };
  // Golden-section search on [0.25, 4]; the exact optimum sigma = 1 is
  // interior, so the bracket never binds.
  double lo = 0.25, hi = 4.0;
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - phi * (hi - lo);
  double x2 = hi - (1.0 - phi) * (hi - lo);
  double f1 = action(x1);
  double f2 = action(x2);
  for (int it = 0; it < 80; ++it) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - phi * (hi - lo);
      f1 = action(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = hi - (1.0 - phi) * (hi - lo);
      f2 = action(x2);
    }
  }
  return std::min(f1, f2);
}

PathCheckResult integrated_check(const Trajectory& traj, std::size_t x1,
                                 double t1, std::size_t x2, double t2,
                                 double tolerance) {
  const ManifoldGrid& grid = traj.grid;
  require(x1 < grid.node_count() && x2 < grid.node_count(),
          "integrated check: node index out of range");
  require(t1 < t2, "integrated check needs t1 < t2");
  require(t1 > 0.0, "integrated check needs t1 > 0");
  require(tolerance >= 0.0, "tolerance must be nonnegative");
  const Equation eq = traj.spec.equation;
  require(eq == Equation::LogHeat || eq == Equation::LogSobolevEps,
          "integrated check applies to log-heat or eps-flow surface runs");
  // Endpoint times must be within the recorded range.
  lower_snapshot(traj, t1);
  lower_snapshot(traj, t2);

  std::array<double, 2> p = grid.node_position(x1);
  std::array<double, 2> q = grid.node_position(x2);
  double span = coordinate_span(grid, p, q);

  PathCheckResult result;
  result.x1 = x1;
  result.x2 = x2;
  result.t1 = t1;
  result.t2 = t2;
  result.tolerance = tolerance;

  // ln field value at (node coordinates, time), both interpolated.
  auto ln_at = [&](const std::array<double, 2>& pos, double t) {
    std::size_t lo = lower_snapshot(traj, t);
    std::size_t hi = std::min(lo + 1, traj.snapshots.size() - 1);
    const Snapshot& s0 = traj.snapshots[lo];
    const Snapshot& s1 = traj.snapshots[hi];
    double v0 = sample_linear(grid, s0.field, pos);
    double v1 = sample_linear(grid, s1.field, pos);
    require(v0 > 0.0 && v1 > 0.0, "integrated check: field must be positive");
    double l0 = std::log(v0);
    if (hi == lo || t <= s0.time) return l0;
    double s = std::min(1.0, (t - s0.time) / (s1.time - s0.time));
    return l0 + s * (std::log(v1) - l0);
  };

  if (eq == Equation::LogHeat) {
    double a = traj.spec.a;
    double d = span;  // static flat metric: coordinate span is the distance
    result.distance = d;
    result.lhs = std::exp(-a * t1) * ln_at(p, t1) -
                 std::exp(-a * t2) * ln_at(q, t2);
    // (1 - e^{-a t2}) / (1 - e^{-a t1}) keeps one sign for either sign of a.
    double ratio = std::expm1(-a * t2) / std::expm1(-a * t1);
    double n = grid.dimension();
    double dist_term = 0.25 * a * d * d / (std::exp(a * t2) - std::exp(a * t1));
    result.rhs = dist_term + 0.5 * n * std::log(ratio);

    if (traj.is_pair()) {
      // Path integral of e^{-a t} |grad h|^2/(1 - h^2) along the
      // optimal-speed geodesic ell(t) = d (e^{a t} - e^{a t1}) / (e^{a t2}
      // - e^{a t1}); trapezoid over the snapshot times inside [t1, t2].
      std::vector<ScalarField> g_fields;
      g_fields.reserve(traj.snapshots.size());
      for (const Snapshot& snap : traj.snapshots) {
        PairFields pf = pair_fields(snap, "integrated check");
        ScalarField h_field = as_field(pf.h, snap.time);
        ScalarField gh2 = gradient_norm_sq(grid, h_field, snap.r_squared);
        for (std::size_t i = 0; i < gh2.values.size(); ++i) {
          gh2.values[i] /= pf.q[i];
        }
        g_fields.push_back(std::move(gh2));
      }
      auto integrand = [&](double t) {
        double ell = d * (std::exp(a * t) - std::exp(a * t1)) /
                     (std::exp(a * t2) - std::exp(a * t1));
        std::array<double, 2> pos = point_along(grid, p, q, span, ell);
        std::size_t lo = lower_snapshot(traj, t);
        std::size_t hi = std::min(lo + 1, traj.snapshots.size() - 1);
        double v0 = sample_linear(grid, g_fields[lo], pos);
        double value = v0;
        if (hi != lo && t > traj.snapshots[lo].time) {
          double v1 = sample_linear(grid, g_fields[hi], pos);
          double s = std::min(1.0, (t - traj.snapshots[lo].time) /
                                       (traj.snapshots[hi].time -
                                        traj.snapshots[lo].time));
          value = v0 + s * (v1 - v0);
        }
        return std::exp(-a * t) * value;
      };
      std::vector<double> times;
      times.push_back(t1);
      for (const Snapshot& snap : traj.snapshots) {
        if (snap.time > t1 + 1e-12 && snap.time < t2 - 1e-12) {
          times.push_back(snap.time);
        }
      }
      times.push_back(t2);
      double integral = 0.0;
      for (std::size_t k = 0; k + 1 < times.size(); ++k) {
        double ta = times[k];
        double tb = times[k + 1];
        integral += 0.5 * (tb - ta) * (integrand(ta) + integrand(tb));
      }
      result.rhs -= integral;
    }
  } else {
    require(grid.kind() == GridKind::SphereAxisym,
            "surface integrated check lives on the sphere");
    result.lhs =
        std::exp(t1) * ln_at(p, t1) - std::exp(t2) * ln_at(q, t2);
    double energy = path_energy_bound(traj.spec.metric, span, t1, t2);
    result.rhs = energy + std::log(std::expm1(t2) / std::expm1(t1));
    result.distance = span * std::sqrt(traj.spec.metric.r_squared_at(t1));
  }

  result.satisfied = result.lhs <= result.rhs + tolerance;
  return result;
}

namespace {

std::vector<double> scale_combine(const std::vector<double>& fm,
                                  const std::vector<double>& f0,
                                  const std::vector<double>& fp,
                                  const TimeWeights& w) {
  std::vector<double> out(f0.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = w.wm * fm[i] + w.w0 * f0[i] + w.wp * fp[i];
  }
  return out;
}

}  // namespace

double evolution_residual(EvolutionIdentity identity, const Trajectory& traj) {
  const ManifoldGrid& grid = traj.grid;
  const std::size_t m = traj.snapshots.size();
  require(m >= 3, "evolution residual needs at least three snapshots");

  const bool pair_identity = identity == EvolutionIdentity::ConstrainedTrace ||
                             identity == EvolutionIdentity::ConstrainedMatrix;
  if (pair_identity) {
    require(grid.kind() == GridKind::TorusPeriodic,
            "pair identities are checked on the flat torus");
    require(traj.spec.equation == Equation::LogHeat && traj.is_pair(),
            "pair identities need a log-heat pair trajectory");
  } else if (identity == EvolutionIdentity::InterpolatedQuantity) {
    require(grid.kind() == GridKind::SphereAxisym &&
                traj.spec.equation == Equation::LogSobolevEps,
            "interpolated identity needs an eps-flow sphere trajectory");
  } else {
    require(grid.kind() == GridKind::TorusPeriodic &&
                traj.spec.equation == Equation::LogSobolev,
            "gradient identity needs a flat normalized trajectory");
  }

  const double a = traj.spec.a;
  const double eps = traj.spec.epsilon;
  const int dim = grid.dimension();
  const int n_comp =
      identity == EvolutionIdentity::ConstrainedMatrix ? (dim == 2 ? 3 : 1) : 1;

  // Component fields of the tracked quantity at every snapshot.
  std::vector<std::vector<std::vector<double>>> Q(
      m, std::vector<std::vector<double>>(n_comp));
  for (std::size_t k = 0; k < m; ++k) {
    const Snapshot& snap = traj.snapshots[k];
    double t = snap.time;
    double r2 = snap.r_squared;
    switch (identity) {
      case EvolutionIdentity::ConstrainedTrace: {
        PairFields pf = pair_fields(snap, "evolution residual");
        ScalarField lap =
            laplacian(grid, as_field(pf.ln_psi, t), r2);
        ScalarField gh2 =
            gradient_norm_sq(grid, as_field(pf.h, t), r2);
        std::vector<double> P(lap.values.size());
        for (std::size_t i = 0; i < P.size(); ++i) {
          P[i] = lap.values[i] - gh2.values[i] / pf.q[i];
        }
        Q[k][0] = std::move(P);
        break;
      }
      case EvolutionIdentity::ConstrainedMatrix: {
        PairFields pf = pair_fields(snap, "evolution residual");
        FrameHessian hess =
            hessian_frame(grid, as_field(pf.ln_psi, t), r2);
        FrameGradient gh = gradient(grid, as_field(pf.h, t), r2);
        std::size_t nn = hess.xx.size();
        std::vector<double> pxx(nn), pxy, pyy;
        if (dim == 2) {
          pxy.resize(nn);
          pyy.resize(nn);
        }
        for (std::size_t i = 0; i < nn; ++i) {
          double inv_q = 1.0 / pf.q[i];
          double g0 = gh.comp0[i];
          pxx[i] = hess.xx[i] - g0 * g0 * inv_q;
          if (dim == 2) {
            double g1 = gh.comp1[i];
            pxy[i] = hess.xy[i] - g0 * g1 * inv_q;
            pyy[i] = hess.yy[i] - g1 * g1 * inv_q;
          }
        }
        Q[k][0] = std::move(pxx);
        if (dim == 2) {
          Q[k][1] = std::move(pxy);
          Q[k][2] = std::move(pyy);
        }
        break;
      }
      case EvolutionIdentity::InterpolatedQuantity: {
        std::vector<double> ln_f = log_field(snap.field, "evolution residual");
        std::vector<double> u(ln_f.size());
        for (std::size_t i = 0; i < u.size(); ++i) u[i] = -ln_f[i];
        ScalarField lap_u = laplacian(grid, as_field(u, t), r2);
        double R = curvature(grid, r2).scalar;
        std::vector<double> H(u.size());
        for (std::size_t i = 0; i < H.size(); ++i) {
          H[i] = lap_u.values[i] - eps * R;
        }
        Q[k][0] = std::move(H);
        break;
      }
      case EvolutionIdentity::GradientQuantity: {
        std::vector<double> u(snap.field.values.size());
        for (std::size_t i = 0; i < u.size(); ++i) {
          double f = snap.field.values[i];
          require(f > 0.0 && f < 1.0,
                  "gradient identity needs the field inside (0, 1)");
          u[i] = -std::log(f);
        }
        ScalarField gu2 = gradient_norm_sq(grid, as_field(u, t), r2);
        double w = 1.0 / std::expm1(t);
        std::vector<double> H(u.size());
        for (std::size_t i = 0; i < H.size(); ++i) {
          H[i] = gu2.values[i] - u[i] * w;
        }
        Q[k][0] = std::move(H);
        break;
      }
    }
  }

  double worst = 0.0;
  for (std::size_t k = 1; k + 1 < m; ++k) {
    const Snapshot& snap = traj.snapshots[k];
    double t = snap.time;
    double r2 = snap.r_squared;
    double dm = t - traj.snapshots[k - 1].time;
    double dp = traj.snapshots[k + 1].time - t;
    TimeWeights w = derivative_weights(dm, dp);

    for (int c = 0; c < n_comp; ++c) {
      std::vector<double> dQ =
          scale_combine(Q[k - 1][c], Q[k][c], Q[k + 1][c], w);
      std::vector<double> rhs_vals(dQ.size(), 0.0);

      switch (identity) {
        case EvolutionIdentity::ConstrainedTrace: {
          PairFields pf = pair_fields(snap, "evolution residual");
          ScalarField lnL = as_field(pf.ln_psi, t);
          ScalarField h_field = as_field(pf.h, t);
          ScalarField P_field = as_field(Q[k][0], t);
          ScalarField lapP = laplacian(grid, P_field, r2);
          FrameGradient gL = gradient(grid, lnL, r2);
          FrameGradient gP = gradient(grid, P_field, r2);
          FrameGradient gh = gradient(grid, h_field, r2);
          FrameHessian hL = hessian_frame(grid, lnL, r2);
          FrameHessian hh = hessian_frame(grid, h_field, r2);
          ScalarField gh2 = gradient_norm_sq(grid, h_field, r2);
          for (std::size_t i = 0; i < rhs_vals.size(); ++i) {
            double q = pf.q[i];
            double inv_q = 1.0 / q;
            double g0 = gh.comp0[i];
            double g1 = dim == 2 ? gh.comp1[i] : 0.0;
            double pxx = hL.xx[i] - g0 * g0 * inv_q;
            double pxy = dim == 2 ? hL.xy[i] - g0 * g1 * inv_q : 0.0;
            double pyy = dim == 2 ? hL.yy[i] - g1 * g1 * inv_q : 0.0;
            double two_h = 2.0 * pf.h[i];
            double mxx = hh.xx[i] + two_h * g0 * g0 * inv_q;
            double mxy = dim == 2 ? hh.xy[i] + two_h * g0 * g1 * inv_q : 0.0;
            double myy = dim == 2 ? hh.yy[i] + two_h * g1 * g1 * inv_q : 0.0;
            double grad_dot = gL.comp0[i] * gP.comp0[i];
            if (dim == 2) grad_dot += gL.comp1[i] * gP.comp1[i];
            double log_factor = 1.0 + 2.0 * std::log(pf.h[i]) * inv_q;
            rhs_vals[i] = lapP.values[i] + 2.0 * grad_dot +
                          2.0 * sym_norm_sq(dim, pxx, pxy, pyy) +
                          2.0 * inv_q * sym_norm_sq(dim, mxx, mxy, myy) +
                          a * Q[k][0][i] -
                          a * gh2.values[i] * inv_q * log_factor;
          }
          break;
        }
        case EvolutionIdentity::ConstrainedMatrix: {
          PairFields pf = pair_fields(snap, "evolution residual");
          ScalarField lnL = as_field(pf.ln_psi, t);
          ScalarField h_field = as_field(pf.h, t);
          FrameGradient gL = gradient(grid, lnL, r2);
          FrameGradient gh = gradient(grid, h_field, r2);
          FrameHessian hh = hessian_frame(grid, h_field, r2);
          ScalarField comp_field = as_field(Q[k][c], t);
          ScalarField lapC = laplacian(grid, comp_field, r2);
          FrameGradient gC = gradient(grid, comp_field, r2);
          for (std::size_t i = 0; i < rhs_vals.size(); ++i) {
            double q = pf.q[i];
            double inv_q = 1.0 / q;
            double g0 = gh.comp0[i];
            double g1 = dim == 2 ? gh.comp1[i] : 0.0;
            double pxx = Q[k][0][i];
            double pxy = dim == 2 ? Q[k][1][i] : 0.0;
            double pyy = dim == 2 ? Q[k][2][i] : 0.0;
            double two_h = 2.0 * pf.h[i];
            double mxx = hh.xx[i] + two_h * g0 * g0 * inv_q;
            double mxy = dim == 2 ? hh.xy[i] + two_h * g0 * g1 * inv_q : 0.0;
            double myy = dim == 2 ? hh.yy[i] + two_h * g1 * g1 * inv_q : 0.0;
            // (P^2)_ij and (M^2)_ij for the wanted component c.
            double p_sq, m_sq, gigj;
            if (dim == 1) {
              p_sq = pxx * pxx;
              m_sq = mxx * mxx;
              gigj = g0 * g0;
            } else if (c == 0) {  // xx
              p_sq = pxx * pxx + pxy * pxy;
              m_sq = mxx * mxx + mxy * mxy;
              gigj = g0 * g0;
            } else if (c == 1) {  // xy
              p_sq = pxx * pxy + pxy * pyy;
              m_sq = mxx * mxy + mxy * myy;
              gigj = g0 * g1;
            } else {  // yy
              p_sq = pxy * pxy + pyy * pyy;
              m_sq = mxy * mxy + myy * myy;
              gigj = g1 * g1;
            }
            double grad_dot = gL.comp0[i] * gC.comp0[i];
            if (dim == 2) grad_dot += gL.comp1[i] * gC.comp1[i];
            double log_factor = 1.0 + 2.0 * std::log(pf.h[i]) * inv_q;
            rhs_vals[i] = lapC.values[i] + 2.0 * grad_dot + 2.0 * p_sq +
                          2.0 * inv_q * m_sq + a * Q[k][c][i] -
                          a * gigj * inv_q * log_factor;
          }
          break;
        }
        case EvolutionIdentity::InterpolatedQuantity: {
          std::vector<double> ln_f =
              log_field(snap.field, "evolution residual");
          std::vector<double> u(ln_f.size());
          for (std::size_t i = 0; i < u.size(); ++i) u[i] = -ln_f[i];
          ScalarField u_field = as_field(u, t);
          ScalarField H_field = as_field(Q[k][0], t);
          ScalarField lapH = laplacian(grid, H_field, r2);
          ScalarField lapU = laplacian(grid, u_field, r2);
          FrameGradient gU = gradient(grid, u_field, r2);
          FrameGradient gH = gradient(grid, H_field, r2);
          FrameHessian hU = hessian_frame(grid, u_field, r2);
          ScalarField gu2 = gradient_norm_sq(grid, u_field, r2);
          double R = curvature(grid, r2).scalar;
          double half_eps_R = 0.5 * eps * R;
          for (std::size_t i = 0; i < rhs_vals.size(); ++i) {
            double axx = hU.xx[i] - half_eps_R;
            double axy = hU.xy[i];
            double ayy = hU.yy[i] - half_eps_R;
            double a_sq = sym_norm_sq(2, axx, axy, ayy);
            double grad_dot =
                gU.comp0[i] * gH.comp0[i] + gU.comp1[i] * gH.comp1[i];
            rhs_vals[i] = lapH.values[i] - 2.0 * a_sq - 2.0 * grad_dot -
                          eps * R * Q[k][0][i] - R * gu2.values[i] -
                          eps * eps * R * R - lapU.values[i];
          }
          break;
        }
        case EvolutionIdentity::GradientQuantity: {
          std::vector<double> u(snap.field.values.size());
          for (std::size_t i = 0; i < u.size(); ++i) {
            u[i] = -std::log(snap.field.values[i]);
          }
          ScalarField u_field = as_field(u, t);
          ScalarField H_field = as_field(Q[k][0], t);
          ScalarField lapH = laplacian(grid, H_field, r2);
          FrameGradient gU = gradient(grid, u_field, r2);
          FrameGradient gH = gradient(grid, H_field, r2);
          FrameHessian hU = hessian_frame(grid, u_field, r2);
          double w_t = 1.0 / std::expm1(t);
          for (std::size_t i = 0; i < rhs_vals.size(); ++i) {
            double hess_sq =
                sym_norm_sq(dim, hU.xx[i],
                            dim == 2 ? hU.xy[i] : 0.0,
                            dim == 2 ? hU.yy[i] : 0.0);
            double grad_dot = gU.comp0[i] * gH.comp0[i];
            if (dim == 2) grad_dot += gU.comp1[i] * gH.comp1[i];
            rhs_vals[i] = lapH.values[i] - 2.0 * grad_dot - 2.0 * hess_sq -
                          (2.0 + w_t) * Q[k][0][i];
          }
          break;
        }
      }
      worst = std::max(worst, max_abs_diff(dQ, rhs_vals));
    }
  }
  return worst;
}

ScalarClaimsReport scalar_claims_check(std::size_t samples) {
  require(samples >= 2, "scalar claims need at least two samples");
  ScalarClaimsReport report;

  auto log_grid = [](double lo, double hi, std::size_t count,
                     std::size_t i) {
    double s = static_cast<double>(i) / static_cast<double>(count - 1);
    return lo * std::pow(hi / lo, s);
  };

  // h-grid over (0, 1): log-uniform in h and in 1-h to cover both ends.
  auto h_sample = [&](std::size_t i, std::size_t count) {
    std::size_t half = count / 2;
    if (i < half) return log_grid(1e-6, 0.5, half, i);
    return 1.0 - log_grid(1e-6, 0.5, count - half, count - 1 - i);
  };

  {
    ScalarClaim claim;
    claim.name = "ratio_gap_positive";  // 1/h - h + 2 h ln h > 0
    claim.worst_value = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < samples; ++i) {
      double h = h_sample(i, samples);
      if (!(h > 0.0 && h < 1.0)) continue;
      double value = 1.0 / h - h + 2.0 * h * std::log(h);
      ++claim.checked;
      claim.worst_value = std::min(claim.worst_value, value);
      if (!(value > 0.0)) ++claim.violations;
    }
    report.claims.push_back(claim);
  }
  {
    ScalarClaim claim;
    claim.name = "log_factor_negative";  // 1 + 2 ln h/(1-h^2) < 0
    claim.worst_value = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < samples; ++i) {
      double h = h_sample(i, samples);
      if (!(h > 0.0 && h < 1.0)) continue;
      double value = 1.0 + 2.0 * std::log(h) / (1.0 - h * h);
      ++claim.checked;
      claim.worst_value = std::max(claim.worst_value, value);
      if (!(value < 0.0)) ++claim.violations;
    }
    report.claims.push_back(claim);
  }
  {
    ScalarClaim claim;
    claim.name = "window_weight_positive";  // t e^t - (e^t - 1) > 0
    claim.worst_value = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < samples; ++i) {
      double t = log_grid(1e-6, 50.0, samples, i);
      double value = t * std::exp(t) - std::expm1(t);
      ++claim.checked;
      claim.worst_value = std::min(claim.worst_value, value);
      if (!(value > 0.0)) ++claim.violations;
    }
    report.claims.push_back(claim);
  }
  {
    ScalarClaim claim;
    claim.name = "window_sharper";  // 1/(e^t - 1) < 1/t
    claim.worst_value = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < samples; ++i) {
      double t = log_grid(1e-6, 50.0, samples, i);
      // 1/t - 1/(e^t-1) > 0, equivalent to e^t - 1 > t.
      double value = std::expm1(t) - t;
      ++claim.checked;
      claim.worst_value = std::min(claim.worst_value, value);
      if (!(value > 0.0)) ++claim.violations;
    }
    report.claims.push_back(claim);
  }
  {
    ScalarClaim claim;
    claim.name = "admissible_floor";  // 2K + 1 + 2 ln h/(1-h^2) > 0
    claim.worst_value = std::numeric_limits<double>::infinity();
    std::size_t side = static_cast<std::size_t>(std::sqrt(
        static_cast<double>(samples)));
    side = std::max<std::size_t>(side, 2);
    for (std::size_t i = 0; i < side; ++i) {
      double c0 = h_sample(i, side);
      if (!(c0 > 0.0 && c0 < 1.0)) continue;
      double K = constraint_floor(c0);  // tightest admissible K
      for (std::size_t j = 0; j < side; ++j) {
        // Walk h across (c0, 1) through its distance to 1, which keeps
        // 1 - h^2 = (1 - h)(1 + h) fully accurate as h -> 1.
        double one_minus_h = (1.0 - c0) * log_grid(1e-6, 1.0 - 1e-6, side, j);
        double h = 1.0 - one_minus_h;
        if (!(h > c0 && h < 1.0)) continue;
        double value = 2.0 * K + 1.0 + 2.0 * std::log1p(-one_minus_h) /
                                           (one_minus_h * (2.0 - one_minus_h));
        ++claim.checked;
        claim.worst_value = std::min(claim.worst_value, value);
        if (!(value > 0.0)) ++claim.violations;
      }
    }
    report.claims.push_back(claim);
  }

  report.all_hold = true;
  for (const ScalarClaim& claim : report.claims) {
    if (claim.violations != 0 || claim.checked == 0) report.all_hold = false;
  }
  return report;
}

}  // namespace harnacklab
