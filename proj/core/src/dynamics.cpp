#include "harnacklab/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "harnacklab/random.hpp"

namespace harnacklab {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

std::string format_time(double t) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", t);
  return buf;
}

}  // namespace

SolverError::SolverError(const std::string& what, std::size_t node, double time)
    : std::runtime_error(what + " at node " + std::to_string(node) + ", t = " +
                         format_time(time)),
      node_(node),
      time_(time) {}

MetricSchedule MetricSchedule::static_torus() {
  MetricSchedule m;
  m.kind_ = MetricKind::StaticTorus;
  m.r0_squared_ = 1.0;
  return m;
}

MetricSchedule MetricSchedule::static_sphere(double r0) {
  require(r0 > 0.0, "sphere radius r0 must be positive");
  MetricSchedule m;
  m.kind_ = MetricKind::StaticSphere;
  m.r0_squared_ = r0 * r0;
  return m;
}

MetricSchedule MetricSchedule::eps_ricci_sphere(double r0, double epsilon) {
  require(r0 > 0.0, "sphere radius r0 must be positive");
  require(epsilon >= 0.0, "epsilon must be nonnegative");
  MetricSchedule m;
  m.kind_ = MetricKind::EpsRicciSphere;
  m.r0_squared_ = r0 * r0;
  m.epsilon_ = epsilon;
  return m;
}

MetricSchedule MetricSchedule::ricci_sphere(double r0) {
  require(r0 > 0.0, "sphere radius r0 must be positive");
  MetricSchedule m;
  m.kind_ = MetricKind::RicciSphere;
  m.r0_squared_ = r0 * r0;
  return m;
}

bool MetricSchedule::is_static() const {
  return kind_ == MetricKind::StaticTorus || kind_ == MetricKind::StaticSphere ||
         (kind_ == MetricKind::EpsRicciSphere && epsilon_ == 0.0);
}

double MetricSchedule::horizon() const {
  switch (kind_) {
    case MetricKind::EpsRicciSphere:
      if (epsilon_ == 0.0) return std::numeric_limits<double>::infinity();
      return r0_squared_ / (2.0 * epsilon_);
    case MetricKind::RicciSphere:
      return r0_squared_ / 2.0;
    default:
      return std::numeric_limits<double>::infinity();
  }
}

double MetricSchedule::r_squared_at(double t) const {
  if (t < 0.0) throw std::domain_error("metric schedule queried at t < 0");
  double r2 = r0_squared_;
  if (kind_ == MetricKind::EpsRicciSphere) r2 = r0_squared_ - 2.0 * epsilon_ * t;
  if (kind_ == MetricKind::RicciSphere) r2 = r0_squared_ - 2.0 * t;
  if (r2 <= 0.0) {
    throw std::domain_error("metric schedule expired: r^2 <= 0 at t = " +
                            format_time(t));
  }
  return r2;
}

double metric_schedule(const FlowSpec& spec, double t) {
  return spec.metric.r_squared_at(t);
}

void validate_for_run(const ManifoldGrid& grid, const FlowSpec& spec) {
  const bool grid_sphere = grid.kind() == GridKind::SphereAxisym;
  const bool metric_sphere = spec.metric.is_sphere();
  require(grid_sphere == metric_sphere,
          "grid kind and metric schedule kind must agree");

  switch (spec.equation) {
    case Equation::LogHeat:
      require(spec.a != 0.0, "log_heat: a is a nonzero real constant");
      require(spec.metric.kind() == MetricKind::StaticTorus ||
                  spec.metric.kind() == MetricKind::StaticSphere,
              "log_heat runs on a static metric");
      break;
    case Equation::LogSobolevEps:
      require(spec.epsilon >= 0.0, "log_sobolev_eps: epsilon must be >= 0");
      require(grid_sphere, "log_sobolev_eps runs on the sphere");
      if (spec.epsilon == 0.0) {
        require(spec.metric.kind() == MetricKind::StaticSphere ||
                    spec.metric.kind() == MetricKind::EpsRicciSphere,
                "log_sobolev_eps with epsilon = 0 needs a static sphere");
      } else {
        require(spec.metric.kind() == MetricKind::EpsRicciSphere &&
                    spec.metric.epsilon() == spec.epsilon,
                "log_sobolev_eps: metric schedule must evolve with the same "
                "epsilon as the equation");
      }
      break;
    case Equation::LogSobolev:
      require((grid_sphere && spec.metric.kind() == MetricKind::RicciSphere) ||
                  (!grid_sphere && spec.metric.kind() == MetricKind::StaticTorus),
              "log_sobolev runs on a static torus or an evolving sphere");
      break;
  }

  require(spec.dt_safety > 0.0 && spec.dt_safety <= 1.0,
          "dt_safety must lie in (0, 1]");
  require(spec.t_end > 0.0, "t_end must be positive");
  require(spec.t_end < spec.metric.horizon(),
          "t_end must precede the metric horizon");

  require(!spec.output_times.empty(), "output_times must not be empty");
  double prev = -1.0;
  for (double t : spec.output_times) {
    require(t >= 0.0 && t <= spec.t_end,
            "output times must lie in [0, t_end]");
    require(t > prev, "output times must be strictly increasing");
    prev = t;
  }
}

double stable_dt(const ManifoldGrid& grid, const FlowSpec& spec) {
  const double h = grid.spacing();
  double r2_min = 1.0;
  if (grid.kind() == GridKind::SphereAxisym) {
    r2_min = spec.metric.r_squared_at(spec.t_end);
    r2_min = std::min(r2_min, spec.metric.r0_squared());
  }
  return spec.dt_safety * h * h * r2_min / (2.0 * grid.dimension());
}

ScalarField rhs(const ManifoldGrid& grid, const FlowSpec& spec,
                const ScalarField& field, double t) {
  const double r2 = grid.kind() == GridKind::SphereAxisym
                        ? spec.metric.r_squared_at(t)
                        : 1.0;
  ScalarField out = laplacian(grid, field, r2);
  out.time = t;
  const std::vector<double>& w = field.values;

  switch (spec.equation) {
    case Equation::LogHeat: {
      const double a = spec.a;
      for (std::size_t i = 0; i < w.size(); ++i) {
        if (!(w[i] > 0.0)) {
          throw SolverError("non-positive field in nonlinearity", i, t);
        }
        out.values[i] += a * w[i] * std::log(w[i]);
      }
      break;
    }
    case Equation::LogSobolevEps: {
      const double coupling = spec.epsilon * curvature(grid, r2).scalar;
      for (std::size_t i = 0; i < w.size(); ++i) {
        if (!(w[i] > 0.0)) {
          throw SolverError("non-positive field in nonlinearity", i, t);
        }
        out.values[i] += -w[i] * std::log(w[i]) + coupling * w[i];
      }
      break;
    }
    case Equation::LogSobolev: {
      for (std::size_t i = 0; i < w.size(); ++i) {
        if (!(w[i] > 0.0)) {
          throw SolverError("non-positive field in nonlinearity", i, t);
        }
        out.values[i] -= w[i] * std::log(w[i]);
      }
      break;
    }
  }
  return out;
}

ScalarField step(const ManifoldGrid& grid, const FlowSpec& spec,
                 const ScalarField& field, double t, double dt) {
  require(dt > 0.0, "step size must be positive");
  {
    // Stability bound over [t, t + dt]; the scale is monotone, so the
    // endpoint value is the minimum.
    const double h = grid.spacing();
    double r2_min = 1.0;
    if (grid.kind() == GridKind::SphereAxisym) {
      r2_min = std::min(spec.metric.r_squared_at(t),
                        spec.metric.r_squared_at(t + dt));
    }
    const double bound =
        spec.dt_safety * h * h * r2_min / (2.0 * grid.dimension());
    if (dt > bound * (1.0 + 1e-9)) {
      throw std::invalid_argument("step size " + format_time(dt) +
                                  " violates the stability bound " +
                                  format_time(bound));
    }
  }

  const std::size_t m = field.values.size();
  ScalarField stage = field;

  const ScalarField k1 = rhs(grid, spec, field, t);
  for (std::size_t i = 0; i < m; ++i) {
    stage.values[i] = field.values[i] + 0.5 * dt * k1.values[i];
  }
  const ScalarField k2 = rhs(grid, spec, stage, t + 0.5 * dt);
  for (std::size_t i = 0; i < m; ++i) {
    stage.values[i] = field.values[i] + 0.5 * dt * k2.values[i];
  }
  const ScalarField k3 = rhs(grid, spec, stage, t + 0.5 * dt);
  for (std::size_t i = 0; i < m; ++i) {
    stage.values[i] = field.values[i] + dt * k3.values[i];
  }
  const ScalarField k4 = rhs(grid, spec, stage, t + dt);

  ScalarField out;
  out.time = t + dt;
  out.values.resize(m);
  const double w6 = dt / 6.0;
  for (std::size_t i = 0; i < m; ++i) {
    out.values[i] =
        field.values[i] +
        w6 * (k1.values[i] + 2.0 * (k2.values[i] + k3.values[i]) + k4.values[i]);
    if (!(out.values[i] > 0.0)) {
      throw SolverError("positivity lost after step", i, t + dt);
    }
  }
  return out;
}

namespace {

void check_snapshot_bounds(const FlowSpec& spec, const ScalarField& field,
                           double t) {
  if (spec.equation != Equation::LogSobolev) return;
  for (std::size_t i = 0; i < field.values.size(); ++i) {
    if (!(field.values[i] < 1.0)) {
      throw SolverError("log_sobolev field reached 1", i, t);
    }
  }
}

void check_ratio(const ScalarField& phi, const ScalarField& psi, double lo,
                 double t) {
  constexpr double kTol = 1e-10;
  for (std::size_t i = 0; i < phi.values.size(); ++i) {
    const double h = phi.values[i] / psi.values[i];
    if (h <= lo - kTol || h >= 1.0 + kTol) {
      throw SolverError("pair ratio left (" + std::to_string(lo) + ", 1)", i, t);
    }
  }
}

struct Segmenter {
  // Uniform substeps landing exactly on each output time.
  static int steps_for(double span, double dt_base) {
    return std::max(1, static_cast<int>(std::ceil(span / dt_base - 1e-12)));
  }
};

}  // namespace

Trajectory run(const ManifoldGrid& grid, const FlowSpec& spec,
               const ScalarField& init) {
  validate_for_run(grid, spec);
  require(init.values.size() == grid.node_count(),
          "initial field size does not match grid");
  for (std::size_t i = 0; i < init.values.size(); ++i) {
    if (!(init.values[i] > 0.0)) {
      throw SolverError("initial field not positive", i, 0.0);
    }
  }

  Trajectory traj{grid, spec, {}, stable_dt(grid, spec), std::nullopt};

  ScalarField field = init;
  field.time = 0.0;
  double t_cur = 0.0;
  for (double t_out : spec.output_times) {
    if (t_out > t_cur) {
      const double span = t_out - t_cur;
      const int steps = Segmenter::steps_for(span, traj.dt_base);
      const double dt = span / steps;
      for (int s = 0; s < steps; ++s) {
        field = step(grid, spec, field, t_cur + s * dt, dt);
      }
      t_cur = t_out;
      field.time = t_out;
    }
    check_snapshot_bounds(spec, field, t_out);
    Snapshot snap;
    snap.time = t_out;
    snap.r_squared = grid.kind() == GridKind::SphereAxisym
                         ? spec.metric.r_squared_at(t_out)
                         : 1.0;
    snap.field = field;
    traj.snapshots.push_back(std::move(snap));
  }
  return traj;
}

Trajectory run_pair(const ManifoldGrid& grid, const FlowSpec& spec,
                    const ScalarField& phi0, const ScalarField& psi0,
                    std::optional<double> c0) {
  validate_for_run(grid, spec);
  require(spec.equation == Equation::LogHeat,
          "pair runs drive the log_heat nonlinearity");
  require(phi0.values.size() == grid.node_count() &&
              psi0.values.size() == grid.node_count(),
          "initial pair size does not match grid");
  if (c0) require(*c0 > 0.0 && *c0 < 1.0, "c0 must lie in (0, 1)");
  const double lo = c0.value_or(0.0);
  for (std::size_t i = 0; i < psi0.values.size(); ++i) {
    if (!(psi0.values[i] > 0.0) || !(phi0.values[i] > 0.0)) {
      throw SolverError("initial pair not positive", i, 0.0);
    }
  }
  check_ratio(phi0, psi0, lo, 0.0);

  Trajectory traj{grid, spec, {}, stable_dt(grid, spec), c0};

  ScalarField phi = phi0;
  ScalarField psi = psi0;
  double t_cur = 0.0;
  for (double t_out : spec.output_times) {
    if (t_out > t_cur) {
      const double span = t_out - t_cur;
      const int steps = Segmenter::steps_for(span, traj.dt_base);
      const double dt = span / steps;
      for (int s = 0; s < steps; ++s) {
        const double t_s = t_cur + s * dt;
        phi = step(grid, spec, phi, t_s, dt);
        psi = step(grid, spec, psi, t_s, dt);
        check_ratio(phi, psi, lo, t_s + dt);
      }
      t_cur = t_out;
      phi.time = t_out;
      psi.time = t_out;
    }
    Snapshot snap;
    snap.time = t_out;
    snap.r_squared = grid.kind() == GridKind::SphereAxisym
                         ? spec.metric.r_squared_at(t_out)
                         : 1.0;
    snap.field = psi;
    snap.partner = phi;
    traj.snapshots.push_back(std::move(snap));
  }
  return traj;
}

namespace {

// Draw 2*pi periodic waves per mode; on the torus each frequency contributes
// axis waves plus two diagonal waves so 2-D runs exercise mixed derivatives.
std::vector<double> draw_coefficients(SeededRng& rng, std::size_t count) {
  std::vector<double> c(count);
  for (double& v : c) v = 2.0 * rng.uniform01() - 1.0;
  return c;
}

void normalize_l1(std::vector<double>& c, double target) {
  double sum = 0.0;
  for (double v : c) sum += std::abs(v);
  if (sum < 1e-300) {
    c.assign(c.size(), 0.0);
    return;
  }
  const double scale = target / sum;
  for (double& v : c) v *= scale;
}

}  // namespace

ScalarField random_log_field(const ManifoldGrid& grid, std::uint64_t seed,
                             int max_freq, double amplitude) {
  require(max_freq >= 1, "max_freq must be at least 1");
  require(amplitude >= 0.0, "amplitude must be nonnegative");
  SeededRng rng(seed);
  ScalarField out;
  out.values.assign(grid.node_count(), 0.0);

  if (grid.kind() == GridKind::SphereAxisym) {
    // cos(k theta) is a polynomial in cos(theta): smooth across the poles.
    std::vector<double> c = draw_coefficients(rng, max_freq);
    normalize_l1(c, amplitude);
    for (std::size_t j = 0; j < out.values.size(); ++j) {
      const double theta = grid.theta(static_cast<int>(j));
      double s = 0.0;
      for (int k = 1; k <= max_freq; ++k) {
        s += c[k - 1] * std::cos(k * theta);
      }
      out.values[j] = s;
    }
    return out;
  }

  const double L = grid.side_length();
  const double two_pi = 2.0 * std::numbers::pi;
  if (grid.dimension() == 1) {
    std::vector<double> c = draw_coefficients(rng, 2 * max_freq);
    normalize_l1(c, amplitude);
    for (std::size_t i = 0; i < out.values.size(); ++i) {
      const double x = grid.node_position(i)[0];
      double s = 0.0;
      for (int k = 1; k <= max_freq; ++k) {
        const double arg = two_pi * k * x / L;
        s += c[2 * (k - 1)] * std::cos(arg) + c[2 * (k - 1) + 1] * std::sin(arg);
      }
      out.values[i] = s;
    }
    return out;
  }

  std::vector<double> c = draw_coefficients(rng, 6 * max_freq);
  normalize_l1(c, amplitude);
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    const std::array<double, 2> p = grid.node_position(i);
    double s = 0.0;
    for (int k = 1; k <= max_freq; ++k) {
      const double ax = two_pi * k * p[0] / L;
      const double ay = two_pi * k * p[1] / L;
      const double* ck = &c[6 * (k - 1)];
      s += ck[0] * std::cos(ax) + ck[1] * std::sin(ax);
      s += ck[2] * std::cos(ay) + ck[3] * std::sin(ay);
      s += ck[4] * std::cos(ax + ay) + ck[5] * std::sin(ax - ay);
    }
    out.values[i] = s;
  }
  return out;
}

ScalarField initial_field(const ManifoldGrid& grid, const InitParams& params) {
  ScalarField s =
      random_log_field(grid, params.seed, params.max_freq, params.amplitude);
  for (double& v : s.values) v = std::exp(v - params.offset);
  return s;
}

std::pair<ScalarField, ScalarField> initial_pair(const ManifoldGrid& grid,
                                                 const InitParams& params,
                                                 std::uint64_t seed2,
                                                 std::optional<double> c0) {
  if (c0) {
    if (!(*c0 > 0.0 && *c0 < 1.0)) {
      throw std::invalid_argument("c0 must lie in (0, 1)");
    }
  }
  ScalarField psi0 = initial_field(grid, {params.seed, params.max_freq,
                                          params.amplitude, 0.0});
  ScalarField sigma = random_log_field(grid, seed2, params.max_freq, 1.0);
  const double floor = c0.value_or(0.0);
  ScalarField phi0 = psi0;
  for (std::size_t i = 0; i < phi0.values.size(); ++i) {
    const double s01 = 0.5 * (sigma.values[i] + 1.0);  // l1 norm 1 -> [0, 1]
    const double ratio = floor + (1.0 - floor) * (0.1 + 0.8 * s01);
    phi0.values[i] = psi0.values[i] * ratio;
  }
  return {std::move(phi0), std::move(psi0)};
}

}  // namespace harnacklab
