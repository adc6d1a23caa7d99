#include "harnacklab/oracles.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "harnacklab/harnack.hpp"

namespace harnacklab {
namespace {

void require(bool cond, const char* message) {
  if (!cond) throw std::invalid_argument(message);
}

void check_gaussian(const LogGaussianParams& params, double t) {
  require(params.a != 0.0, "log-gaussian needs a != 0");
  require(params.n >= 1, "log-gaussian needs n >= 1");
  require(t > 0.0, "log-gaussian needs t > 0");
}

/// beta(t) = C e^{a t} - (n/2) m(t) ln|1 - e^{-a t}| with middle factor
/// m = e^{a t} (Corrected; solves the equation) or m = e^{-a t}
/// (PrintedVariant; defect independent of C).
double beta_value(const LogGaussianParams& params, double t,
                  GaussianForm form) {
  double d = -std::expm1(-params.a * t);  // 1 - e^{-a t}, right sign
  double L = std::log(std::abs(d));
  double middle = form == GaussianForm::Corrected ? std::exp(params.a * t)
                                                  : std::exp(-params.a * t);
  return params.C * std::exp(params.a * t) - 0.5 * params.n * middle * L;
}

}  // namespace

LogGaussianEval log_gaussian(const LogGaussianParams& params,
                             const std::vector<double>& x, double t,
                             GaussianForm form) {
  check_gaussian(params, t);
  require(x.size() == static_cast<std::size_t>(params.n),
          "log-gaussian point dimension mismatch");
  LogGaussianEval out;
  // The quadratic coefficient is -a/(4(1-e^{-at})), i.e. minus half the
  // per-direction correction; reusing correction_term keeps the sharpness
  // identity exact to the bit.
  double per_direction = correction_term(params.a, 1, t);
  out.hessian_diag = -per_direction;
  out.laplacian_ln = -correction_term(params.a, params.n, t);
  out.grad_ln.resize(x.size());
  double norm_sq = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    out.grad_ln[i] = -per_direction * x[i];
    norm_sq += x[i] * x[i];
  }
  out.ln_value = -0.5 * per_direction * norm_sq + beta_value(params, t, form);
  return out;
}

double homogeneous_log_value(const FlowSpec& spec, double ln_w0, double t) {
  require(t >= 0.0, "homogeneous value needs t >= 0");
  switch (spec.equation) {
    case Equation::LogHeat:
      return std::exp(spec.a * t) * ln_w0;
    case Equation::LogSobolev:
      return std::exp(-t) * ln_w0;
    case Equation::LogSobolevEps: {
      if (spec.epsilon == 0.0) return std::exp(-t) * ln_w0;
      require(t < spec.metric.horizon(),
              "homogeneous value needs t inside the metric horizon");
      auto source = [&](double s) {
        return std::exp(s) * spec.epsilon *
               curvature_scalar_round_sphere(spec.metric.r_squared_at(s));
      };
      double integral = boost::math::quadrature::gauss_kronrod<double, 15>::
          integrate(source, 0.0, t, 12, 1e-13);
      return std::exp(-t) * (ln_w0 + integral);
    }
  }
  throw std::logic_error("unreachable equation");
}

double pde_residual(const LogGaussianParams& params, GaussianForm form,
                    const std::vector<std::vector<double>>& points, double t,
                    double fd_dt) {
  check_gaussian(params, t);
  require(fd_dt > 0.0 && t > 2.0 * fd_dt,
          "pde residual needs 0 < 2 fd_dt < t");
  require(!points.empty(), "pde residual needs at least one sample point");
  double worst = 0.0;
  for (const std::vector<double>& x : points) {
    auto ln_at = [&](double s) { return log_gaussian(params, x, s, form).ln_value; };
    // 5-point central first derivative, O(fd_dt^4).
    double dt_ln = (ln_at(t - 2.0 * fd_dt) - 8.0 * ln_at(t - fd_dt) +
                    8.0 * ln_at(t + fd_dt) - ln_at(t + 2.0 * fd_dt)) /
                   (12.0 * fd_dt);
    LogGaussianEval eval = log_gaussian(params, x, t, form);
    double grad_sq = 0.0;
    for (double g : eval.grad_ln) grad_sq += g * g;
    double rhs = eval.laplacian_ln + grad_sq + params.a * eval.ln_value;
    worst = std::max(worst, std::abs(dt_ln - rhs));
  }
  return worst;
}

double homogeneous_pde_residual(const FlowSpec& spec, double ln_w0, double t,
                                double fd_dt) {
  require(fd_dt > 0.0 && t > 2.0 * fd_dt,
          "pde residual needs 0 < 2 fd_dt < t");
  auto ln_at = [&](double s) { return homogeneous_log_value(spec, ln_w0, s); };
  double dt_ln = (ln_at(t - 2.0 * fd_dt) - 8.0 * ln_at(t - fd_dt) +
                  8.0 * ln_at(t + fd_dt) - ln_at(t + 2.0 * fd_dt)) /
                 (12.0 * fd_dt);
  double ln_t = ln_at(t);
  double rhs = 0.0;
  switch (spec.equation) {
    case Equation::LogHeat:
      rhs = spec.a * ln_t;
      break;
    case Equation::LogSobolev:
      rhs = -ln_t;
      break;
    case Equation::LogSobolevEps:
      rhs = -ln_t + spec.epsilon * curvature_scalar_round_sphere(
                                       spec.metric.r_squared_at(t));
      break;
  }
  return std::abs(dt_ln - rhs);
}

ConvergenceReport convergence_order(const std::vector<int>& resolutions,
                                    const std::vector<double>& errors) {
  require(resolutions.size() == errors.size(),
          "convergence order needs one error per resolution");
  require(resolutions.size() >= 2, "convergence order needs >= 2 levels");
  for (std::size_t k = 0; k + 1 < resolutions.size(); ++k) {
    require(resolutions[k + 1] > resolutions[k],
            "resolutions must increase");
  }
  ConvergenceReport report;
  report.resolutions = resolutions;
  report.errors = errors;

  report.exact = true;
  for (double e : errors) {
    require(e >= 0.0, "errors must be nonnegative");
    if (e > 1e-12) report.exact = false;
  }
  if (report.exact) {
    report.diagnostic = "all errors at roundoff level; treated as exact";
    return report;
  }

  for (std::size_t k = 0; k + 1 < errors.size(); ++k) {
    if (!(errors[k + 1] < errors[k])) report.monotone = false;
  }
  report.orders.resize(errors.size() - 1);
  for (std::size_t k = 0; k + 1 < errors.size(); ++k) {
    if (report.monotone) {
      double ratio = errors[k] / errors[k + 1];
      double refine = static_cast<double>(resolutions[k + 1]) /
                      static_cast<double>(resolutions[k]);
      report.orders[k] = std::log(ratio) / std::log(refine);
    } else {
      report.orders[k] = std::numeric_limits<double>::quiet_NaN();
    }
  }
  if (!report.monotone) {
    report.diagnostic = "errors are not monotonically decreasing";
  }
  return report;
}

}  // namespace harnacklab
