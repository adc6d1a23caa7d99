#include "harnacklab/geometry.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace harnacklab {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

void check_field(const ManifoldGrid& grid, const ScalarField& field,
                 double r_squared) {
  require(field.values.size() == grid.node_count(),
          "field size " + std::to_string(field.values.size()) +
              " does not match grid node count " +
              std::to_string(grid.node_count()));
  require(r_squared > 0.0, "metric scale r_squared must be positive");
}

// Ghost values across the poles come from the even extension of a regular
// axisymmetric field: f(-theta) = f(theta) and f(pi + s) = f(pi - s).
inline double sphere_ghost(const std::vector<double>& f, int j) {
  const int n = static_cast<int>(f.size());
  if (j < 0) return f[0];
  if (j >= n) return f[n - 1];
  return f[static_cast<std::size_t>(j)];
}

}  // namespace

std::array<double, 2> ManifoldGrid::node_position(std::size_t idx) const {
  if (kind_ == GridKind::SphereAxisym) {
    return {theta(static_cast<int>(idx)), 0.0};
  }
  if (dim_ == 1) {
    return {static_cast<double>(idx) * spacing_, 0.0};
  }
  const std::size_t ix = idx / n_;
  const std::size_t iy = idx % n_;
  return {static_cast<double>(ix) * spacing_, static_cast<double>(iy) * spacing_};
}

ManifoldGrid build_torus(int dim, int points_per_axis, double side_length) {
  require(dim == 1 || dim == 2, "torus dimension must be 1 or 2");
  require(points_per_axis >= 8, "torus needs at least 8 points per axis");
  require(side_length > 0.0, "torus side_length must be positive");
  ManifoldGrid g;
  g.kind_ = GridKind::TorusPeriodic;
  g.dim_ = dim;
  g.n_ = points_per_axis;
  g.nodes_ = 1;
  for (int d = 0; d < dim; ++d) g.nodes_ *= static_cast<std::size_t>(points_per_axis);
  g.side_length_ = side_length;
  g.spacing_ = side_length / points_per_axis;
  return g;
}

ManifoldGrid build_sphere(int n_theta) {
  require(n_theta >= 8, "sphere needs at least 8 colatitude points");
  ManifoldGrid g;
  g.kind_ = GridKind::SphereAxisym;
  g.dim_ = 2;
  g.n_ = n_theta;
  g.nodes_ = static_cast<std::size_t>(n_theta);
  g.side_length_ = std::numbers::pi;
  g.spacing_ = std::numbers::pi / n_theta;
  return g;
}

ScalarField laplacian(const ManifoldGrid& grid, const ScalarField& field,
                      double r_squared) {
  check_field(grid, field, r_squared);
  const int n = grid.points_per_axis();
  const double h = grid.spacing();
  const std::vector<double>& f = field.values;
  ScalarField out;
  out.time = field.time;
  out.values.assign(f.size(), 0.0);

  if (grid.kind() == GridKind::TorusPeriodic) {
    const double inv_h2 = 1.0 / (h * h);
    if (grid.dimension() == 1) {
      for (int i = 0; i < n; ++i) {
        const int ip = (i + 1 == n) ? 0 : i + 1;
        const int im = (i == 0) ? n - 1 : i - 1;
        out.values[i] = ((f[ip] - f[i]) + (f[im] - f[i])) * inv_h2;
      }
    } else {
      for (int ix = 0; ix < n; ++ix) {
        const int xp = (ix + 1 == n) ? 0 : ix + 1;
        const int xm = (ix == 0) ? n - 1 : ix - 1;
        for (int iy = 0; iy < n; ++iy) {
          const int yp = (iy + 1 == n) ? 0 : iy + 1;
          const int ym = (iy == 0) ? n - 1 : iy - 1;
          const std::size_t c = grid.index(ix, iy);
          const double fc = f[c];
          const double ax = (f[grid.index(xp, iy)] - fc) + (f[grid.index(xm, iy)] - fc);
          const double ay = (f[grid.index(ix, yp)] - fc) + (f[grid.index(ix, ym)] - fc);
          out.values[c] = (ax + ay) * inv_h2;
        }
      }
    }
    return out;
  }

  // Sphere: (1/(r^2 sin theta)) d/dtheta (sin theta df/dtheta) in flux form.
  // Fluxes at the pole-adjacent faces are exactly zero.
  const double inv = 1.0 / (r_squared * h * h);
  for (int j = 0; j < n; ++j) {
    const double flux_up =
        (j + 1 == n) ? 0.0 : std::sin((j + 1) * h) * (f[j + 1] - f[j]);
    const double flux_dn = (j == 0) ? 0.0 : std::sin(j * h) * (f[j] - f[j - 1]);
    out.values[j] = (flux_up - flux_dn) * inv / std::sin(grid.theta(j));
  }
  return out;
}

FrameGradient gradient(const ManifoldGrid& grid, const ScalarField& field,
                       double r_squared) {
  check_field(grid, field, r_squared);
  const int n = grid.points_per_axis();
  const double h = grid.spacing();
  const std::vector<double>& f = field.values;
  FrameGradient out;
  out.dim = grid.dimension();
  out.comp0.assign(f.size(), 0.0);
  if (grid.kind() == GridKind::TorusPeriodic && grid.dimension() == 2) {
    out.comp1.assign(f.size(), 0.0);
  } else if (grid.kind() == GridKind::SphereAxisym) {
    out.comp1.assign(f.size(), 0.0);  // azimuthal component vanishes
  }

  if (grid.kind() == GridKind::TorusPeriodic) {
    const double inv_2h = 1.0 / (2.0 * h);
    if (grid.dimension() == 1) {
      for (int i = 0; i < n; ++i) {
        const int ip = (i + 1 == n) ? 0 : i + 1;
        const int im = (i == 0) ? n - 1 : i - 1;
        out.comp0[i] = (f[ip] - f[im]) * inv_2h;
      }
    } else {
      for (int ix = 0; ix < n; ++ix) {
        const int xp = (ix + 1 == n) ? 0 : ix + 1;
        const int xm = (ix == 0) ? n - 1 : ix - 1;
        for (int iy = 0; iy < n; ++iy) {
          const int yp = (iy + 1 == n) ? 0 : iy + 1;
          const int ym = (iy == 0) ? n - 1 : iy - 1;
          const std::size_t c = grid.index(ix, iy);
          out.comp0[c] = (f[grid.index(xp, iy)] - f[grid.index(xm, iy)]) * inv_2h;
          out.comp1[c] = (f[grid.index(ix, yp)] - f[grid.index(ix, ym)]) * inv_2h;
        }
      }
    }
    return out;
  }

  const double inv_2hr = 1.0 / (2.0 * h * std::sqrt(r_squared));
  for (int j = 0; j < n; ++j) {
    out.comp0[j] = (sphere_ghost(f, j + 1) - sphere_ghost(f, j - 1)) * inv_2hr;
  }
  return out;
}

ScalarField gradient_norm_sq(const ManifoldGrid& grid, const ScalarField& field,
                             double r_squared) {
  FrameGradient g = gradient(grid, field, r_squared);
  ScalarField out;
  out.time = field.time;
  out.values.assign(field.values.size(), 0.0);
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    double s = g.comp0[i] * g.comp0[i];
    if (!g.comp1.empty()) s += g.comp1[i] * g.comp1[i];
    out.values[i] = s;
  }
  return out;
}

FrameHessian hessian_frame(const ManifoldGrid& grid, const ScalarField& field,
                           double r_squared) {
  check_field(grid, field, r_squared);
  const int n = grid.points_per_axis();
  const double h = grid.spacing();
  const std::vector<double>& f = field.values;
  FrameHessian out;
  out.dim = grid.kind() == GridKind::TorusPeriodic ? grid.dimension() : 2;
  out.xx.assign(f.size(), 0.0);
  if (out.dim == 2) {
    out.xy.assign(f.size(), 0.0);
    out.yy.assign(f.size(), 0.0);
  }

  if (grid.kind() == GridKind::TorusPeriodic) {
    const double inv_h2 = 1.0 / (h * h);
    if (grid.dimension() == 1) {
      for (int i = 0; i < n; ++i) {
        const int ip = (i + 1 == n) ? 0 : i + 1;
        const int im = (i == 0) ? n - 1 : i - 1;
        out.xx[i] = ((f[ip] - f[i]) + (f[im] - f[i])) * inv_h2;
      }
      return out;
    }
    const double inv_4h2 = 1.0 / (4.0 * h * h);
    for (int ix = 0; ix < n; ++ix) {
      const int xp = (ix + 1 == n) ? 0 : ix + 1;
      const int xm = (ix == 0) ? n - 1 : ix - 1;
      for (int iy = 0; iy < n; ++iy) {
        const int yp = (iy + 1 == n) ? 0 : iy + 1;
        const int ym = (iy == 0) ? n - 1 : iy - 1;
        const std::size_t c = grid.index(ix, iy);
        const double fc = f[c];
        out.xx[c] = ((f[grid.index(xp, iy)] - fc) + (f[grid.index(xm, iy)] - fc)) * inv_h2;
        out.yy[c] = ((f[grid.index(ix, yp)] - fc) + (f[grid.index(ix, ym)] - fc)) * inv_h2;
        out.xy[c] = (f[grid.index(xp, yp)] - f[grid.index(xp, ym)] -
                     f[grid.index(xm, yp)] + f[grid.index(xm, ym)]) *
                    inv_4h2;
      }
    }
    return out;
  }

  // Sphere frame Hessian of an axisymmetric field:
  //   xx = f_tt / r^2,  yy = cot(theta) f_t / r^2,  xy = 0.
  const double inv_h2r2 = 1.0 / (h * h * r_squared);
  const double inv_2hr2 = 1.0 / (2.0 * h * r_squared);
  for (int j = 0; j < n; ++j) {
    const double fp = sphere_ghost(f, j + 1);
    const double fm = sphere_ghost(f, j - 1);
    out.xx[j] = ((fp - f[j]) + (fm - f[j])) * inv_h2r2;
    const double theta = grid.theta(j);
    out.yy[j] = (fp - fm) * inv_2hr2 * (std::cos(theta) / std::sin(theta));
  }
  return out;
}

ScalarField min_eigenvalue(const FrameHessian& hess, double added_identity) {
  ScalarField out;
  out.values.assign(hess.xx.size(), 0.0);
  if (hess.dim == 1) {
    for (std::size_t i = 0; i < hess.xx.size(); ++i) {
      out.values[i] = hess.xx[i] + added_identity;
    }
    return out;
  }
  require(hess.xy.size() == hess.xx.size() && hess.yy.size() == hess.xx.size(),
          "hessian component sizes mismatch");
  for (std::size_t i = 0; i < hess.xx.size(); ++i) {
    const double mean = 0.5 * (hess.xx[i] + hess.yy[i]);
    const double shift = 0.5 * (hess.xx[i] - hess.yy[i]);
    const double disc = std::sqrt(shift * shift + hess.xy[i] * hess.xy[i]);
    out.values[i] = mean - disc + added_identity;
  }
  return out;
}

double curvature_scalar_round_sphere(double r_squared) {
  require(r_squared > 0.0, "metric scale r_squared must be positive");
  return 2.0 / r_squared;
}

CurvatureInfo curvature(const ManifoldGrid& grid, double r_squared) {
  require(r_squared > 0.0, "metric scale r_squared must be positive");
  CurvatureInfo info;
  if (grid.kind() == GridKind::SphereAxisym) {
    info.scalar = curvature_scalar_round_sphere(r_squared);
    info.ricci_min_eigenvalue = 1.0 / r_squared;
    info.sectional_min = 1.0 / r_squared;
  }
  return info;
}

double geodesic_distance(const ManifoldGrid& grid, std::size_t p, std::size_t q,
                         double r_squared) {
  require(p < grid.node_count() && q < grid.node_count(),
          "geodesic_distance: node index out of range");
  require(r_squared > 0.0, "metric scale r_squared must be positive");
  const std::array<double, 2> a = grid.node_position(p);
  const std::array<double, 2> b = grid.node_position(q);
  if (grid.kind() == GridKind::SphereAxisym) {
    return std::sqrt(r_squared) * std::abs(a[0] - b[0]);
  }
  const double L = grid.side_length();
  double sum = 0.0;
  for (int d = 0; d < grid.dimension(); ++d) {
    double diff = std::abs(a[d] - b[d]);
    diff = std::min(diff, L - diff);
    sum += diff * diff;
  }
  return std::sqrt(sum);
}

double sample_linear(const ManifoldGrid& grid, const ScalarField& field,
                     const std::array<double, 2>& point) {
  require(field.values.size() == grid.node_count(),
          "sample_linear: field size does not match grid");
  const int n = grid.points_per_axis();
  const double h = grid.spacing();
  const std::vector<double>& f = field.values;

  if (grid.kind() == GridKind::SphereAxisym) {
    // Cell-centered nodes with even extension across the poles.
    const double u = point[0] / h - 0.5;
    const int j0 = static_cast<int>(std::floor(u));
    const double w = u - j0;
    return (1.0 - w) * sphere_ghost(f, j0) + w * sphere_ghost(f, j0 + 1);
  }

  const double L = grid.side_length();
  auto wrap_coord = [&](double x) {
    double y = std::fmod(x, L);
    if (y < 0.0) y += L;
    return y;
  };
  if (grid.dimension() == 1) {
    const double u = wrap_coord(point[0]) / h;
    const int i0 = static_cast<int>(std::floor(u)) % n;
    const int i1 = (i0 + 1 == n) ? 0 : i0 + 1;
    const double w = u - std::floor(u);
    return (1.0 - w) * f[i0] + w * f[i1];
  }
  const double ux = wrap_coord(point[0]) / h;
  const double uy = wrap_coord(point[1]) / h;
  const int ix0 = static_cast<int>(std::floor(ux)) % n;
  const int iy0 = static_cast<int>(std::floor(uy)) % n;
  const int ix1 = (ix0 + 1 == n) ? 0 : ix0 + 1;
  const int iy1 = (iy0 + 1 == n) ? 0 : iy0 + 1;
  const double wx = ux - std::floor(ux);
  const double wy = uy - std::floor(uy);
  return (1.0 - wx) * ((1.0 - wy) * f[grid.index(ix0, iy0)] + wy * f[grid.index(ix0, iy1)]) +
         wx * ((1.0 - wy) * f[grid.index(ix1, iy0)] + wy * f[grid.index(ix1, iy1)]);
}

}  // namespace harnacklab
