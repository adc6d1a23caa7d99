#pragma once

#include <array>
#include <cstddef>
#include <vector>

namespace harnacklab {

enum class GridKind { TorusPeriodic, SphereAxisym };

/// Pointwise curvature constants of a model geometry at a fixed metric scale.
/// All three vanish on the flat torus; on a round sphere of squared radius
/// r2 they are scalar = 2/r2 and ricci_min = sectional_min = 1/r2.
struct CurvatureInfo {
  double scalar = 0.0;
  double ricci_min_eigenvalue = 0.0;
  double sectional_min = 0.0;
};

/// One scalar sample per grid node, tagged with the simulation time the
/// samples belong to. Node order is row-major over grid axes.
struct ScalarField {
  std::vector<double> values;
  double time = 0.0;

  std::size_t size() const { return values.size(); }
};

/// Uniform node layout on either a flat torus (1 or 2 periodic axes) or the
/// colatitude interval of a round sphere restricted to axisymmetric fields.
///
/// Torus axis nodes sit at x_i = i*h with h = side_length/n, i in [0, n).
/// Sphere nodes are cell-centered, theta_j = (j + 1/2)*pi/n, which keeps both
/// poles off the grid; the pole cell faces carry zero flux by symmetry.
class ManifoldGrid {
 public:
  GridKind kind() const { return kind_; }

  /// Manifold dimension: 1 or 2 for the torus, always 2 for the sphere.
  int dimension() const { return dim_; }

  /// Number of grid axes the storage actually varies over (sphere fields are
  /// axisymmetric, so the sphere stores a single theta axis).
  int storage_axes() const { return kind_ == GridKind::SphereAxisym ? 1 : dim_; }

  int points_per_axis() const { return n_; }
  std::size_t node_count() const { return nodes_; }

  /// Coordinate spacing: side_length/n on the torus, pi/n in colatitude.
  double spacing() const { return spacing_; }

  double side_length() const { return side_length_; }

  /// Colatitude of sphere node j.
  double theta(int j) const { return (j + 0.5) * spacing_; }

  /// Row-major flat index of a 2-D torus node.
  std::size_t index(int ix, int iy) const {
    return static_cast<std::size_t>(ix) * n_ + iy;
  }

  /// Coordinates of a node: (x) or (x, y) on the torus, (theta) on the sphere.
  std::array<double, 2> node_position(std::size_t idx) const;

  friend ManifoldGrid build_torus(int dim, int points_per_axis, double side_length);
  friend ManifoldGrid build_sphere(int n_theta);

 private:
  ManifoldGrid() = default;

  GridKind kind_ = GridKind::TorusPeriodic;
  int dim_ = 1;
  int n_ = 0;
  std::size_t nodes_ = 0;
  double side_length_ = 0.0;
  double spacing_ = 0.0;
};

/// Flat periodic grid. dim must be 1 or 2, points_per_axis >= 8,
/// side_length > 0. Throws std::invalid_argument otherwise.
ManifoldGrid build_torus(int dim, int points_per_axis, double side_length);

/// Axisymmetric colatitude grid on the unit-parameter sphere; the metric
/// scale enters through r_squared arguments of the operators. n_theta >= 8.
ManifoldGrid build_sphere(int n_theta);

/// Orthonormal-frame gradient components at every node. comp1 is identically
/// zero on 1-D grids and on axisymmetric sphere fields.
struct FrameGradient {
  int dim = 1;
  std::vector<double> comp0;
  std::vector<double> comp1;
};

/// Symmetric orthonormal-frame Hessian at every node. For 1-D torus grids
/// only xx is meaningful; on the sphere xx is the colatitude-colatitude entry,
/// yy the azimuthal one, and xy vanishes by axisymmetry.
struct FrameHessian {
  int dim = 1;
  std::vector<double> xx;
  std::vector<double> xy;
  std::vector<double> yy;
};

/// Laplace-Beltrami operator at metric scale r_squared (ignored on the
/// torus). Second-order stencils: periodic central differences on the torus,
/// conservative flux form with zero pole flux on the sphere.
ScalarField laplacian(const ManifoldGrid& grid, const ScalarField& field,
                      double r_squared);

/// Orthonormal-frame gradient, central differences.
FrameGradient gradient(const ManifoldGrid& grid, const ScalarField& field,
                       double r_squared);

/// Squared norm of the frame gradient.
ScalarField gradient_norm_sq(const ManifoldGrid& grid, const ScalarField& field,
                             double r_squared);

/// Frame Hessian, central differences (mixed entry via the 4-point cross
/// stencil on the 2-D torus).
FrameHessian hessian_frame(const ManifoldGrid& grid, const ScalarField& field,
                           double r_squared);

/// Smallest eigenvalue per node of hess + added_identity * I, closed form
/// for the 1x1 and 2x2 cases.
ScalarField min_eigenvalue(const FrameHessian& hess, double added_identity);

/// Scalar curvature 2/r^2 of a round 2-sphere with squared radius r_squared.
double curvature_scalar_round_sphere(double r_squared);

CurvatureInfo curvature(const ManifoldGrid& grid, double r_squared);

/// Geodesic distance between two grid nodes at metric scale r_squared:
/// per-axis wraparound minimum combined Euclidean on the torus,
/// r * |theta_p - theta_q| on the sphere.
double geodesic_distance(const ManifoldGrid& grid, std::size_t p, std::size_t q,
                         double r_squared);

/// Linear (bilinear on the 2-D torus) interpolation of a field at an
/// off-node point given in grid coordinates: (x[, y]) or (theta).
double sample_linear(const ManifoldGrid& grid, const ScalarField& field,
                     const std::array<double, 2>& point);

}  // namespace harnacklab
