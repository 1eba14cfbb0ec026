#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "bbmlab/errors.hpp"

namespace bbmlab {

// Point in R^N, N <= 2. Only the first dim entries are meaningful.
using Vec = std::array<double, 2>;

inline double norm(const Vec& v, int dim) {
  double s = 0.0;
  for (int a = 0; a < dim; ++a) s += v[a] * v[a];
  return std::sqrt(s);
}

inline double dot(const Vec& a, const Vec& b, int dim) {
  double s = 0.0;
  for (int d = 0; d < dim; ++d) s += a[d] * b[d];
  return s;
}

/// Uniform cell-centered Cartesian grid on a box in R^N, N in {1,2}.
/// Nodes sit at cell centers: x_i = lo + (i + 1/2) h, so the quadrature
/// weight h^N per node tiles the box exactly (midpoint rule).
struct Grid {
  int dim = 1;
  Vec lo{0.0, 0.0};
  Vec hi{0.0, 0.0};
  double h = 0.0;
  std::array<int, 2> n{0, 1};  // cells (= nodes) per axis; n[1] = 1 in 1D

  Grid() = default;
  Grid(int dim_, const Vec& lo_, const Vec& hi_, double h_);

  static Grid make_1d(double lo, double hi, double h);
  static Grid make_2d(const Vec& lo, const Vec& hi, double h);

  int node_count() const { return n[0] * n[1]; }
  int index(int i0, int i1 = 0) const { return i0 * n[1] + i1; }

  Vec node(int flat) const {
    const int i0 = flat / n[1];
    const int i1 = flat % n[1];
    Vec x{lo[0] + (i0 + 0.5) * h, 0.0};
    if (dim == 2) x[1] = lo[1] + (i1 + 0.5) * h;
    return x;
  }

  double cell_measure() const {
    double m = h;
    for (int a = 1; a < dim; ++a) m *= h;
    return m;
  }

  bool same_layout(const Grid& other) const;
};

/// Real-valued samples on a Grid; u is extended by zero outside the box,
/// so every GridFunction represents a compactly supported element of L^p.
struct GridFunction {
  Grid grid;
  std::vector<double> values;
  std::optional<double> support_radius;  // membership in L^p_R (ball about 0)

  GridFunction() = default;
  explicit GridFunction(const Grid& g, double fill = 0.0)
      : grid(g), values(static_cast<size_t>(g.node_count()), fill) {}

  double& operator[](int i) { return values[static_cast<size_t>(i)]; }
  double operator[](int i) const { return values[static_cast<size_t>(i)]; }

  /// Value with zero extension beyond the box (per-axis indices).
  double at_or_zero(int i0, int i1 = 0) const {
    if (i0 < 0 || i0 >= grid.n[0] || i1 < 0 || i1 >= grid.n[1]) return 0.0;
    return values[static_cast<size_t>(grid.index(i0, i1))];
  }

  void check_finite() const;
  void check_support_radius() const;

  /// Smallest per-axis index box containing all nonzero values, or nullopt
  /// if u is identically zero on the nodes.
  std::optional<std::array<std::array<int, 2>, 2>> nonzero_hull() const;
};

GridFunction sample(const Grid& g, const std::function<double(const Vec&)>& f);

/// Node mask representing a bounded open set Omega inside the grid box.
struct DomainMask {
  Grid grid;
  std::vector<std::uint8_t> inside;

  DomainMask() = default;
  explicit DomainMask(const Grid& g)
      : grid(g), inside(static_cast<size_t>(g.node_count()), 0) {}

  static DomainMask from_predicate(const Grid& g,
                                   const std::function<bool(const Vec&)>& pred);
  static DomainMask full(const Grid& g);

  bool contains(int flat) const { return inside[static_cast<size_t>(flat)] != 0; }
  int count() const;
  void check_nonempty() const;
};

// --- L^p machinery ------------------------------------------------------

double lp_norm(const GridFunction& u, double p);
double weighted_lp_norm(const GridFunction& u, double p, const GridFunction& diag_weight);

/// Discrete integral h^N sum u_i (signed).
double integral(const GridFunction& u);

/// Centered differences in the interior, one-sided at the box boundary.
/// Component a of the gradient at node i is result[a][i].
std::array<std::vector<double>, 2> discrete_gradient(const GridFunction& u);

/// h^N sum_i diag_weight_i |sigma . grad u_i|^p. For p = 1 this is the
/// discrete weighted total variation of sigma . Du (Lipschitz-u surrogate).
double directional_seminorm(const GridFunction& u, const Vec& sigma, double p,
                            const GridFunction& diag_weight);

// --- Mollification ------------------------------------------------------

/// Mollifier profile eta(x) = c_N (1-|x|^2)^2 on |x|<1, unit mass.
double mollifier_eta(const Vec& x, int dim);
double mollifier_sup(int dim);  // ||eta||_inf = c_N
double unit_ball_volume(int dim);

/// Discrete convolution with eta_j = j^N eta(j .), stencil renormalized to
/// unit discrete mass; u is extended by zero. Support grows by at most 1/j.
GridFunction mollify(const GridFunction& u, int j);

// --- Serialization ------------------------------------------------------

/// CSV: header "# dim,h,lo...,n..." then one node value per row, row-major.
void write_csv(const GridFunction& u, std::ostream& out);
void write_csv_file(const GridFunction& u, const std::string& path);
GridFunction read_csv(std::istream& in);
GridFunction read_csv_file(const std::string& path);

}  // namespace bbmlab
