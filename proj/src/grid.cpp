#include "bbmlab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace bbmlab {

Grid::Grid(int dim_, const Vec& lo_, const Vec& hi_, double h_)
    : dim(dim_), lo(lo_), hi(hi_), h(h_) {
  if (dim < 1 || dim > 2) throw InvalidInputError("Grid: dim must be 1 or 2");
  if (!(h > 0.0)) throw InvalidInputError("Grid: spacing h must be positive");
  n = {0, 1};
  for (int a = 0; a < dim; ++a) {
    const double len = hi[a] - lo[a];
    if (!(len > 0.0)) throw InvalidInputError("Grid: hi must exceed lo");
    const double cells = len / h;
    const int nc = static_cast<int>(std::llround(cells));
    if (nc < 1 || std::abs(cells - nc) > 1e-9 * std::max(1.0, cells))
      throw InvalidInputError("Grid: hi - lo must be an integer multiple of h");
    n[a] = nc;
    hi[a] = lo[a] + nc * h;  // enforce the invariant exactly
  }
}

Grid Grid::make_1d(double lo, double hi, double h) {
  return Grid(1, Vec{lo, 0.0}, Vec{hi, 0.0}, h);
}

Grid Grid::make_2d(const Vec& lo, const Vec& hi, double h) {
  return Grid(2, lo, hi, h);
}

bool Grid::same_layout(const Grid& other) const {
  return dim == other.dim && h == other.h && n == other.n && lo[0] == other.lo[0] &&
         (dim < 2 || lo[1] == other.lo[1]);
}

void GridFunction::check_finite() const {
  for (double v : values)
    if (!std::isfinite(v)) throw InvalidInputError("GridFunction: non-finite value");
}

void GridFunction::check_support_radius() const {
  if (!support_radius) return;
  const double R = *support_radius;
  if (!(R > 0.0)) throw InvalidInputError("GridFunction: support_radius must be positive");
  for (int i = 0; i < grid.node_count(); ++i) {
    if (values[static_cast<size_t>(i)] == 0.0) continue;
    if (norm(grid.node(i), grid.dim) > R + 1e-12)
      throw InvalidInputError("GridFunction: nonzero value outside stated support ball");
  }
}

std::optional<std::array<std::array<int, 2>, 2>> GridFunction::nonzero_hull() const {
  std::array<std::array<int, 2>, 2> hull{{{grid.n[0], -1}, {grid.n[1], -1}}};
  bool any = false;
  for (int i0 = 0; i0 < grid.n[0]; ++i0)
    for (int i1 = 0; i1 < grid.n[1]; ++i1)
      if (values[static_cast<size_t>(grid.index(i0, i1))] != 0.0) {
        any = true;
        hull[0][0] = std::min(hull[0][0], i0);
        hull[0][1] = std::max(hull[0][1], i0);
        hull[1][0] = std::min(hull[1][0], i1);
        hull[1][1] = std::max(hull[1][1], i1);
      }
  if (!any) return std::nullopt;
  return hull;
}

GridFunction sample(const Grid& g, const std::function<double(const Vec&)>& f) {
  GridFunction u(g);
  for (int i = 0; i < g.node_count(); ++i) u[i] = f(g.node(i));
  return u;
}

DomainMask DomainMask::from_predicate(const Grid& g,
                                      const std::function<bool(const Vec&)>& pred) {
  DomainMask m(g);
  for (int i = 0; i < g.node_count(); ++i)
    if (pred(g.node(i))) m.inside[static_cast<size_t>(i)] = 1;
  m.check_nonempty();
  return m;
}

DomainMask DomainMask::full(const Grid& g) {
  DomainMask m(g);
  std::fill(m.inside.begin(), m.inside.end(), std::uint8_t{1});
  return m;
}

int DomainMask::count() const {
  int c = 0;
  for (auto b : inside) c += (b != 0);
  return c;
}

void DomainMask::check_nonempty() const {
  if (count() == 0) throw InvalidInputError("DomainMask: no node inside");
}

double lp_norm(const GridFunction& u, double p) {
  if (!(p >= 1.0)) throw InvalidInputError("lp_norm: p must be >= 1");
  u.check_finite();
  double s = 0.0;
  for (double v : u.values) s += std::pow(std::abs(v), p);
  return std::pow(u.grid.cell_measure() * s, 1.0 / p);
}

double weighted_lp_norm(const GridFunction& u, double p, const GridFunction& diag_weight) {
  if (!(p >= 1.0)) throw InvalidInputError("weighted_lp_norm: p must be >= 1");
  if (!u.grid.same_layout(diag_weight.grid))
    throw InvalidInputError("weighted_lp_norm: weight lives on a different grid");
  u.check_finite();
  double s = 0.0;
  for (size_t i = 0; i < u.values.size(); ++i) {
    const double w = diag_weight.values[i];
    if (w < 0.0) throw InvalidInputError("weighted_lp_norm: negative weight node");
    s += w * std::pow(std::abs(u.values[i]), p);
  }
  return std::pow(u.grid.cell_measure() * s, 1.0 / p);
}

double integral(const GridFunction& u) {
  double s = 0.0;
  for (double v : u.values) s += v;
  return u.grid.cell_measure() * s;
}

std::array<std::vector<double>, 2> discrete_gradient(const GridFunction& u) {
  const Grid& g = u.grid;
  std::array<std::vector<double>, 2> grad;
  for (int a = 0; a < g.dim; ++a)
    grad[a].assign(static_cast<size_t>(g.node_count()), 0.0);

  const double inv2h = 1.0 / (2.0 * g.h);
  const double invh = 1.0 / g.h;
  for (int i0 = 0; i0 < g.n[0]; ++i0)
    for (int i1 = 0; i1 < g.n[1]; ++i1) {
      const int id = g.index(i0, i1);
      {
        double d;
        if (i0 == 0)
          d = (u.at_or_zero(1, i1) - u.at_or_zero(0, i1)) * invh;
        else if (i0 == g.n[0] - 1)
          d = (u.at_or_zero(i0, i1) - u.at_or_zero(i0 - 1, i1)) * invh;
        else
          d = (u.at_or_zero(i0 + 1, i1) - u.at_or_zero(i0 - 1, i1)) * inv2h;
        grad[0][static_cast<size_t>(id)] = d;
      }
      if (g.dim == 2) {
        double d;
        if (i1 == 0)
          d = (u.at_or_zero(i0, 1) - u.at_or_zero(i0, 0)) * invh;
        else if (i1 == g.n[1] - 1)
          d = (u.at_or_zero(i0, i1) - u.at_or_zero(i0, i1 - 1)) * invh;
        else
          d = (u.at_or_zero(i0, i1 + 1) - u.at_or_zero(i0, i1 - 1)) * inv2h;
        grad[1][static_cast<size_t>(id)] = d;
      }
    }
  // Single-node axes degenerate to a zero derivative.
  return grad;
}

double directional_seminorm(const GridFunction& u, const Vec& sigma, double p,
                            const GridFunction& diag_weight) {
  if (!(p >= 1.0)) throw InvalidInputError("directional_seminorm: p must be >= 1");
  const double slen = norm(sigma, u.grid.dim);
  if (std::abs(slen - 1.0) > 1e-9)
    throw InvalidInputError("directional_seminorm: sigma must be a unit vector");
  if (!u.grid.same_layout(diag_weight.grid))
    throw InvalidInputError("directional_seminorm: weight grid mismatch");
  const auto grad = discrete_gradient(u);
  double s = 0.0;
  for (size_t i = 0; i < u.values.size(); ++i) {
    const double w = diag_weight.values[i];
    if (w < 0.0) throw InvalidInputError("directional_seminorm: negative weight node");
    double d = sigma[0] * grad[0][i];
    if (u.grid.dim == 2) d += sigma[1] * grad[1][i];
    s += w * std::pow(std::abs(d), p);
  }
  return u.grid.cell_measure() * s;
}

double mollifier_eta(const Vec& x, int dim) {
  double r2 = 0.0;
  for (int a = 0; a < dim; ++a) r2 += x[a] * x[a];
  if (r2 >= 1.0) return 0.0;
  const double t = 1.0 - r2;
  return mollifier_sup(dim) * t * t;
}

double mollifier_sup(int dim) {
  // Unit mass: int (1-|x|^2)^2 over B_1 is 16/15 (N=1) and pi/3 (N=2).
  return dim == 1 ? 15.0 / 16.0 : 3.0 / M_PI;
}

double unit_ball_volume(int dim) { return dim == 1 ? 2.0 : M_PI; }

GridFunction mollify(const GridFunction& u, int j) {
  if (j < 1) throw InvalidInputError("mollify: j must be >= 1");
  const Grid& g = u.grid;
  const double radius = 1.0 / j;
  for (int a = 0; a < g.dim; ++a)
    if (2.0 * radius > g.hi[a] - g.lo[a])
      throw DomainTooSmallError("mollify: mollifier support exceeds the grid box");

  const int reach = static_cast<int>(std::floor(radius / g.h));
  std::vector<double> stencil;
  std::vector<std::array<int, 2>> offsets;
  double mass = 0.0;
  for (int m0 = -reach; m0 <= reach; ++m0) {
    const int m1lo = g.dim == 2 ? -reach : 0;
    const int m1hi = g.dim == 2 ? reach : 0;
    for (int m1 = m1lo; m1 <= m1hi; ++m1) {
      Vec z{m0 * g.h * j, m1 * g.h * j};
      const double v = mollifier_eta(z, g.dim);
      if (v > 0.0) {
        stencil.push_back(v);
        offsets.push_back({m0, m1});
        mass += v;
      }
    }
  }
  // The j-th stencil always retains the center node, so mass > 0.
  for (double& s : stencil) s /= mass;

  GridFunction out(g);
  out.support_radius = u.support_radius ? std::optional<double>(*u.support_radius + radius)
                                        : std::nullopt;
  for (int i0 = 0; i0 < g.n[0]; ++i0)
    for (int i1 = 0; i1 < g.n[1]; ++i1) {
      double acc = 0.0;
      for (size_t m = 0; m < stencil.size(); ++m)
        acc += stencil[m] * u.at_or_zero(i0 - offsets[m][0], i1 - offsets[m][1]);
      out[g.index(i0, i1)] = acc;
    }
  return out;
}

void write_csv(const GridFunction& u, std::ostream& out) {
  const Grid& g = u.grid;
  out.precision(17);
  out << "# " << g.dim << "," << g.h;
  for (int a = 0; a < g.dim; ++a) out << "," << g.lo[a];
  for (int a = 0; a < g.dim; ++a) out << "," << g.n[a];
  out << "\n";
  for (double v : u.values) out << v << "\n";
}

void write_csv_file(const GridFunction& u, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open for writing: " + path);
  write_csv(u, f);
  if (!f.good()) throw IoError("write failed: " + path);
}

GridFunction read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.size() < 2 || line[0] != '#')
    throw IoError("GridFunction CSV: missing header");
  std::istringstream hs(line.substr(1));
  std::vector<double> fields;
  std::string tok;
  while (std::getline(hs, tok, ',')) fields.push_back(std::stod(tok));
  if (fields.size() < 4) throw IoError("GridFunction CSV: short header");
  const int dim = static_cast<int>(fields[0]);
  if (dim < 1 || dim > 2 || fields.size() != static_cast<size_t>(2 + 2 * dim))
    throw IoError("GridFunction CSV: malformed header");
  const double h = fields[1];
  Vec lo{fields[2], dim == 2 ? fields[3] : 0.0};
  std::array<int, 2> n{static_cast<int>(fields[2 + static_cast<size_t>(dim)]), 1};
  if (dim == 2) n[1] = static_cast<int>(fields[5]);
  Vec hi{lo[0] + n[0] * h, lo[1] + n[1] * h};
  Grid g(dim, lo, hi, h);
  GridFunction u(g);
  for (int i = 0; i < g.node_count(); ++i) {
    if (!std::getline(in, line)) throw IoError("GridFunction CSV: truncated values");
    u[i] = std::stod(line);
  }
  return u;
}

GridFunction read_csv_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open for reading: " + path);
  return read_csv(f);
}

}  // namespace bbmlab
