#include "bbmlab/energy.hpp"

#include <algorithm>
#include <cmath>

namespace bbmlab {

namespace detail {

double offset_kernel_value(const Kernel& k, const Vec& z, double p, bool quotient,
                           double guard) {
  const double v = k.eval(z);
  if (!(v >= 0.0) || !std::isfinite(v))
    throw SingularityError("kernel value invalid at offset |z| = " +
                           std::to_string(norm(z, k.dim)));
  if (quotient) return v;
  const double r = norm(z, k.dim);
  const double K = v / std::pow(r, p);
  if (!std::isfinite(K) || K > guard)
    throw SingularityError("kernel/|z|^p overflow at offset |z| = " + std::to_string(r));
  return K;
}

double angular_lp_factor(int dim, double p) {
  if (dim == 1) return 2.0;
  if (p == 2.0) return M_PI;
  if (p == 1.0) return 4.0;
  return adaptive_integrate(
      [p](double t) { return std::pow(std::abs(std::cos(t)), p); }, 0.0, 2.0 * M_PI);
}

std::optional<double> near_cell_factor(const Kernel& k, int dim, double h, double p,
                                       bool quotient) {
  if (!k.power_law) return std::nullopt;
  const double moment = quotient ? p + dim - 1 : dim - 1;
  const double mom = power_moment(*k.power_law, 0.0, h, static_cast<double>(moment));
  return angular_lp_factor(dim, p) * mom;
}

}  // namespace detail

namespace {

double pow_p(double x, double p) {
  if (p == 2.0) return x * x;
  if (p == 1.0) return std::abs(x);
  return std::pow(std::abs(x), p);
}

double dpow_p(double x, double p) {  // d/dx |x|^p (subgradient 0 at x = 0 for p = 1)
  if (p == 2.0) return 2.0 * x;
  if (x == 0.0) return 0.0;
  if (p == 1.0) return x > 0.0 ? 1.0 : -1.0;
  return p * std::pow(std::abs(x), p - 1.0) * (x > 0.0 ? 1.0 : -1.0);
}

// Weight evaluation bound to one family member (or the limit weight), with
// per-node factor tables for product weights on the extended lattice.
struct BoundWeight {
  WeightFamily::Kind kind = WeightFamily::Kind::Unit;
  const WeightFamily* wf = nullptr;
  std::optional<double> index;
  const Grid* g = nullptr;
  int pad0 = 0, pad1 = 0;
  std::vector<double> fact;  // product factors, extended index space
  int ext1 = 1;

  static BoundWeight bind(const WeightFamily& wf, std::optional<double> index,
                          const Grid& g, int reach) {
    BoundWeight b;
    b.kind = wf.kind;
    b.wf = &wf;
    b.index = index;
    b.g = &g;
    b.pad0 = reach;
    b.pad1 = g.dim == 2 ? reach : 0;
    if (wf.kind == WeightFamily::Kind::Product) {
      const int m0 = g.n[0] + 2 * b.pad0;
      const int m1 = g.dim == 2 ? g.n[1] + 2 * b.pad1 : 1;
      b.ext1 = m1;
      b.fact.resize(static_cast<size_t>(m0) * m1);
      for (int i0 = -b.pad0; i0 < g.n[0] + b.pad0; ++i0)
        for (int i1 = (g.dim == 2 ? -b.pad1 : 0); i1 < (g.dim == 2 ? g.n[1] + b.pad1 : 1);
             ++i1) {
          Vec x{g.lo[0] + (i0 + 0.5) * g.h,
                g.dim == 2 ? g.lo[1] + (i1 + 0.5) * g.h : 0.0};
          const double f = index ? wf.factor_k(*index, x) : wf.factor_limit(x);
          b.fact[static_cast<size_t>(i0 + b.pad0) * m1 + (i1 + b.pad1)] = f;
        }
    }
    return b;
  }

  double factor(int i0, int i1) const {
    return fact[static_cast<size_t>(i0 + pad0) * ext1 + (i1 + pad1)];
  }

  Vec pos(int i0, int i1) const {
    return Vec{g->lo[0] + (i0 + 0.5) * g->h,
               g->dim == 2 ? g->lo[1] + (i1 + 0.5) * g->h : 0.0};
  }

  // Ordered pair (x_i, x_j).
  double operator()(int i0, int i1, int j0, int j1) const {
    switch (kind) {
      case WeightFamily::Kind::Unit:
        return 1.0;
      case WeightFamily::Kind::Product:
        return factor(i0, i1) * factor(j0, j1);
      case WeightFamily::Kind::General:
        break;
    }
    return index ? wf->eval_k(*index, pos(i0, i1), pos(j0, j1))
                 : wf->eval_limit(pos(i0, i1), pos(j0, j1));
  }

  double diag(int i0, int i1) const {
    if (kind == WeightFamily::Kind::Unit) return 1.0;
    if (kind == WeightFamily::Kind::Product) {
      const double f = factor(i0, i1);
      return f * f;
    }
    const Vec x = pos(i0, i1);
    return index ? wf->eval_k(*index, x, x) : wf->eval_limit(x, x);
  }
};

struct Bands {
  double near = 0.0, mid = 0.0, far = 0.0;
};

struct ScanSetup {
  const GridFunction* u = nullptr;
  const Kernel* kernel = nullptr;
  double p = 2.0;
  bool quotient = false;
  const DomainMask* mask = nullptr;  // both-endpoint masked A x A sums
  EnergyOptions opts;
  BoundWeight weight;
  int reach = 0;  // truncation in lattice steps
};

int lattice_reach(const Grid& g, double trunc) {
  return static_cast<int>(std::floor(trunc / g.h + 1e-9));
}

double effective_support_radius(const GridFunction& u) {
  if (u.support_radius) return *u.support_radius;
  const auto hull = u.nonzero_hull();
  if (!hull) return 0.0;
  double R = 0.0;
  const Grid& g = u.grid;
  for (int c0 : {(*hull)[0][0], (*hull)[0][1]})
    for (int c1 : {(*hull)[1][0], (*hull)[1][1]}) {
      Vec x{g.lo[0] + (c0 + 0.5) * g.h, g.dim == 2 ? g.lo[1] + (c1 + 0.5) * g.h : 0.0};
      R = std::max(R, norm(x, g.dim));
    }
  return R;
}

// 1D hot path: u values padded with `reach` zeros on both sides so that all
// extension pairs read plain array entries.
struct Padded1D {
  std::vector<double> v;
  int pad = 0;
  int n = 0;
  double at(int i) const { return v[static_cast<size_t>(i + pad)]; }
};

Padded1D pad_1d(const GridFunction& u, int reach) {
  Padded1D p;
  p.pad = reach;
  p.n = u.grid.n[0];
  p.v.assign(static_cast<size_t>(p.n + 2 * reach), 0.0);
  for (int i = 0; i < p.n; ++i) p.v[static_cast<size_t>(i + reach)] = u.values[static_cast<size_t>(i)];
  return p;
}

// i-ranges with a potentially nonzero term for signed offset d: the union of
// the hull and the hull shifted by -d, clipped to the padded index space.
std::vector<std::array<int, 2>> offset_ranges_1d(int h0, int h1, int d, int pad, int n) {
  std::array<int, 2> a{h0, h1}, b{h0 - d, h1 - d};
  if (b[0] < a[0]) std::swap(a, b);
  std::vector<std::array<int, 2>> out;
  if (b[0] <= a[1] + 1)
    out.push_back({a[0], std::max(a[1], b[1])});
  else {
    out.push_back(a);
    out.push_back(b);
  }
  for (auto& r : out) {
    r[0] = std::max(r[0], -pad);
    r[1] = std::min(r[1], n + pad - 1);
  }
  return out;
}

Bands scan_1d(const ScanSetup& s, std::vector<double>* grad) {
  const Grid& g = s.u->grid;
  const Padded1D up = pad_1d(*s.u, s.reach);
  const auto hull = s.u->nonzero_hull();
  Bands bands;
  if (!hull && !grad) return bands;
  const int h0 = hull ? (*hull)[0][0] : 0;
  const int h1 = hull ? (*hull)[0][1] : g.n[0] - 1;
  const double inv_delta = 1.0 / s.opts.delta;
  const double p = s.p;

  for (int ad = 1; ad <= s.reach; ++ad) {
    const double r = ad * g.h;
    for (int sign = 0; sign < 2; ++sign) {
      const int d = sign == 0 ? ad : -ad;
      const Vec z{d * g.h, 0.0};
      const double K =
          detail::offset_kernel_value(*s.kernel, z, p, s.quotient, s.opts.overflow_guard);
      if (K == 0.0 && !grad) continue;
      double inner = 0.0;
      if (s.mask) {
        const auto& inside = s.mask->inside;
        for (int i = std::max(0, -d); i < g.n[0] - std::max(0, d); ++i) {
          if (!inside[static_cast<size_t>(i)] || !inside[static_cast<size_t>(i + d)]) continue;
          const double diff = up.at(i + d) - up.at(i);
          const double w = s.weight(i, 0, i + d, 0);
          inner += w * pow_p(diff, p);
          if (grad) {
            const double gd = K * w * dpow_p(diff, p);
            (*grad)[static_cast<size_t>(i + d)] += gd;
            (*grad)[static_cast<size_t>(i)] -= gd;
          }
        }
      } else {
        for (const auto& range : offset_ranges_1d(h0, h1, d, up.pad, up.n)) {
          for (int i = range[0]; i <= range[1]; ++i) {
            const double diff = up.at(i + d) - up.at(i);
            if (diff == 0.0) continue;
            const double w = s.weight(i, 0, i + d, 0);
            inner += w * pow_p(diff, p);
            if (grad) {
              const double gd = K * w * dpow_p(diff, p);
              if (i + d >= 0 && i + d < up.n) (*grad)[static_cast<size_t>(i + d)] += gd;
              if (i >= 0 && i < up.n) (*grad)[static_cast<size_t>(i)] -= gd;
            }
          }
        }
      }
      const double contrib = K * inner;
      if (!std::isfinite(contrib) || contrib * g.h * g.h > s.opts.overflow_guard)
        throw SingularityError("energy cell overflow at offset |z| = " + std::to_string(r));
      if (r < s.opts.delta)
        bands.near += contrib;
      else if (r <= inv_delta)
        bands.mid += contrib;
      else
        bands.far += contrib;
    }
  }
  return bands;
}

Bands scan_2d(const ScanSetup& s, std::vector<double>* grad) {
  const Grid& g = s.u->grid;
  const auto hull = s.u->nonzero_hull();
  Bands bands;
  if (!hull && !grad) return bands;
  const int h00 = hull ? (*hull)[0][0] : 0, h01 = hull ? (*hull)[0][1] : g.n[0] - 1;
  const int h10 = hull ? (*hull)[1][0] : 0, h11 = hull ? (*hull)[1][1] : g.n[1] - 1;
  const double inv_delta = 1.0 / s.opts.delta;
  const double p = s.p;
  const double trunc2 = s.opts.truncation * s.opts.truncation * (1.0 + 1e-12);

  for (int d0 = -s.reach; d0 <= s.reach; ++d0)
    for (int d1 = -s.reach; d1 <= s.reach; ++d1) {
      if (d0 == 0 && d1 == 0) continue;
      const Vec z{d0 * g.h, d1 * g.h};
      const double r2 = z[0] * z[0] + z[1] * z[1];
      if (r2 > trunc2) continue;
      const double r = std::sqrt(r2);
      const double K =
          detail::offset_kernel_value(*s.kernel, z, p, s.quotient, s.opts.overflow_guard);
      if (K == 0.0 && !grad) continue;
      double inner = 0.0;
      const int lo0 = s.mask ? std::max(0, -d0) : std::min(h00, h00 - d0);
      const int hi0 = s.mask ? g.n[0] - 1 - std::max(0, d0) : std::max(h01, h01 - d0);
      const int lo1 = s.mask ? std::max(0, -d1) : std::min(h10, h10 - d1);
      const int hi1 = s.mask ? g.n[1] - 1 - std::max(0, d1) : std::max(h11, h11 - d1);
      for (int i0 = lo0; i0 <= hi0; ++i0)
        for (int i1 = lo1; i1 <= hi1; ++i1) {
          if (s.mask && (!s.mask->contains(g.index(i0, i1)) ||
                         !s.mask->contains(g.index(i0 + d0, i1 + d1))))
            continue;
          const double ui = s.u->at_or_zero(i0, i1);
          const double uj = s.u->at_or_zero(i0 + d0, i1 + d1);
          const double diff = uj - ui;
          if (diff == 0.0) continue;
          const double w = s.weight(i0, i1, i0 + d0, i1 + d1);
          inner += w * pow_p(diff, p);
          if (grad) {
            const double gd = K * w * dpow_p(diff, p);
            if (i0 + d0 >= 0 && i0 + d0 < g.n[0] && i1 + d1 >= 0 && i1 + d1 < g.n[1])
              (*grad)[static_cast<size_t>(g.index(i0 + d0, i1 + d1))] += gd;
            if (i0 >= 0 && i0 < g.n[0] && i1 >= 0 && i1 < g.n[1])
              (*grad)[static_cast<size_t>(g.index(i0, i1))] -= gd;
          }
        }
      const double contrib = K * inner;
      if (!std::isfinite(contrib))
        throw SingularityError("energy cell overflow at offset |z| = " + std::to_string(r));
      if (r < s.opts.delta)
        bands.near += contrib;
      else if (r <= inv_delta)
        bands.mid += contrib;
      else
        bands.far += contrib;
    }
  return bands;
}

// Near-cell Taylor term: Lambda * mom * h^N sum_i w_k(x_i,x_i) |grad u_i|^p.
double near_cell_sum(const GridFunction& u, const BoundWeight& w, double p,
                     const DomainMask* mask, std::vector<double>* grad_out,
                     double factor, double hN) {
  const Grid& g = u.grid;
  const auto grad = discrete_gradient(u);
  double s = 0.0;
  for (int i0 = 0; i0 < g.n[0]; ++i0)
    for (int i1 = 0; i1 < g.n[1]; ++i1) {
      const int id = g.index(i0, i1);
      if (mask && !mask->contains(id)) continue;
      double mag2 = grad[0][static_cast<size_t>(id)] * grad[0][static_cast<size_t>(id)];
      if (g.dim == 2)
        mag2 += grad[1][static_cast<size_t>(id)] * grad[1][static_cast<size_t>(id)];
      const double mag = std::sqrt(mag2);
      if (mag == 0.0) continue;
      s += w.diag(i0, i1) * pow_p(mag, p);
      if (grad_out && mag > 0.0) {
        // d/du of |grad u_i|^p through the difference stencils
        const double c =
            factor * hN * w.diag(i0, i1) * p * std::pow(mag, p - 2.0);
        for (int a = 0; a < g.dim; ++a) {
          const double ga = grad[a][static_cast<size_t>(id)];
          const int i = a == 0 ? i0 : i1;
          const int na = g.n[a];
          auto add = [&](int j0, int j1, double v) {
            if (j0 >= 0 && j0 < g.n[0] && j1 >= 0 && j1 < g.n[1])
              (*grad_out)[static_cast<size_t>(g.index(j0, j1))] += v;
          };
          const double coef = c * ga;
          if (i == 0) {
            add(a == 0 ? 1 : i0, a == 0 ? i1 : 1, coef / g.h);
            add(i0, i1, -coef / g.h);
          } else if (i == na - 1) {
            add(i0, i1, coef / g.h);
            add(a == 0 ? i0 - 1 : i0, a == 0 ? i1 : i1 - 1, -coef / g.h);
          } else {
            add(a == 0 ? i0 + 1 : i0, a == 0 ? i1 : i1 + 1, coef / (2.0 * g.h));
            add(a == 0 ? i0 - 1 : i0, a == 0 ? i1 : i1 - 1, -coef / (2.0 * g.h));
          }
        }
      }
    }
  return s;
}

struct EngineResult {
  EnergyBreakdown breakdown;
};

EngineResult run_engine(const GridFunction& u, const Kernel& kernel, const WeightFamily& wf,
                        std::optional<double> index, double p, bool quotient,
                        const DomainMask* mask, const EnergyOptions& opts,
                        std::vector<double>* grad) {
  if (!(p >= 1.0)) throw InvalidInputError("energy: p must be >= 1");
  u.check_finite();
  if (kernel.dim != u.grid.dim || wf.dim != u.grid.dim)
    throw InvalidInputError("energy: dimension mismatch between u, kernel, weight");
  const double Reff = effective_support_radius(u);
  if (opts.truncation < 2.0 * Reff - 1e-12)
    throw DomainTooSmallError("energy: truncation radius below twice the support radius");

  ScanSetup s;
  s.u = &u;
  s.kernel = &kernel;
  s.p = p;
  s.quotient = quotient;
  s.mask = mask;
  s.opts = opts;
  s.reach = lattice_reach(u.grid, opts.truncation);
  s.weight = BoundWeight::bind(wf, index, u.grid, s.reach);
  if (grad) grad->assign(static_cast<size_t>(u.grid.node_count()), 0.0);

  const Bands bands = u.grid.dim == 1 ? scan_1d(s, grad) : scan_2d(s, grad);
  const double h2N = u.grid.cell_measure() * u.grid.cell_measure();
  if (grad)
    for (double& v : *grad) v *= h2N;

  EnergyBreakdown b;
  b.delta = opts.delta;
  b.truncation_radius = opts.truncation;
  b.near_field = bands.near * h2N;
  b.mid_field = bands.mid * h2N;
  b.far_field = bands.far * h2N;

  const auto nc = detail::near_cell_factor(kernel, u.grid.dim, u.grid.h, p, quotient);
  if (nc) {
    const double corr =
        *nc * u.grid.cell_measure() *
        near_cell_sum(u, s.weight, p, mask, grad, *nc, u.grid.cell_measure());
    b.near_cell_correction = corr;
    b.near_field += corr;
  } else {
    b.near_cell_dropped = true;
  }
  b.total = b.near_field + b.mid_field + b.far_field;

  // Analytic bound on the part beyond truncation: zero for compactly
  // supported kernels inside the truncation ball, closed form for globally
  // valid power laws.
  if (kernel.support_radius && *kernel.support_radius <= opts.truncation) {
    b.tail_bound = 0.0;
  } else if (kernel.power_law && !std::isfinite(kernel.power_law->valid_radius)) {
    const double a = kernel.power_law->exponent + (quotient ? 0.0 : -p);
    const double e = a + u.grid.dim - 1.0;
    if (e < -1.0) {
      const double integral = -kernel.power_law->prefactor *
                              std::pow(opts.truncation, e + 1.0) / (e + 1.0);
      const double sphere = u.grid.dim == 1 ? 2.0 : 2.0 * M_PI;
      b.tail_bound = std::pow(2.0, p) * std::pow(lp_norm(u, p), p) * sphere * integral;
    } else {
      b.tail_bound = std::numeric_limits<double>::infinity();
    }
  }
  return {b};
}

}  // namespace

EnergyBreakdown nonlocal_energy(const GridFunction& u, const Kernel& rho,
                                const WeightFamily& wf, std::optional<double> index,
                                double p, const EnergyOptions& opts) {
  return run_engine(u, rho, wf, index, p, /*quotient=*/false, nullptr, opts, nullptr)
      .breakdown;
}

namespace detail {

double nonlocal_energy_with_gradient(const GridFunction& u, const Kernel& rho,
                                     const WeightFamily& wf, std::optional<double> index,
                                     double p, const DomainMask* mask,
                                     const EnergyOptions& opts, std::vector<double>& grad) {
  return run_engine(u, rho, wf, index, p, false, mask, opts, &grad).breakdown.total;
}

}  // namespace detail

double gagliardo_seminorm(const GridFunction& u, const Kernel& kappa,
                          const WeightFamily& wf, double p, const EnergyOptions& opts) {
  return run_engine(u, kappa, wf, std::nullopt, p, /*quotient=*/true, nullptr, opts,
                    nullptr)
      .breakdown.total;
}

double limit_energy(const GridFunction& u, const LimitMeasure& mu,
                    const DiagonalWeight& w0, double p) {
  mu.check_valid();
  if (mu.dim != u.grid.dim)
    throw InvalidInputError("limit_energy: measure dimension mismatch");
  if (mu.dim == 1) {
    return mu.atom_plus * directional_seminorm(u, Vec{1.0, 0.0}, p, w0) +
           mu.atom_minus * directional_seminorm(u, Vec{-1.0, 0.0}, p, w0);
  }
  double s = 0.0;
  for (size_t i = 0; i < mu.angles.size(); ++i) {
    if (mu.masses[i] == 0.0) continue;
    const Vec sigma{std::cos(mu.angles[i]), std::sin(mu.angles[i])};
    s += mu.masses[i] * directional_seminorm(u, sigma, p, w0);
  }
  return s;
}

JSpec JSpec::from_separable(const KernelFamily& kernels, const WeightFamily& weights,
                            double p, const DomainMask& domain, const Kernel& kappa_limit) {
  JSpec spec;
  spec.domain = domain;
  spec.separable = Separable{kernels, weights, p, kappa_limit};
  const KernelFamily kf = kernels;
  const WeightFamily wgt = weights;
  const Kernel kappa = kappa_limit;
  const int dim = domain.grid.dim;
  spec.eval_k = [kf, wgt, p, dim](double index, const Vec& x, const Vec& y) {
    Vec z{x[0] - y[0], x[1] - y[1]};
    const double r = norm(z, dim);
    if (r == 0.0) return 0.0;
    return kf.member(index).eval(z) * wgt.eval_k(index, x, y) / std::pow(r, p);
  };
  spec.eval_limit = [kappa, wgt, dim](const Vec& x, const Vec& y) {
    Vec z{x[0] - y[0], x[1] - y[1]};
    if (norm(z, dim) == 0.0) return 0.0;
    return kappa.eval(z) * wgt.eval_limit(x, y);
  };
  return spec;
}

double j_energy(const GridFunction& u, const JSpec& spec, std::optional<double> index,
                double p, const EnergyOptions& opts) {
  if (!(p >= 1.0)) throw InvalidInputError("j_energy: p must be >= 1");
  if (!u.grid.same_layout(spec.domain.grid))
    throw InvalidInputError("j_energy: u and domain grids differ");
  for (int i = 0; i < u.grid.node_count(); ++i)
    if (u.values[static_cast<size_t>(i)] != 0.0 && !spec.domain.contains(i))
      throw InvalidInputError("j_energy: u not supported in the domain A");

  if (spec.separable) {
    const Kernel k = spec.separable->kernels.member(index ? *index : 1.0);
    return run_engine(u, k, spec.separable->weights, index, p, false, &spec.domain, opts,
                      nullptr)
        .breakdown.total;
  }

  // General J: direct masked double sum over ordered pairs.
  u.check_finite();
  const Grid& g = u.grid;
  const int reach = lattice_reach(g, opts.truncation);
  double total = 0.0;
  for (int d0 = -reach; d0 <= reach; ++d0) {
    const int d1lo = g.dim == 2 ? -reach : 0;
    const int d1hi = g.dim == 2 ? reach : 0;
    for (int d1 = d1lo; d1 <= d1hi; ++d1) {
      if (d0 == 0 && d1 == 0) continue;
      Vec z{d0 * g.h, d1 * g.h};
      if (norm(z, g.dim) > opts.truncation * (1.0 + 1e-12)) continue;
      double inner = 0.0;
      for (int i0 = std::max(0, -d0); i0 < g.n[0] - std::max(0, d0); ++i0) {
        const int i1lo = g.dim == 2 ? std::max(0, -d1) : 0;
        const int i1hi = g.dim == 2 ? g.n[1] - std::max(0, d1) : 1;
        for (int i1 = i1lo; i1 < i1hi; ++i1) {
          const int ia = g.index(i0, i1), ib = g.index(i0 + d0, i1 + d1);
          if (!spec.domain.contains(ia) || !spec.domain.contains(ib)) continue;
          const double diff = u[ib] - u[ia];
          if (diff == 0.0) continue;
          const Vec xa = g.node(ia), xb = g.node(ib);
          const double J = index ? spec.eval_k(*index, xa, xb) : spec.eval_limit(xa, xb);
          inner += J * pow_p(diff, p);
        }
      }
      total += inner;
    }
  }
  return total * g.cell_measure() * g.cell_measure();
}

JConditionReport j_condition_check(const JSpec& spec, const std::vector<EpsDelta>& table,
                                   const std::vector<double>& indices, const PairNet& net) {
  if (indices.empty() || net.empty())
    throw InvalidInputError("j_condition_check: empty index sample or net");
  JConditionReport rep;
  const int dim = spec.domain.grid.dim;

  auto jk = [&](double k, const Vec& x, const Vec& y) { return spec.eval_k(k, x, y); };

  for (const EpsDelta& ed : table) {
    JConditionRow row;
    row.condition = "small-scale lower bound (eps=" + std::to_string(ed.eps) +
                    ", delta=" + std::to_string(ed.delta) + ")";
    const double required = 1.0 / (ed.eps * std::pow(ed.delta, dim));
    double worst = std::numeric_limits<double>::infinity();
    for (const auto& [x, y] : net) {
      Vec z{x[0] - y[0], x[1] - y[1]};
      const double r = norm(z, dim);
      if (r == 0.0 || r >= ed.delta) continue;
      for (double k : indices) {
        const double v = jk(k, x, y);
        if (v < worst) worst = v;
        if (v < required && row.pass) {
          row.pass = false;
          row.witness = "J_k(" + std::to_string(x[0]) + "," + std::to_string(y[0]) +
                        ") = " + std::to_string(v) + " < " + std::to_string(required) +
                        " at k = " + std::to_string(k);
        }
      }
    }
    row.observed = worst;
    rep.rows.push_back(row);
  }

  {
    JConditionRow row;
    row.condition = "liminf J_k >= J";
    double worst = std::numeric_limits<double>::infinity();
    for (const auto& [x, y] : net) {
      if (x[0] == y[0] && (dim == 1 || x[1] == y[1])) continue;
      const double Jlim = spec.eval_limit(x, y);
      const double Jlast = jk(indices.back(), x, y);
      const double margin = Jlast - Jlim;
      if (margin < worst) worst = margin;
      if (margin < -1e-9 * std::max(1.0, Jlim) && row.pass) {
        row.pass = false;
        row.witness = "J_last - J = " + std::to_string(margin) + " at (" +
                      std::to_string(x[0]) + "," + std::to_string(y[0]) + ")";
      }
    }
    row.observed = worst;
    rep.rows.push_back(row);
  }

  {
    JConditionRow row;
    row.condition = "dominated bound sup_k J_k <= C J";
    if (!spec.domination_constant) {
      row.applicable = false;
    } else {
      const double C = *spec.domination_constant;
      double worst = 0.0;
      for (const auto& [x, y] : net) {
        if (x[0] == y[0] && (dim == 1 || x[1] == y[1])) continue;
        const double Jlim = spec.eval_limit(x, y);
        for (double k : indices) {
          const double v = jk(k, x, y);
          const double excess = v - C * Jlim;
          if (excess > worst) worst = excess;
          if (excess > 1e-9 * std::max(1.0, C * Jlim) && row.pass) {
            row.pass = false;
            row.witness = "J_k = " + std::to_string(v) + " > C J = " +
                          std::to_string(C * Jlim) + " at k = " + std::to_string(k);
          }
        }
      }
      row.observed = worst;
    }
    rep.rows.push_back(row);
  }

  {
    JConditionRow row;
    row.condition = "monotone partition";
    if (!spec.monotone_plus || !spec.monotone_minus) {
      row.applicable = false;
    } else {
      for (const auto& [x, y] : net) {
        const bool plus = (*spec.monotone_plus)(x, y);
        const bool minus = (*spec.monotone_minus)(x, y);
        if (plus && minus) {
          row.pass = false;
          row.witness = "H_+ and H_- overlap at (" + std::to_string(x[0]) + "," +
                        std::to_string(y[0]) + ")";
          break;
        }
        for (size_t t = 0; t + 1 < indices.size(); ++t) {
          const double a = jk(indices[t], x, y);
          const double b = jk(indices[t + 1], x, y);
          if (plus && b < a - 1e-15 * std::abs(a)) {
            row.pass = false;
            row.witness = "J not nondecreasing on H_+ between k = " +
                          std::to_string(indices[t]) + " and " +
                          std::to_string(indices[t + 1]);
          }
          if (minus && b > a + 1e-15 * std::abs(a)) {
            row.pass = false;
            row.witness = "J not nonincreasing on H_- between k = " +
                          std::to_string(indices[t]) + " and " +
                          std::to_string(indices[t + 1]);
          }
        }
      }
    }
    rep.rows.push_back(row);
  }

  for (const auto& r : rep.rows) rep.all_pass = rep.all_pass && (r.pass || !r.applicable);
  return rep;
}

GridFunction sample_closed_form(const ClosedForm& f, const Grid& g) {
  GridFunction u(g);
  for (int i = 0; i < g.node_count(); ++i) {
    const Vec x = g.node(i);
    u[i] = norm(x, g.dim) <= f.support_radius ? f.value(x) : 0.0;
  }
  u.support_radius = f.support_radius;
  return u;
}

FtcSides ftc_check(const ClosedForm& u, const Grid& g, const Vec& z,
                   const WeightFamily& wf, double p) {
  if (!u.c2 || !u.grad || !u.hess)
    throw InvalidInputError("ftc_check: analytic derivatives required");
  if (!wf.modulus) throw InvalidInputError("ftc_check: weight modulus required");
  const int dim = g.dim;
  const double hN = g.cell_measure();

  auto val = [&](const Vec& x) {
    return norm(x, dim) <= u.support_radius ? u.value(x) : 0.0;
  };
  auto gval = [&](const Vec& x) {
    return norm(x, dim) <= u.support_radius ? u.grad(x) : Vec{0.0, 0.0};
  };
  auto hval = [&](const Vec& x) {
    return norm(x, dim) <= u.support_radius ? u.hess(x)
                                            : std::array<double, 4>{0, 0, 0, 0};
  };

  double shift_norm_p = 0.0, zdu_p = 0.0, du_p = 0.0, d2u_p = 0.0;
  for (int i = 0; i < g.node_count(); ++i) {
    const Vec x = g.node(i);
    const Vec xz{x[0] + z[0], x[1] + z[1]};
    const double wz = wf.eval_limit(x, xz);
    const double w0 = wf.eval_limit(x, x);
    shift_norm_p += wz * pow_p(val(xz) - val(x), p);
    const Vec du = gval(x);
    zdu_p += w0 * pow_p(dot(z, du, dim), p);
    du_p += pow_p(norm(du, dim), p);
    const auto H = hval(x);
    double frob = H[0] * H[0];
    if (dim == 2) frob += H[1] * H[1] + H[2] * H[2] + H[3] * H[3];
    d2u_p += pow_p(std::sqrt(frob), p);
  }
  shift_norm_p *= hN;
  zdu_p *= hN;
  du_p *= hN;
  d2u_p *= hN;

  const double zlen = norm(z, dim);
  const double omega = (*wf.modulus)(zlen);

  FtcSides out;
  out.lhs_i = shift_norm_p;
  out.rhs_i = zdu_p + omega * std::pow(zlen, p) * du_p;
  out.lhs_ii = std::abs(std::pow(shift_norm_p, 1.0 / p) - std::pow(zdu_p, 1.0 / p));
  out.rhs_ii = 0.5 * zlen * zlen * std::pow(d2u_p, 1.0 / p) +
               zlen * std::pow(omega, 1.0 / p) * std::pow(du_p, 1.0 / p);
  return out;
}

namespace {

// Max |w_k - w| over exactly the node pairs the energy quadrature visits
// (including the diagonal pairs of the near-cell rule).
double visited_pair_sup_distance(const GridFunction& u, const WeightFamily& wf,
                                 double index, const EnergyOptions& opts) {
  const Grid& g = u.grid;
  const int reach = lattice_reach(g, opts.truncation);
  const auto hull = u.nonzero_hull();
  if (!hull) return 0.0;
  double sup = 0.0;
  auto visit = [&](const Vec& x, const Vec& y) {
    sup = std::max(sup, std::abs(wf.eval_k(index, x, y) - wf.eval_limit(x, y)));
  };
  if (g.dim == 1) {
    const int h0 = (*hull)[0][0], h1 = (*hull)[0][1];
    for (int ad = 1; ad <= reach; ++ad)
      for (int sign = 0; sign < 2; ++sign) {
        const int d = sign == 0 ? ad : -ad;
        for (const auto& range : offset_ranges_1d(h0, h1, d, reach, g.n[0]))
          for (int i = range[0]; i <= range[1]; ++i) {
            Vec x{g.lo[0] + (i + 0.5) * g.h, 0.0};
            Vec y{g.lo[0] + (i + d + 0.5) * g.h, 0.0};
            visit(x, y);
          }
      }
    for (int i = 0; i < g.n[0]; ++i) {
      Vec x{g.lo[0] + (i + 0.5) * g.h, 0.0};
      visit(x, x);
    }
  } else {
    for (int i = 0; i < g.node_count(); ++i) {
      const Vec x = g.node(i);
      visit(x, x);
      for (int d0 = -reach; d0 <= reach; ++d0)
        for (int d1 = -reach; d1 <= reach; ++d1) {
          if (d0 == 0 && d1 == 0) continue;
          Vec z{d0 * g.h, d1 * g.h};
          if (norm(z, 2) > opts.truncation * (1.0 + 1e-12)) continue;
          visit(x, Vec{x[0] + z[0], x[1] + z[1]});
        }
    }
  }
  return sup;
}

// sum over truncated offsets with |z| > from_radius of h^N rho(z)/|z|^p.
double offset_tail_sum(const Grid& g, const Kernel& rho, double p, double from_radius,
                       const EnergyOptions& opts) {
  const int reach = lattice_reach(g, opts.truncation);
  double s = 0.0;
  if (g.dim == 1) {
    for (int ad = 1; ad <= reach; ++ad) {
      const double r = ad * g.h;
      if (r <= from_radius) continue;
      for (int sign = 0; sign < 2; ++sign) {
        Vec z{(sign == 0 ? ad : -ad) * g.h, 0.0};
        s += detail::offset_kernel_value(rho, z, p, false, opts.overflow_guard);
      }
    }
  } else {
    for (int d0 = -reach; d0 <= reach; ++d0)
      for (int d1 = -reach; d1 <= reach; ++d1) {
        if (d0 == 0 && d1 == 0) continue;
        Vec z{d0 * g.h, d1 * g.h};
        const double r = norm(z, 2);
        if (r <= from_radius || r > opts.truncation * (1.0 + 1e-12)) continue;
        s += detail::offset_kernel_value(rho, z, p, false, opts.overflow_guard);
      }
  }
  return s * g.cell_measure();
}

}  // namespace

WeightPerturbationGap weight_perturbation_gap(const GridFunction& u, const Kernel& rho,
                                              const WeightFamily& wf, double index, double p,
                                              const EnergyOptions& opts) {
  WeightPerturbationGap out;
  const double fk = nonlocal_energy(u, rho, wf, index, p, opts).total;
  const double fw = nonlocal_energy(u, rho, wf, std::nullopt, p, opts).total;
  out.gap = std::abs(fk - fw);
  out.f1 = nonlocal_energy(u, rho, unit_weight(u.grid.dim), std::nullopt, p, opts).total;
  out.sup_dist = visited_pair_sup_distance(u, wf, index, opts);
  out.bound = out.f1 * out.sup_dist;
  return out;
}

EllRBoundCheck ell_R_bound_check(const GridFunction& u, const Kernel& rho,
                                 const WeightFamily& wf, double index, double p, double R,
                                 const EnergyOptions& opts) {
  EllRBoundCheck out;
  const double Reff = effective_support_radius(u);
  if (Reff > R + 1e-12) {
    out.precondition_ok = false;
    out.precondition_note = "support radius " + std::to_string(Reff) + " exceeds R = " +
                            std::to_string(R);
    return out;
  }
  const PairNet net = make_ell_net(R, u.grid.h / 2.0, u.grid.dim);
  out.ell = ell_R(wf, R, net);
  out.w_dist = visited_pair_sup_distance(u, wf, index, opts);
  if (!(out.ell > 0.0) || out.w_dist > 0.5 * out.ell + 1e-15) {
    out.precondition_ok = false;
    out.precondition_note = "||w_k - w|| = " + std::to_string(out.w_dist) +
                            " exceeds ell_R/2 = " + std::to_string(0.5 * out.ell);
    return out;
  }
  out.lhs = nonlocal_energy(u, rho, unit_weight(u.grid.dim), std::nullopt, p, opts).total;
  const double fwk = nonlocal_energy(u, rho, wf, index, p, opts).total;
  const double up = std::pow(lp_norm(u, p), p);
  out.tail_term = std::pow(2.0, p) * up * offset_tail_sum(u.grid, rho, p, 2.0 * R, opts);
  out.rhs = (2.0 / out.ell) * fwk + out.tail_term;
  if (rho.power_law && !std::isfinite(rho.power_law->valid_radius)) {
    const double e = rho.power_law->exponent - p + u.grid.dim - 1.0;
    if (e < -1.0) {
      const double integral =
          -rho.power_law->prefactor * std::pow(2.0 * R, e + 1.0) / (e + 1.0);
      out.analytic_tail =
          std::pow(2.0, p) * up * (u.grid.dim == 1 ? 2.0 : 2.0 * M_PI) * integral;
    }
  }
  return out;
}

MollificationDefectReport mollification_defect(const std::vector<GridFunction>& u_seq,
                                               const std::vector<double>& indices,
                                               double delta, const DomainMask& E,
                                               const JSpec& spec, double p,
                                               const EnergyOptions& opts) {
  if (u_seq.empty()) throw InvalidInputError("mollification_defect: empty sequence");
  if (u_seq.size() != indices.size())
    throw InvalidInputError("mollification_defect: indices do not match the sequence");
  if (!(delta > 0.0)) throw InvalidInputError("mollification_defect: delta must be positive");
  if (opts.truncation < delta)
    throw InvalidInputError("mollification_defect: truncation below delta");
  const Grid& g = E.grid;

  // Box mollifier stencil chi_{B_delta}/|B_delta| on the lattice.
  const int reach = static_cast<int>(std::floor(delta / g.h + 1e-9));
  std::vector<std::array<int, 2>> stencil;
  for (int m0 = -reach; m0 <= reach; ++m0) {
    const int m1lo = g.dim == 2 ? -reach : 0;
    const int m1hi = g.dim == 2 ? reach : 0;
    for (int m1 = m1lo; m1 <= m1hi; ++m1) {
      Vec z{m0 * g.h, m1 * g.h};
      if (norm(z, g.dim) <= delta + 1e-12) stencil.push_back({m0, m1});
    }
  }
  const double sw = 1.0 / static_cast<double>(stencil.size());

  // Every E-node must carry its full stencil inside the domain A.
  for (int i0 = 0; i0 < g.n[0]; ++i0)
    for (int i1 = 0; i1 < g.n[1]; ++i1) {
      if (!E.contains(g.index(i0, i1))) continue;
      for (const auto& m : stencil) {
        const int j0 = i0 + m[0], j1 = i1 + m[1];
        if (j0 < 0 || j0 >= g.n[0] || j1 < 0 || j1 >= g.n[1] ||
            !spec.domain.contains(g.index(j0, j1)))
          throw DomainTooSmallError("mollification_defect: delta exceeds the mask margin");
      }
    }

  MollificationDefectReport rep;
  for (size_t k = 0; k < u_seq.size(); ++k) {
    const GridFunction& u = u_seq[k];
    if (!u.grid.same_layout(g))
      throw InvalidInputError("mollification_defect: grid mismatch in the sequence");
    MollificationDefectRow row;
    row.index = indices[k];
    double defect = 0.0;
    double jmin = std::numeric_limits<double>::infinity();
    for (int i0 = 0; i0 < g.n[0]; ++i0)
      for (int i1 = 0; i1 < g.n[1]; ++i1) {
        const int id = g.index(i0, i1);
        if (!E.contains(id)) continue;
        double conv = 0.0;
        const Vec x = g.node(id);
        for (const auto& m : stencil) {
          conv += sw * u.at_or_zero(i0 + m[0], i1 + m[1]);
          if (m[0] != 0 || m[1] != 0) {
            Vec y{x[0] + m[0] * g.h, x[1] + m[1] * g.h};
            jmin = std::min(jmin, spec.eval_k(indices[k], x, y));
          }
        }
        defect += pow_p(conv - u[id], p);
      }
    row.defect = defect * g.cell_measure();
    row.epsilon_used = jmin > 0.0 ? 1.0 / (std::pow(delta, g.dim) * jmin)
                                  : std::numeric_limits<double>::infinity();
    row.j_value = j_energy(u, spec, indices[k], p, opts);
    row.budget = row.epsilon_used * row.j_value;
    row.lp = lp_norm(u, p);
    rep.rows.push_back(row);
  }
  double emin = std::numeric_limits<double>::infinity(), emax = 0.0;
  for (const auto& r : rep.rows) {
    const double e = std::pow(r.lp, p) + r.j_value;
    emin = std::min(emin, e);
    emax = std::max(emax, e);
  }
  rep.energy_unbounded = emax > 10.0 * std::max(emin, 1e-300);
  return rep;
}

}  // namespace bbmlab
