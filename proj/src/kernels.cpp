#include "bbmlab/kernels.hpp"

#include <algorithm>
#include <cmath>

#include "bbmlab/errors.hpp"

namespace bbmlab {

Kernel fractional_kernel(double s, double p, int N) {
  if (!(s > 0.0 && s < 1.0))
    throw InvalidInputError("fractional_kernel: s must lie in (0,1)");
  if (!(p >= 1.0)) throw InvalidInputError("fractional_kernel: p must be >= 1");
  Kernel k;
  k.dim = N;
  k.is_radial = true;
  const double pre = 1.0 - s;
  const double expo = (1.0 - s) * p - N;  // rho(r) = (1-s) r^expo
  k.radial = [pre, expo](double r) { return pre * std::pow(r, expo); };
  k.eval = [pre, expo, N](const Vec& z) { return pre * std::pow(norm(z, N), expo); };
  k.power_law = PowerLaw{pre, expo, std::numeric_limits<double>::infinity()};
  k.label = "fractional(s=" + std::to_string(s) + ")";
  return k;
}

KernelFamily fractional_family(double p, int N) {
  KernelFamily f;
  f.dim = N;
  f.is_radial = true;
  f.member = [p, N](double s) { return fractional_kernel(s, p, N); };
  f.label = "fractional";
  return f;
}

KernelFamily zero_family(int N) {
  KernelFamily f;
  f.dim = N;
  f.is_radial = true;
  f.member = [N](double) {
    Kernel k;
    k.dim = N;
    k.is_radial = true;
    k.radial = [](double) { return 0.0; };
    k.eval = [](const Vec&) { return 0.0; };
    k.power_law = PowerLaw{0.0, 0.0, std::numeric_limits<double>::infinity()};
    k.label = "zero";
    return k;
  };
  f.label = "zero";
  return f;
}

Kernel indicator_power_kernel(double p, int N, double radius) {
  Kernel k;
  k.dim = N;
  k.is_radial = true;
  k.radial = [p, radius](double r) { return r < radius ? std::pow(r, p) : 0.0; };
  k.eval = [p, radius, N](const Vec& z) {
    const double r = norm(z, N);
    return r < radius ? std::pow(r, p) : 0.0;
  };
  k.power_law = PowerLaw{1.0, p, radius};
  k.support_radius = radius;
  k.label = "indicator_power";
  return k;
}

KernelFamily ramp_indicator_family(double p, int N, double radius) {
  KernelFamily f;
  f.dim = N;
  f.is_radial = true;
  f.member = [p, N, radius](double index) {
    if (!(index >= 1.0)) throw InvalidInputError("ramp_indicator_family: k must be >= 1");
    const double fac = index / (index + 1.0);
    Kernel base = indicator_power_kernel(p, N, radius);
    Kernel k;
    k.dim = N;
    k.is_radial = true;
    k.radial = [fac, base](double r) { return fac * base.radial(r); };
    k.eval = [fac, base](const Vec& z) { return fac * base.eval(z); };
    k.power_law = PowerLaw{fac, p, radius};
    k.support_radius = radius;
    k.label = "ramp_indicator(k=" + std::to_string(index) + ")";
    return k;
  };
  f.label = "ramp_indicator";
  return f;
}

KernelFamily dominated_indicator_family(double p, int N, double radius) {
  KernelFamily f;
  f.dim = N;
  f.is_radial = true;
  f.member = [p, N, radius](double index) {
    if (!(index >= 1.0))
      throw InvalidInputError("dominated_indicator_family: k must be >= 1");
    const long long k = static_cast<long long>(std::llround(index));
    const double fac = 1.0 + (k % 2 == 0 ? 1.0 : -1.0) / (2.0 * index);
    Kernel base = indicator_power_kernel(p, N, radius);
    Kernel kk;
    kk.dim = N;
    kk.is_radial = true;
    kk.radial = [fac, base](double r) { return fac * base.radial(r); };
    kk.eval = [fac, base](const Vec& z) { return fac * base.eval(z); };
    kk.power_law = PowerLaw{fac, p, radius};
    kk.support_radius = radius;
    kk.label = "dominated_indicator(k=" + std::to_string(index) + ")";
    return kk;
  };
  f.label = "dominated_indicator";
  return f;
}

namespace {

// int_a^b F(r) dr where F may carry an integrable power singularity at 0.
// Below head_cut the integrand is extrapolated as C r^b from two samples
// (exact for pure powers); above it adaptive Gauss-Kronrod takes over.
double singular_head_integral(const std::function<double(double)>& F, double a, double b) {
  if (b <= a) return 0.0;
  if (a > 0.0) return adaptive_integrate(F, a, b);
  const double cut = b * 1e-7;
  const double r1 = cut, r2 = 2.0 * cut;
  const double f1 = F(r1), f2 = F(r2);
  double head = 0.0;
  if (f1 > 0.0 && f2 > 0.0) {
    const double slope = std::log(f2 / f1) / std::log(r2 / r1);
    if (slope > -1.0 + 1e-9 && std::isfinite(slope)) head = f1 * r1 / (slope + 1.0);
  }
  return head + adaptive_integrate(F, cut, b);
}

double stabilized_scan(const std::vector<double>& values, double rtol, bool& converged,
                       double& residual) {
  converged = false;
  residual = std::numeric_limits<double>::infinity();
  if (values.empty()) throw InvalidInputError("empty schedule");
  for (size_t i = 1; i < values.size(); ++i) {
    const double denom = std::max(std::abs(values[i]), 1e-300);
    residual = std::abs(values[i] - values[i - 1]) / denom;
    if (residual < rtol) converged = true;
  }
  if (values.size() == 1) residual = 0.0;
  return values.back();
}

}  // namespace

double radial_moment(const Kernel& k, double a, double b, double moment) {
  if (!k.is_radial || !k.radial)
    throw WrongOperationError("radial_moment: kernel is not radial");
  if (b <= a) return 0.0;
  double total = 0.0;
  double lo = a;
  if (k.power_law && lo < std::min(b, k.power_law->valid_radius)) {
    const double head_hi = std::min(b, k.power_law->valid_radius);
    total += power_moment(*k.power_law, lo, head_hi, moment);
    lo = head_hi;
  }
  if (lo < b) {
    auto F = [&k, moment](double r) { return k.radial(r) * std::pow(r, moment); };
    total += singular_head_integral(F, lo, b);
  }
  return total;
}

double ray_moment(const Kernel& k, const Vec& sigma, double a, double b, double moment) {
  if (k.is_radial && k.radial) return radial_moment(k, a, b, moment);
  auto F = [&](double r) {
    Vec z{r * sigma[0], k.dim == 2 ? r * sigma[1] : 0.0};
    return k.eval(z) * std::pow(r, moment);
  };
  return singular_head_integral(F, a, b);
}

MassConditionReport mass_condition_check(const KernelFamily& family, double p,
                                         const std::vector<double>& indices,
                                         const std::vector<double>& radii,
                                         const MassConditionOptions& opts) {
  if (radii.empty() || indices.empty())
    throw InvalidInputError("mass_condition_check: empty radii or index list");
  for (double R : radii)
    if (!(R > 0.0)) throw InvalidInputError("mass_condition_check: radii must be positive");

  MassConditionReport rep;
  const int N = family.dim;
  const double Rmax = opts.truncation_radius;

  auto directional_value = [&](const Kernel& k, const Vec& sigma, double Rp) {
    // int_0^Rmax rho(r sigma) r^{N-1} / (R^p + r^p) dr, singularity-aware:
    // the head is rho r^{N-1}/R^p minus a regular correction term.
    auto corr = [&](double r) {
      Vec z{r * sigma[0], N == 2 ? r * sigma[1] : 0.0};
      const double rho = k.is_radial && k.radial ? k.radial(r) : k.eval(z);
      return rho * std::pow(r, N - 1) * std::pow(r, p) / (Rp * (Rp + std::pow(r, p)));
    };
    const double head_hi = std::min(Rmax, std::pow(Rp, 1.0 / p));
    const double head = ray_moment(k, sigma, 0.0, head_hi, N - 1) / Rp -
                        adaptive_integrate(corr, 0.0, head_hi);
    auto tail_f = [&](double r) {
      Vec z{r * sigma[0], N == 2 ? r * sigma[1] : 0.0};
      const double rho = k.is_radial && k.radial ? k.radial(r) : k.eval(z);
      return rho * std::pow(r, N - 1) / (Rp + std::pow(r, p));
    };
    const double tail = head_hi < Rmax ? adaptive_integrate(tail_f, head_hi, Rmax) : 0.0;
    return head + tail;
  };

  for (double index : indices) {
    const Kernel k = family.member(index);
    for (double R : radii) {
      const double Rp = std::pow(R, p);
      double integral = 0.0;
      if (k.is_radial && k.radial) {
        integral = (N == 1 ? 2.0 : 2.0 * M_PI) * directional_value(k, Vec{1.0, 0.0}, Rp);
      } else if (N == 1) {
        integral = directional_value(k, Vec{1.0, 0.0}, Rp) +
                   directional_value(k, Vec{-1.0, 0.0}, Rp);
      } else {
        const GaussRule rule = gauss_legendre_16(0.0, 2.0 * M_PI);
        for (size_t q = 0; q < rule.nodes.size(); ++q) {
          Vec sigma{std::cos(rule.nodes[q]), std::sin(rule.nodes[q])};
          integral += rule.weights[q] * directional_value(k, sigma, Rp);
        }
      }
      MassConditionEntry e;
      e.radius = R;
      e.index = index;
      e.value = Rp * integral;
      e.overflowed = !std::isfinite(e.value) || e.value > opts.overflow_guard;
      if (e.overflowed && !rep.offending) rep.offending = {R, index};
      rep.table.push_back(e);
      if (std::isfinite(e.value))
        rep.mass_condition_value = std::max(rep.mass_condition_value, e.value);
    }
  }
  return rep;
}

WeakStarReport weak_star_check(const KernelFamily& family, const std::vector<double>& indices,
                               double delta, double annulus_outer) {
  if (!(delta > 0.0)) throw InvalidInputError("weak_star_check: delta must be positive");
  if (indices.empty()) throw InvalidInputError("weak_star_check: empty index list");
  WeakStarReport rep;
  rep.delta = delta;
  rep.annulus_outer = annulus_outer;
  rep.indices = indices;
  const int N = family.dim;

  auto direction_mean = [&](const Kernel& k, double a, double b) {
    if (k.is_radial && k.radial) return radial_moment(k, a, b, N - 1);
    if (N == 1)
      return 0.5 * (ray_moment(k, Vec{1.0, 0.0}, a, b, 0) +
                    ray_moment(k, Vec{-1.0, 0.0}, a, b, 0));
    const GaussRule rule = gauss_legendre_16(0.0, 2.0 * M_PI);
    double s = 0.0;
    for (size_t q = 0; q < rule.nodes.size(); ++q) {
      Vec sigma{std::cos(rule.nodes[q]), std::sin(rule.nodes[q])};
      s += rule.weights[q] * ray_moment(k, sigma, a, b, N - 1);
    }
    return s / (2.0 * M_PI);
  };

  for (double index : indices) {
    const Kernel k = family.member(index);
    rep.near_origin_mass.push_back(direction_mean(k, 0.0, delta));
    rep.far_mass.push_back(direction_mean(k, delta, annulus_outer));
  }

  bool conv = false;
  double res = 0.0;
  rep.alpha_estimate = std::max(0.0, stabilized_scan(rep.near_origin_mass, 1e-3, conv, res));
  rep.near_stabilized = conv;
  // Annulus decay trend: nonincreasing tail with a real drop from the start.
  const double first = rep.far_mass.front();
  const double last = rep.far_mass.back();
  bool nonincreasing = true;
  for (size_t i = 1; i < rep.far_mass.size(); ++i)
    if (rep.far_mass[i] > rep.far_mass[i - 1] * (1.0 + 1e-9)) nonincreasing = false;
  rep.far_vanishing = nonincreasing && (first <= 0.0 || last <= 0.5 * first);
  return rep;
}

AdmissibilityReport admissibility_report(const KernelFamily& family, double p,
                                         const std::vector<double>& indices,
                                         const std::vector<double>& radii, double delta,
                                         const MassConditionOptions& opts) {
  AdmissibilityReport rep;
  const MassConditionReport mass = mass_condition_check(family, p, indices, radii, opts);
  rep.mass_condition_value = mass.mass_condition_value;
  const WeakStarReport ws = weak_star_check(family, indices, delta);
  rep.near_origin_mass = ws.near_origin_mass;
  rep.far_mass = ws.far_mass;
  rep.alpha_estimate = ws.alpha_estimate;
  return rep;
}

LimitMeasure LimitMeasure::atoms_1d(double plus, double minus) {
  LimitMeasure mu;
  mu.dim = 1;
  mu.atom_plus = plus;
  mu.atom_minus = minus;
  mu.check_valid();
  return mu;
}

LimitMeasure LimitMeasure::uniform_circle(double total_mass, int nodes) {
  LimitMeasure mu;
  mu.dim = 2;
  mu.angles.resize(static_cast<size_t>(nodes));
  mu.masses.assign(static_cast<size_t>(nodes), total_mass / nodes);
  for (int i = 0; i < nodes; ++i)
    mu.angles[static_cast<size_t>(i)] = 2.0 * M_PI * (i + 0.5) / nodes;
  mu.check_valid();
  return mu;
}

LimitMeasure LimitMeasure::zero(int dim) {
  LimitMeasure mu;
  mu.dim = dim;
  if (dim == 2) mu = uniform_circle(0.0, 8);
  return mu;
}

double LimitMeasure::total_mass() const {
  if (dim == 1) return atom_plus + atom_minus;
  double s = 0.0;
  for (double m : masses) s += m;
  return s;
}

bool LimitMeasure::is_zero(double tol) const { return total_mass() <= tol; }

void LimitMeasure::check_valid() const {
  if (dim == 1) {
    if (atom_plus < 0.0 || atom_minus < 0.0)
      throw InvalidInputError("LimitMeasure: negative atom mass");
  } else {
    if (angles.size() != masses.size())
      throw InvalidInputError("LimitMeasure: angles/masses size mismatch");
    for (double m : masses)
      if (m < 0.0) throw InvalidInputError("LimitMeasure: negative node mass");
  }
  if (!std::isfinite(total_mass()))
    throw InvalidInputError("LimitMeasure: non-finite total mass");
}

DoubleLimitSchedule DoubleLimitSchedule::geometric(int l_max, std::vector<double> indices,
                                                   double rtol) {
  DoubleLimitSchedule s;
  for (int l = 4; l <= l_max; ++l) s.deltas.push_back(std::pow(2.0, -l));
  s.indices = std::move(indices);
  s.stabilization_rtol = rtol;
  return s;
}

namespace {

// Inner limit in the index at fixed delta, then the outer limit in delta.
double double_limit(const std::function<double(double delta, double index)>& value,
                    const DoubleLimitSchedule& sched, LimitMeasureDiagnostics& diag) {
  if (sched.deltas.empty() || sched.indices.empty())
    throw InvalidInputError("double_limit: empty schedule");
  std::vector<double> outer;
  bool inner_all = true;
  double inner_res = 0.0;
  for (double d : sched.deltas) {
    std::vector<double> inner;
    inner.reserve(sched.indices.size());
    for (double idx : sched.indices) inner.push_back(value(d, idx));
    bool conv = false;
    double res = 0.0;
    outer.push_back(stabilized_scan(inner, sched.stabilization_rtol, conv, res));
    inner_all = inner_all && (conv || sched.indices.size() == 1);
    inner_res = std::max(inner_res, res);
  }
  bool outer_conv = false;
  double outer_res = 0.0;
  const double v = stabilized_scan(outer, sched.stabilization_rtol, outer_conv, outer_res);
  diag.converged = inner_all && (outer_conv || sched.deltas.size() == 1);
  diag.residual = std::max(inner_res, sched.deltas.size() == 1 ? 0.0 : outer_res);
  return v;
}

}  // namespace

LimitMeasureResult limit_measure_radial(const KernelFamily& family,
                                        const DoubleLimitSchedule& schedule,
                                        int angular_nodes) {
  if (!family.is_radial)
    throw WrongOperationError(
        "limit_measure_radial: non-radial family (use limit_measure_numeric)");
  const int N = family.dim;
  LimitMeasureResult out;
  const double per_direction = double_limit(
      [&](double delta, double index) {
        return radial_moment(family.member(index), 0.0, delta, N - 1);
      },
      schedule, out.diag);
  if (N == 1)
    out.mu = LimitMeasure::atoms_1d(per_direction, per_direction);
  else
    out.mu = LimitMeasure::uniform_circle(2.0 * M_PI * per_direction, angular_nodes);
  return out;
}

LimitMeasureResult limit_measure_numeric(const KernelFamily& family,
                                         const DoubleLimitSchedule& schedule,
                                         int angular_nodes) {
  if (family.dim != 2)
    throw InvalidInputError("limit_measure_numeric: requires N = 2");
  if (angular_nodes < 8)
    throw InvalidInputError("limit_measure_numeric: angular_nodes must be >= 8");

  LimitMeasureResult out;
  out.mu.dim = 2;
  out.diag.converged = true;
  out.diag.residual = 0.0;
  const double width = 2.0 * M_PI / angular_nodes;
  for (int sct = 0; sct < angular_nodes; ++sct) {
    const double th0 = sct * width;
    const GaussRule rule = gauss_legendre_16(th0, th0 + width);
    LimitMeasureDiagnostics diag;
    const double mass = double_limit(
        [&](double delta, double index) {
          const Kernel k = family.member(index);
          double s = 0.0;
          for (size_t q = 0; q < rule.nodes.size(); ++q) {
            Vec sigma{std::cos(rule.nodes[q]), std::sin(rule.nodes[q])};
            s += rule.weights[q] * ray_moment(k, sigma, 0.0, delta, 1);
          }
          return s;
        },
        schedule, diag);
    out.mu.angles.push_back(th0 + 0.5 * width);
    out.mu.masses.push_back(std::max(0.0, mass));
    // Sectors whose mass vanishes cannot stabilize in relative terms; they
    // are unambiguous and do not poison the diagnostic.
    if (!diag.converged && mass > 1e-12) {
      out.diag.converged = false;
      out.diag.residual = std::max(out.diag.residual, diag.residual);
    }
  }
  out.mu.check_valid();
  return out;
}

}  // namespace bbmlab
