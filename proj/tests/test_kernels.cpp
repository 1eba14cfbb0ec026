#include <doctest.h>

#include <cmath>
#include <random>

#include "bbmlab/config.hpp"
#include "bbmlab/kernels.hpp"

using namespace bbmlab;

TEST_CASE("fractional_kernel: direct substitutions") {
  const Kernel k = fractional_kernel(0.5, 2.0, 1);
  CHECK(k.eval(Vec{1.0, 0.0}) == doctest::Approx(0.5).epsilon(1e-14));
  // exponent N-(1-s)p = 0: constant kernel value (1-s)
  CHECK(k.eval(Vec{2.0, 0.0}) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(k.eval(Vec{0.37, 0.0}) == doctest::Approx(0.5).epsilon(1e-14));
  const Kernel near1 = fractional_kernel(0.9999, 2.0, 1);
  CHECK(near1.eval(Vec{1.0, 0.0}) == doctest::Approx(1e-4).epsilon(1e-10));
  CHECK_THROWS_AS(fractional_kernel(1.0, 2.0, 1), InvalidInputError);
  CHECK_THROWS_AS(fractional_kernel(-0.1, 2.0, 1), InvalidInputError);
}

TEST_CASE("radial metadata consistency at random z") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unif(0.05, 5.0);
  const Kernel k2 = fractional_kernel(0.7, 2.0, 2);
  for (int t = 0; t < 50; ++t) {
    const double a = unif(rng), th = unif(rng);
    Vec z{a * std::cos(th), a * std::sin(th)};
    CHECK(k2.eval(z) == doctest::Approx(k2.radial(norm(z, 2))).epsilon(1e-12));
  }
}

TEST_CASE("radial_moment: closed form vs substitution oracle") {
  const Kernel k = fractional_kernel(0.99, 2.0, 1);
  // int_0^delta (1-s) r^{(1-s)p-1} dr = delta^{(1-s)p}/p
  CHECK(radial_moment(k, 0.0, 0.01, 0.0) ==
        doctest::Approx(std::pow(0.01, 0.02) / 2.0).epsilon(1e-12));
  // no metadata: two-sample power extrapolation head must recover the
  // same value
  Kernel stripped = k;
  stripped.power_law.reset();
  CHECK(radial_moment(stripped, 0.0, 0.01, 0.0) ==
        doctest::Approx(std::pow(0.01, 0.02) / 2.0).epsilon(1e-8));
}

namespace {

// Independent route for the mass-condition integral of the fractional
// family: substitute t = r^{(1-s)p}, integrand becomes bounded, composite
// Simpson integrates it.
double fractional_mass_condition_oracle(double R, double s, double p, double rmax) {
  const double a = (1.0 - s) * p;
  const double T = std::pow(rmax, a);
  const int n = 200000;
  const double ht = T / n;
  const double Rp = std::pow(R, p);
  auto f = [&](double t) {
    const double r = std::pow(t, 1.0 / a);
    return 1.0 / (Rp + std::pow(r, p));
  };
  double acc = f(T);  // f(0) = 1/Rp handled below
  acc += 1.0 / Rp;
  for (int i = 1; i < n; ++i) acc += (i % 2 ? 4.0 : 2.0) * f(i * ht);
  const double integral = acc * ht / 3.0;
  return Rp * 2.0 * (integral / p);
}

}  // namespace

TEST_CASE("mass_condition_check: fractional family bounded, zero family zero") {
  const KernelFamily frac = fractional_family(2.0, 1);
  const std::vector<double> ss{0.5, 0.9, 0.99};
  const std::vector<double> rs{0.1, 1.0, 10.0};
  const MassConditionReport rep = mass_condition_check(frac, 2.0, ss, rs);
  REQUIRE(rep.table.size() == 9);
  CHECK(!rep.offending);
  for (const auto& e : rep.table) {
    CHECK(std::isfinite(e.value));
    CHECK(e.value >= 0.0);
    CHECK(e.value ==
          doctest::Approx(fractional_mass_condition_oracle(e.radius, e.index, 2.0, 32.0))
              .epsilon(1e-4));
  }
  CHECK(rep.mass_condition_value < 20.0);

  const MassConditionReport zero = mass_condition_check(zero_family(1), 2.0, {1.0}, {1.0});
  CHECK(zero.mass_condition_value == 0.0);
}

TEST_CASE("mass_condition_check: mass blow-up family grows linearly in k") {
  // rho_k = k chi_{|z|<1}: R^p int = k R^p * 2 int_0^1 dr/(R^p+r^p)
  //        = 2 k R atan(1/R) for p = 2, N = 1.
  json spec = {{"type", "expr"}, {"rho", "k*step(1-r)"}, {"N", 1}, {"radial", true},
               {"support_radius", 1.0}};
  const KernelFamily fam = kernel_from_spec(spec);
  const double R = 0.7;
  const MassConditionReport rep = mass_condition_check(fam, 2.0, {1.0, 10.0, 100.0}, {R});
  REQUIRE(rep.table.size() == 3);
  for (const auto& e : rep.table)
    CHECK(e.value ==
          doctest::Approx(2.0 * e.index * R * std::atan(1.0 / R)).epsilon(1e-8));
  CHECK(rep.table[2].value == doctest::Approx(100.0 * rep.table[0].value).epsilon(1e-8));
}

TEST_CASE("weak_star_check: fractional concentration vs fixed measure") {
  const KernelFamily frac = fractional_family(2.0, 1);
  const std::vector<double> ss{0.9, 0.99, 0.999};
  const WeakStarReport rep = weak_star_check(frac, ss, 0.01);
  REQUIRE(rep.near_origin_mass.size() == 3);
  // analytic: delta^{(1-s)p}/p, (1 - delta^{(1-s)p})/p
  for (size_t i = 0; i < ss.size(); ++i) {
    const double a = (1.0 - ss[i]) * 2.0;
    CHECK(rep.near_origin_mass[i] ==
          doctest::Approx(std::pow(0.01, a) / 2.0).epsilon(1e-10));
    CHECK(rep.far_mass[i] ==
          doctest::Approx((1.0 - std::pow(0.01, a)) / 2.0).epsilon(1e-10));
  }
  CHECK(rep.near_origin_mass[2] == doctest::Approx(0.4954).epsilon(1e-3));
  CHECK(rep.far_vanishing);
  CHECK(rep.alpha_estimate > 0.45);

  // fixed measure chi_{B_1}/|B_1|: annulus mass constant, flagged
  json spec = {{"type", "expr"}, {"rho", "0.5*step(1-r)"}, {"N", 1}, {"radial", true},
               {"support_radius", 1.0}};
  const WeakStarReport fixed = weak_star_check(kernel_from_spec(spec), {1.0, 2.0, 3.0}, 0.01);
  CHECK(fixed.far_mass[0] == doctest::Approx(fixed.far_mass[2]).epsilon(1e-12));
  CHECK(!fixed.far_vanishing);
}

TEST_CASE("limit_measure_radial: fractional atoms 1/p") {
  DoubleLimitSchedule sched;
  sched.deltas = {0.01};
  sched.indices = {0.999};
  for (double p : {1.0, 2.0}) {
    const LimitMeasureResult res = limit_measure_radial(fractional_family(p, 1), sched);
    CHECK(res.mu.dim == 1);
    const double tol = p == 1.0 ? 2e-2 : 1e-2;
    CHECK(std::abs(res.mu.atom_plus - 1.0 / p) <= tol);
    CHECK(std::abs(res.mu.atom_minus - 1.0 / p) <= tol);
    CHECK(res.mu.atom_plus == res.mu.atom_minus);
  }

  const LimitMeasureResult zero = limit_measure_radial(zero_family(1),
                                                       DoubleLimitSchedule::geometric(6, {1.0}));
  CHECK(zero.mu.total_mass() == 0.0);

  CHECK_THROWS_AS(limit_measure_radial(
                      kernel_from_spec(json{{"type", "expr"},
                                            {"rho", "step(z1)*(1-s)/r^(1-(1-s)*2)"},
                                            {"N", 1},
                                            {"radial", false}}),
                      sched),
                  WrongOperationError);
}

TEST_CASE("limit_measure_radial: N=2 total mass 2 pi / p") {
  DoubleLimitSchedule sched;
  sched.deltas = {0.01, 0.005};
  sched.indices = {0.999, 0.9995};
  const LimitMeasureResult res = limit_measure_radial(fractional_family(2.0, 2), sched, 16);
  CHECK(res.mu.dim == 2);
  CHECK(res.mu.angles.size() == 16);
  CHECK(res.mu.total_mass() == doctest::Approx(M_PI).epsilon(2e-2));
}

TEST_CASE("limit_measure_numeric: radial sectors equal and match radial route") {
  DoubleLimitSchedule sched;
  sched.deltas = {0.02, 0.01};
  sched.indices = {0.99, 0.999};
  const KernelFamily frac = fractional_family(2.0, 2);
  const LimitMeasureResult num = limit_measure_numeric(frac, sched, 8);
  const LimitMeasureResult rad = limit_measure_radial(frac, sched, 8);
  REQUIRE(num.mu.masses.size() == 8);
  double lo = 1e300, hi = 0.0;
  for (double m : num.mu.masses) {
    lo = std::min(lo, m);
    hi = std::max(hi, m);
  }
  CHECK((hi - lo) / hi <= 0.01);
  CHECK(num.mu.total_mass() == doctest::Approx(rad.mu.total_mass()).epsilon(1e-3));

  CHECK_THROWS_AS(limit_measure_numeric(frac, sched, 4), InvalidInputError);
  CHECK_THROWS_AS(limit_measure_numeric(fractional_family(2.0, 1), sched, 8),
                  InvalidInputError);
}

TEST_CASE("limit_measure_numeric: half-space cut loses the left sectors") {
  json spec = {{"type", "expr"},
               {"rho", "step(z1)*(1-s)/r^(2-(1-s)*2)"},
               {"N", 2},
               {"radial", false}};
  DoubleLimitSchedule sched;
  sched.deltas = {0.02, 0.01};
  sched.indices = {0.99, 0.999};
  const LimitMeasureResult res = limit_measure_numeric(kernel_from_spec(spec), sched, 8);
  double right = 0.0, left = 0.0;
  for (size_t i = 0; i < res.mu.angles.size(); ++i) {
    if (std::cos(res.mu.angles[i]) > 0.1)
      right += res.mu.masses[i];
    else if (std::cos(res.mu.angles[i]) < -0.1)
      left += res.mu.masses[i];
  }
  CHECK(right > 0.3);
  CHECK(left <= 1e-10);

  const LimitMeasureResult zero = limit_measure_numeric(zero_family(2), sched, 8);
  CHECK(zero.mu.total_mass() == 0.0);
}

TEST_CASE("limit_measure_numeric: too-short schedule reports non-convergence") {
  DoubleLimitSchedule sched;
  sched.deltas = {0.0625, 0.03125};
  sched.indices = {0.5, 0.6};
  const LimitMeasureResult res = limit_measure_numeric(fractional_family(2.0, 2), sched, 8);
  CHECK(!res.diag.converged);
  CHECK(res.diag.residual > 1e-3);
}

TEST_CASE("limit measure scales linearly with the family") {
  DoubleLimitSchedule sched;
  sched.deltas = {0.01};
  sched.indices = {0.999};
  const KernelFamily frac = fractional_family(2.0, 1);
  KernelFamily scaled;
  scaled.dim = 1;
  scaled.is_radial = true;
  scaled.member = [frac](double s) {
    Kernel k = frac.member(s);
    Kernel out = k;
    out.radial = [k](double r) { return 3.0 * k.radial(r); };
    out.eval = [k](const Vec& z) { return 3.0 * k.eval(z); };
    out.power_law->prefactor *= 3.0;
    return out;
  };
  const double base = limit_measure_radial(frac, sched).mu.total_mass();
  const double tripled = limit_measure_radial(scaled, sched).mu.total_mass();
  CHECK(tripled == doctest::Approx(3.0 * base).epsilon(1e-12));
}
