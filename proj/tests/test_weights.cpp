#include <doctest.h>

#include <cmath>

#include "bbmlab/config.hpp"
#include "bbmlab/weights.hpp"

using namespace bbmlab;

namespace {

WeightFamily cos_product(double shift_rate = 0.0) {
  // w_k = (1 + shift_rate/k)^2 f(x) f(y) with f = 2 + cos(x1)
  auto f = [](const Vec& x) { return 2.0 + std::cos(x[0]); };
  auto fk = [f, shift_rate](double k, const Vec& x) {
    return (1.0 + shift_rate / k) * f(x);
  };
  return product_weight(fk, f, 1, 1.0, 3.0);
}

}  // namespace

TEST_CASE("product_weight: value, trace, degenerate cases") {
  const WeightFamily w = cos_product();
  CHECK(w.eval_limit(Vec{0.0, 0.0}, Vec{0.0, 0.0}) == doctest::Approx(9.0));
  const Grid g = Grid::make_1d(-2.0, 2.0, 0.125);
  const DiagonalWeight d = diagonal_trace(w, g);
  for (int i = 0; i < g.node_count(); ++i) {
    const double f = 2.0 + std::cos(g.node(i)[0]);
    CHECK(d[i] == f * f);  // node-exact algebraic identity
  }

  const WeightFamily one = unit_weight(1);
  const DiagonalWeight done = diagonal_trace(one, g);
  for (int i = 0; i < g.node_count(); ++i) CHECK(done[i] == 1.0);

  // w(x,y) = omega(|x-y|) with omega(0) = 0: diagonal trace vanishes
  const WeightFamily degenerate = general_weight(
      [](double, const Vec& x, const Vec& y) { return std::abs(x[0] - y[0]); },
      [](const Vec& x, const Vec& y) { return std::abs(x[0] - y[0]); }, 1,
      std::function<double(double)>([](double t) { return t; }), true, "omega-distance");
  const DiagonalWeight dz = diagonal_trace(degenerate, g);
  for (int i = 0; i < g.node_count(); ++i) CHECK(dz[i] == 0.0);

  CHECK_THROWS_AS(product_weight([](double, const Vec&) { return 1.0; },
                                 [](const Vec& x) { return std::cos(x[0]); }, 1, 1.0, 1.0),
                  InvalidInputError);
}

TEST_CASE("modulus inequality on random quadruples") {
  const WeightFamily w = cos_product();
  CHECK(!check_modulus(w, 4.0, 10000, 0));
  // understated Lipschitz bound gets caught with a witness
  auto f = [](const Vec& x) { return 2.0 + std::cos(3.0 * x[0]); };
  const WeightFamily broken =
      product_weight([f](double, const Vec& x) { return f(x); }, f, 1, 1.0, 3.0);
  const auto witness = check_modulus(broken, 4.0, 10000, 0);
  REQUIRE(witness.has_value());
  CHECK(witness->lhs > witness->rhs);
}

TEST_CASE("sup_distance: exact cases and product expansion") {
  const Grid g = Grid::make_1d(-4.0, 4.0, 0.25);
  const PairNet net = make_pair_net(4.0, 2.0, 0.125, 1);

  const WeightFamily same = cos_product(0.0);
  CHECK(sup_distance(same, 7.0, net) == 0.0);

  // constant shift: w_k = w + c exactly
  const WeightFamily shiftw = general_weight(
      [](double k, const Vec&, const Vec&) { return 1.0 + 1.0 / k; },
      [](const Vec&, const Vec&) { return 1.0; }, 1, std::nullopt, true, "shift");
  CHECK(sup_distance(shiftw, 8.0, net) == doctest::Approx(0.125).epsilon(1e-14));

  // f_k = (1+1/k) f: distance ((1+1/k)^2 - 1) max f^2 = (2/k + 1/k^2) * 9
  const WeightFamily fam = cos_product(1.0);
  const double k = 5.0;
  CHECK(sup_distance(fam, k, net) ==
        doctest::Approx((2.0 / k + 1.0 / (k * k)) * 9.0).epsilon(1e-6));
}

TEST_CASE("sup_distance triangle inequality across indices") {
  const WeightFamily fam = cos_product(1.0);
  const PairNet net = make_pair_net(2.0, 2.0, 0.25, 1);
  const double d5 = sup_distance(fam, 5.0, net);
  const double d9 = sup_distance(fam, 9.0, net);
  // |w_5 - w_9| <= |w_5 - w| + |w - w_9| on the same net
  double d59 = 0.0;
  for (const auto& [x, y] : net)
    d59 = std::max(d59, std::abs(fam.eval_k(5.0, x, y) - fam.eval_k(9.0, x, y)));
  CHECK(d59 <= d5 + d9 + 1e-12);
}

TEST_CASE("ell_R: unit weight, dense-scan oracle, zero witness") {
  const PairNet net = make_ell_net(1.0, 0.01, 1);
  CHECK(ell_R(unit_weight(1), 1.0, net) == 1.0);

  const WeightFamily w = cos_product();
  const double got = ell_R(w, 1.0, net);
  // independent dense scan at finer resolution
  double best = 1e300;
  for (double x = -1.0; x <= 1.0; x += 0.002)
    for (double z = -2.0; z <= 2.0; z += 0.002)
      best = std::min(best, (2.0 + std::cos(x)) * (2.0 + std::cos(x + z)));
  CHECK(got == doctest::Approx(best).epsilon(1e-3));
  CHECK(got >= 1.0);

  const WeightFamily vanishing = general_weight(
      [](double, const Vec& x, const Vec& y) { return std::abs(x[0]) * std::abs(y[0]); },
      [](const Vec& x, const Vec& y) { return std::abs(x[0]) * std::abs(y[0]); }, 1,
      std::nullopt, true, "vanishing");
  CHECK(ell_R(vanishing, 1.0, net) == 0.0);
}

TEST_CASE("ell_R nonincreasing in R") {
  const WeightFamily w = cos_product();
  double prev = 1e300;
  for (double R : {0.5, 1.0, 2.0}) {
    const double v = ell_R(w, R, make_ell_net(R, 0.02, 1));
    CHECK(v <= prev + 1e-14);
    prev = v;
  }
}

TEST_CASE("mollified_weight_gap: constants, bound, translation invariance") {
  const PairNet net = make_pair_net(1.5, 1.5, 0.25, 1);

  const MollifiedWeightGap unit = mollified_weight_gap(unit_weight(1), 8, net);
  CHECK(unit.sampled_gap <= 1e-12);
  CHECK(unit.bound == 0.0);

  const WeightFamily w = cos_product();
  for (int j : {4, 16, 64}) {
    const MollifiedWeightGap r = mollified_weight_gap(w, j, net);
    CHECK(r.sampled_gap <= r.bound);
    CHECK(r.bound == doctest::Approx(2.0 * (15.0 / 16.0) * 3.0 * (2.0 / j)));
  }

  // w(x,y) = omega(|x-y|): translation invariant along the diagonal
  const WeightFamily diag = general_weight(
      [](double, const Vec& x, const Vec& y) { return 1.0 + std::abs(x[0] - y[0]); },
      [](const Vec& x, const Vec& y) { return 1.0 + std::abs(x[0] - y[0]); }, 1,
      std::function<double(double)>([](double t) { return t; }), true, "diag");
  CHECK(mollified_weight_gap(diag, 4, net).sampled_gap <= 1e-10);
}

TEST_CASE("weight specs from config") {
  const WeightFamily one = weight_from_spec(json("one"), 1);
  CHECK(one.kind == WeightFamily::Kind::Unit);
  json prod = {{"type", "product"},
               {"f", "2+cos(x1)"},
               {"f_k", "(1+1/k)*(2+cos(x1))"},
               {"lipschitz", 1.0},
               {"sup", 3.0}};
  const WeightFamily w = weight_from_spec(prod, 1);
  CHECK(w.eval_limit(Vec{0.0, 0.0}, Vec{0.0, 0.0}) == doctest::Approx(9.0));
  CHECK(w.eval_k(4.0, Vec{0.0, 0.0}, Vec{0.0, 0.0}) ==
        doctest::Approx(9.0 * 1.25 * 1.25));
  json ex = {{"type", "expr"}, {"w", "1+abs(x1-y1)"}, {"lipschitz", 2.0},
             {"symmetric", true}};
  const WeightFamily we = weight_from_spec(ex, 1);
  CHECK(we.eval_limit(Vec{1.0, 0.0}, Vec{3.0, 0.0}) == doctest::Approx(3.0));
}
