#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "bbmlab/grid.hpp"

using namespace bbmlab;

TEST_CASE("lp_norm: zero function") {
  Grid g = Grid::make_1d(0.0, 1.0, 0.25);
  GridFunction u(g);
  CHECK(lp_norm(u, 2.0) == 0.0);
}

TEST_CASE("lp_norm: constant on the unit box is exact") {
  // Cell-centered nodes tile [0,1] exactly: 4 cells of measure 1/4.
  Grid g = Grid::make_1d(0.0, 1.0, 0.25);
  GridFunction u(g, 1.0);
  CHECK(g.node_count() == 4);
  CHECK(lp_norm(u, 2.0) == doctest::Approx(1.0).epsilon(1e-12));
  GridFunction u2(Grid::make_2d(Vec{0.0, 0.0}, Vec{1.0, 1.0}, 0.25), 1.0);
  CHECK(lp_norm(u2, 3.0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("lp_norm: u(x)=x on [0,1], p=2") {
  Grid g = Grid::make_1d(0.0, 1.0, std::pow(2.0, -10));
  GridFunction u = sample(g, [](const Vec& x) { return x[0]; });
  CHECK(lp_norm(u, 2.0) == doctest::Approx(std::sqrt(1.0 / 3.0)).epsilon(1e-3));
}

TEST_CASE("lp_norm: invalid inputs") {
  Grid g = Grid::make_1d(0.0, 1.0, 0.25);
  GridFunction u(g, 1.0);
  CHECK_THROWS_AS(lp_norm(u, 0.5), InvalidInputError);
  u[1] = std::nan("");
  CHECK_THROWS_AS(lp_norm(u, 2.0), InvalidInputError);
}

TEST_CASE("weighted_lp_norm: unit and null weights") {
  Grid g = Grid::make_1d(-1.0, 1.0, 0.125);
  GridFunction u = sample(g, [](const Vec& x) { return std::cos(x[0]); });
  GridFunction one(g, 1.0), zero(g);
  CHECK(weighted_lp_norm(u, 2.0, one) == lp_norm(u, 2.0));
  CHECK(weighted_lp_norm(u, 2.0, zero) == 0.0);
  GridFunction neg(g, -1.0);
  CHECK_THROWS_AS(weighted_lp_norm(u, 2.0, neg), InvalidInputError);
}

TEST_CASE("weighted_lp_norm: int_0^1 x dx = 1/2") {
  Grid g = Grid::make_1d(0.0, 1.0, std::pow(2.0, -10));
  GridFunction u(g, 1.0);
  GridFunction w = sample(g, [](const Vec& x) { return x[0]; });
  CHECK(weighted_lp_norm(u, 1.0, w) == doctest::Approx(0.5).epsilon(1e-3));
}

TEST_CASE("lp_norm properties: homogeneity and triangle inequality") {
  Grid g = Grid::make_1d(-2.0, 2.0, 0.0625);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (double p : {1.0, 1.5, 2.0, 3.0}) {
    GridFunction u(g), v(g);
    for (int i = 0; i < g.node_count(); ++i) {
      u[i] = unif(rng);
      v[i] = unif(rng);
    }
    const double c = 3.7;
    GridFunction cu = u;
    for (auto& x : cu.values) x *= c;
    CHECK(lp_norm(cu, p) == doctest::Approx(c * lp_norm(u, p)).epsilon(1e-12));
    GridFunction uv = u;
    for (int i = 0; i < g.node_count(); ++i) uv[i] += v[i];
    CHECK(lp_norm(uv, p) <= (lp_norm(u, p) + lp_norm(v, p)) * (1.0 + 1e-12));
  }
}

TEST_CASE("discrete_gradient: constants, affine exactness, sin error") {
  Grid g = Grid::make_1d(0.0, M_PI, std::pow(2.0, -8));
  GridFunction c(g, 4.2);
  auto gc = discrete_gradient(c);
  for (double v : gc[0]) CHECK(v == 0.0);

  GridFunction lin = sample(g, [](const Vec& x) { return 2.0 * x[0] - 1.0; });
  auto gl = discrete_gradient(lin);
  for (int i = 0; i < g.node_count(); ++i)
    CHECK(gl[0][static_cast<size_t>(i)] == doctest::Approx(2.0).epsilon(1e-12));

  GridFunction s = sample(g, [](const Vec& x) { return std::sin(x[0]); });
  auto gs = discrete_gradient(s);
  double err = 0.0;
  for (int i = 0; i < g.node_count(); ++i)
    err = std::max(err, std::abs(gs[0][static_cast<size_t>(i)] - std::cos(g.node(i)[0])));
  CHECK(err <= 1e-4);
}

TEST_CASE("discrete_gradient: 2D affine exactness at interior nodes") {
  Grid g = Grid::make_2d(Vec{-1.0, -1.0}, Vec{1.0, 1.0}, 0.125);
  GridFunction u = sample(g, [](const Vec& x) { return 3.0 * x[0] - 2.0 * x[1]; });
  auto gr = discrete_gradient(u);
  for (int i0 = 1; i0 + 1 < g.n[0]; ++i0)
    for (int i1 = 1; i1 + 1 < g.n[1]; ++i1) {
      CHECK(gr[0][static_cast<size_t>(g.index(i0, i1))] == doctest::Approx(3.0));
      CHECK(gr[1][static_cast<size_t>(g.index(i0, i1))] == doctest::Approx(-2.0));
    }
}

TEST_CASE("directional_seminorm: hat function") {
  Grid g = Grid::make_1d(-2.0, 2.0, std::pow(2.0, -10));
  GridFunction u = sample(g, [](const Vec& x) { return std::max(0.0, 1.0 - std::abs(x[0])); });
  GridFunction one(g, 1.0);
  const Vec plus{1.0, 0.0}, minus{-1.0, 0.0};
  CHECK(directional_seminorm(u, plus, 2.0, one) == doctest::Approx(2.0).epsilon(0.01));
  CHECK(directional_seminorm(u, plus, 1.0, one) == doctest::Approx(2.0).epsilon(0.01));
  CHECK(directional_seminorm(u, plus, 2.0, one) ==
        directional_seminorm(u, minus, 2.0, one));
  GridFunction c(g, 1.0);
  CHECK(directional_seminorm(c, plus, 2.0, one) == 0.0);
  CHECK_THROWS_AS(directional_seminorm(u, Vec{0.5, 0.0}, 2.0, one), InvalidInputError);
}

TEST_CASE("mollify: mass preservation, contraction to u, monotone step") {
  Grid g = Grid::make_1d(-3.0, 3.0, std::pow(2.0, -7));
  GridFunction u = sample(g, [](const Vec& x) { return std::max(0.0, 1.0 - std::abs(x[0])); });
  u.support_radius = 1.0;

  const double mass0 = integral(u);
  double prev = 1e300;
  for (int j : {4, 16, 64}) {
    GridFunction m = mollify(u, j);
    CHECK(integral(m) == doctest::Approx(mass0).epsilon(1e-10));
    GridFunction diff = m;
    for (int i = 0; i < g.node_count(); ++i) diff[i] -= u[i];
    const double dist = lp_norm(diff, 2.0);
    CHECK(dist < prev);
    prev = dist;
  }

  // constant data reproduced wherever the stencil sits inside the plateau
  GridFunction c = sample(g, [](const Vec& x) { return std::abs(x[0]) <= 2.0 ? 3.0 : 0.0; });
  GridFunction mc = mollify(c, 4);
  for (int i = 0; i < g.node_count(); ++i)
    if (std::abs(g.node(i)[0]) <= 2.0 - 0.25 - g.h)
      CHECK(mc[i] == doctest::Approx(3.0).epsilon(1e-12));

  GridFunction step = sample(Grid::make_1d(-1.0, 1.0, 0.015625),
                             [](const Vec& x) { return x[0] >= 0.0 ? 1.0 : 0.0; });
  GridFunction ms = mollify(step, 4);
  for (size_t i = 1; i < ms.values.size(); ++i) {
    CHECK(ms.values[i] >= ms.values[i - 1] - 1e-14);
    CHECK(ms.values[i] >= 0.0);
    CHECK(ms.values[i] <= 1.0 + 1e-14);
  }

  Grid tiny = Grid::make_1d(0.0, 0.5, 0.125);
  GridFunction t(tiny, 1.0);
  CHECK_THROWS_AS(mollify(t, 1), DomainTooSmallError);
}

TEST_CASE("GridFunction CSV round trip") {
  Grid g = Grid::make_2d(Vec{-1.0, 0.0}, Vec{1.0, 0.5}, 0.25);
  GridFunction u = sample(g, [](const Vec& x) { return std::sin(x[0]) + x[1] * x[1]; });
  std::stringstream ss;
  write_csv(u, ss);
  GridFunction v = read_csv(ss);
  REQUIRE(v.grid.same_layout(g));
  for (int i = 0; i < g.node_count(); ++i) CHECK(v[i] == u[i]);
}

TEST_CASE("support radius invariant") {
  Grid g = Grid::make_1d(-2.0, 2.0, 0.125);
  GridFunction u = sample(g, [](const Vec& x) { return std::max(0.0, 1.0 - std::abs(x[0])); });
  u.support_radius = 1.0;
  CHECK_NOTHROW(u.check_support_radius());
  u.support_radius = 0.5;
  CHECK_THROWS_AS(u.check_support_radius(), InvalidInputError);
}
