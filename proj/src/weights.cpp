#include "bbmlab/weights.hpp"

#include <cmath>
#include <random>

#include "bbmlab/quadrature.hpp"

namespace bbmlab {

WeightFamily unit_weight(int dim) {
  WeightFamily w;
  w.dim = dim;
  w.kind = WeightFamily::Kind::Unit;
  w.eval_k = [](double, const Vec&, const Vec&) { return 1.0; };
  w.eval_limit = [](const Vec&, const Vec&) { return 1.0; };
  w.sup_norm_limit = 1.0;
  w.modulus = [](double) { return 0.0; };
  w.symmetric = true;
  w.label = "one";
  w.factor_limit = [](const Vec&) { return 1.0; };
  w.factor_k = [](double, const Vec&) { return 1.0; };
  return w;
}

WeightFamily product_weight(const std::function<double(double, const Vec&)>& f_k,
                            const std::function<double(const Vec&)>& f, int dim,
                            double lipschitz, double sup_norm) {
  if (lipschitz < 0.0 || sup_norm < 0.0)
    throw InvalidInputError("product_weight: bounds must be nonnegative");
  // Nonnegativity spot-check on a coarse net (limit factor and a few indices).
  const int m = dim == 1 ? 513 : 33;
  for (int i = 0; i < m; ++i) {
    const int jmax = dim == 2 ? m : 1;
    for (int j = 0; j < jmax; ++j) {
      Vec x{-16.0 + 32.0 * i / (m - 1), dim == 2 ? -16.0 + 32.0 * j / (m - 1) : 0.0};
      if (f(x) < 0.0) throw InvalidInputError("product_weight: negative sample of f");
      for (double k : {1.0, 4.0, 64.0})
        if (f_k(k, x) < 0.0)
          throw InvalidInputError("product_weight: negative sample of f_k");
    }
  }
  WeightFamily w;
  w.dim = dim;
  w.kind = WeightFamily::Kind::Product;
  w.factor_limit = f;
  w.factor_k = f_k;
  w.eval_k = [f_k](double k, const Vec& x, const Vec& y) { return f_k(k, x) * f_k(k, y); };
  w.eval_limit = [f](const Vec& x, const Vec& y) { return f(x) * f(y); };
  w.sup_norm_limit = sup_norm * sup_norm;
  w.modulus = [lipschitz, sup_norm](double t) { return lipschitz * sup_norm * t; };
  w.symmetric = true;
  w.label = "product";
  return w;
}

WeightFamily general_weight(const std::function<double(double, const Vec&, const Vec&)>& eval_k,
                            const std::function<double(const Vec&, const Vec&)>& eval_limit,
                            int dim, std::optional<std::function<double(double)>> modulus,
                            bool symmetric, const std::string& label) {
  WeightFamily w;
  w.dim = dim;
  w.kind = WeightFamily::Kind::General;
  w.eval_k = eval_k;
  w.eval_limit = eval_limit;
  w.modulus = std::move(modulus);
  w.symmetric = symmetric;
  w.label = label;
  return w;
}

DiagonalWeight diagonal_trace(const WeightFamily& wf, const Grid& grid) {
  return sample(grid, [&wf](const Vec& x) { return wf.eval_limit(x, x); });
}

DiagonalWeight diagonal_trace_k(const WeightFamily& wf, double index, const Grid& grid) {
  return sample(grid, [&wf, index](const Vec& x) { return wf.eval_k(index, x, x); });
}

PairNet make_pair_net(double box, double z_reach, double spacing, int dim) {
  PairNet net;
  const int m = static_cast<int>(std::floor(box / spacing));
  const int zr = static_cast<int>(std::floor(z_reach / spacing));
  auto points = [&](int reach) {
    std::vector<Vec> pts;
    for (int i = -reach; i <= reach; ++i) {
      if (dim == 1) {
        pts.push_back(Vec{i * spacing, 0.0});
      } else {
        for (int j = -reach; j <= reach; ++j) pts.push_back(Vec{i * spacing, j * spacing});
      }
    }
    return pts;
  };
  for (const Vec& x : points(m))
    for (const Vec& z : points(zr)) {
      if (norm(z, dim) > z_reach + 1e-12) continue;
      net.push_back({x, Vec{x[0] + z[0], x[1] + z[1]}});
    }
  if (net.empty()) throw InvalidInputError("make_pair_net: empty net");
  return net;
}

PairNet make_ell_net(double R, double spacing, int dim) {
  PairNet net;
  const int mx = static_cast<int>(std::floor(R / spacing));
  const int mz = static_cast<int>(std::floor(2.0 * R / spacing));
  auto ball = [&](int reach, double radius) {
    std::vector<Vec> pts;
    for (int i = -reach; i <= reach; ++i) {
      if (dim == 1) {
        Vec v{i * spacing, 0.0};
        if (norm(v, 1) <= radius + 1e-12) pts.push_back(v);
      } else {
        for (int j = -reach; j <= reach; ++j) {
          Vec v{i * spacing, j * spacing};
          if (norm(v, 2) <= radius + 1e-12) pts.push_back(v);
        }
      }
    }
    return pts;
  };
  for (const Vec& x : ball(mx, R))
    for (const Vec& z : ball(mz, 2.0 * R))
      net.push_back({x, Vec{x[0] + z[0], x[1] + z[1]}});
  if (net.empty()) throw InvalidInputError("make_ell_net: empty net");
  return net;
}

double sup_distance(const WeightFamily& wf, double index, const PairNet& net) {
  if (net.empty()) throw InvalidInputError("sup_distance: empty net");
  double m = 0.0;
  for (const auto& [x, y] : net)
    m = std::max(m, std::abs(wf.eval_k(index, x, y) - wf.eval_limit(x, y)));
  return m;
}

double ell_R(const WeightFamily& wf, double R, const PairNet& net) {
  if (!(R > 0.0)) throw InvalidInputError("ell_R: R must be positive");
  if (net.empty()) throw InvalidInputError("ell_R: empty net");
  double m = std::numeric_limits<double>::infinity();
  for (const auto& [x, y] : net) m = std::min(m, wf.eval_limit(x, y));
  return m;
}

MollifiedWeightGap mollified_weight_gap(const WeightFamily& wf, int j, const PairNet& net) {
  if (j < 1) throw InvalidInputError("mollified_weight_gap: j must be >= 1");
  if (!wf.modulus) throw InvalidInputError("mollified_weight_gap: modulus required");
  const int dim = wf.dim;
  const double radius = 1.0 / j;

  // Quadrature of int w(x+t, y+t) eta_j(t) dt; eta is polynomial of degree 4
  // inside its support, so a 16-point Gauss rule per axis (polar in 2D) is
  // exact up to the smoothness of w.
  auto mollified = [&](const Vec& x, const Vec& y) {
    double acc = 0.0;
    if (dim == 1) {
      const GaussRule rule = gauss_legendre_16(-radius, radius);
      for (size_t q = 0; q < rule.nodes.size(); ++q) {
        const Vec t{rule.nodes[q], 0.0};
        const double eta = j * mollifier_eta(Vec{t[0] * j, 0.0}, 1);
        acc += rule.weights[q] * eta * wf.eval_limit(Vec{x[0] + t[0], 0.0}, Vec{y[0] + t[0], 0.0});
      }
    } else {
      const GaussRule radial = gauss_legendre_16(0.0, radius);
      const GaussRule angular = gauss_legendre_16(0.0, 2.0 * M_PI);
      for (size_t qr = 0; qr < radial.nodes.size(); ++qr) {
        const double r = radial.nodes[qr];
        const double eta = j * j * mollifier_eta(Vec{r * j, 0.0}, 2);
        for (size_t qa = 0; qa < angular.nodes.size(); ++qa) {
          const Vec t{r * std::cos(angular.nodes[qa]), r * std::sin(angular.nodes[qa])};
          acc += radial.weights[qr] * angular.weights[qa] * r * eta *
                 wf.eval_limit(Vec{x[0] + t[0], x[1] + t[1]}, Vec{y[0] + t[0], y[1] + t[1]});
        }
      }
    }
    return acc;
  };

  MollifiedWeightGap out;
  for (const auto& [x, y] : net)
    out.sampled_gap = std::max(out.sampled_gap, std::abs(mollified(x, y) - wf.eval_limit(x, y)));
  out.bound = unit_ball_volume(dim) * mollifier_sup(dim) * (*wf.modulus)(2.0 / j);
  return out;
}

std::optional<ModulusViolation> check_modulus(const WeightFamily& wf, double box,
                                              int quadruples, unsigned long long seed) {
  if (!wf.modulus) throw InvalidInputError("check_modulus: modulus required");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-box, box);
  auto draw = [&]() {
    Vec v{unif(rng), wf.dim == 2 ? unif(rng) : 0.0};
    return v;
  };
  std::optional<ModulusViolation> worst;
  for (int q = 0; q < quadruples; ++q) {
    const Vec x = draw(), y = draw(), xp = draw(), yp = draw();
    Vec dx{x[0] - xp[0], x[1] - xp[1]}, dy{y[0] - yp[0], y[1] - yp[1]};
    const double t = norm(dx, wf.dim) + norm(dy, wf.dim);
    const double lhs = std::abs(wf.eval_limit(x, y) - wf.eval_limit(xp, yp));
    const double rhs = (*wf.modulus)(t);
    if (lhs > rhs + 1e-12 * std::max(1.0, rhs)) {
      if (!worst || lhs - rhs > worst->lhs - worst->rhs)
        worst = ModulusViolation{x, y, xp, yp, lhs, rhs};
    }
  }
  return worst;
}

}  // namespace bbmlab
