#include "bbmlab/functions.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace bbmlab {

ClosedForm hat_function(int dim) {
  ClosedForm f;
  f.dim = dim;
  f.name = "hat";
  f.support_radius = 1.0;
  f.c2 = false;  // kinks at 0 and |x| = 1
  f.value = [dim](const Vec& x) { return std::max(0.0, 1.0 - norm(x, dim)); };
  f.grad = [dim](const Vec& x) {
    const double r = norm(x, dim);
    if (r == 0.0 || r >= 1.0) return Vec{0.0, 0.0};
    return Vec{-x[0] / r, dim == 2 ? -x[1] / r : 0.0};
  };
  f.hess = [](const Vec&) { return std::array<double, 4>{0, 0, 0, 0}; };
  return f;
}

ClosedForm gaussian_function(int dim, double s) {
  if (!(s > 0.0)) throw InvalidInputError("gaussian: scale must be positive");
  ClosedForm f;
  f.dim = dim;
  f.name = "gaussian";
  f.support_radius = 6.0 * s;
  f.c2 = true;
  const double is2 = 1.0 / (s * s);
  f.value = [dim, is2](const Vec& x) {
    double r2 = x[0] * x[0];
    if (dim == 2) r2 += x[1] * x[1];
    return std::exp(-r2 * is2);
  };
  f.grad = [dim, is2, f](const Vec& x) {
    const double v = f.value(x);
    return Vec{-2.0 * x[0] * is2 * v, dim == 2 ? -2.0 * x[1] * is2 * v : 0.0};
  };
  f.hess = [dim, is2, f](const Vec& x) {
    const double v = f.value(x);
    std::array<double, 4> H{0, 0, 0, 0};
    H[0] = (4.0 * x[0] * x[0] * is2 * is2 - 2.0 * is2) * v;
    if (dim == 2) {
      H[3] = (4.0 * x[1] * x[1] * is2 * is2 - 2.0 * is2) * v;
      H[1] = H[2] = 4.0 * x[0] * x[1] * is2 * is2 * v;
    }
    return H;
  };
  return f;
}

ClosedForm bump_function(int dim) {
  ClosedForm f;
  f.dim = dim;
  f.name = "bump";
  f.support_radius = 1.0;
  f.c2 = true;
  f.value = [dim](const Vec& x) {
    double r2 = x[0] * x[0];
    if (dim == 2) r2 += x[1] * x[1];
    if (r2 >= 1.0) return 0.0;
    return std::exp(-1.0 / (1.0 - r2));
  };
  f.grad = [dim, f](const Vec& x) {
    double r2 = x[0] * x[0];
    if (dim == 2) r2 += x[1] * x[1];
    if (r2 >= 1.0) return Vec{0.0, 0.0};
    const double t = 1.0 - r2;
    const double v = f.value(x);
    return Vec{-2.0 * x[0] / (t * t) * v, dim == 2 ? -2.0 * x[1] / (t * t) * v : 0.0};
  };
  f.hess = [dim, f](const Vec& x) {
    std::array<double, 4> H{0, 0, 0, 0};
    double r2 = x[0] * x[0];
    if (dim == 2) r2 += x[1] * x[1];
    if (r2 >= 1.0) return H;
    const double t = 1.0 - r2;
    const double v = f.value(x);
    auto hij = [&](double xa, double xb, bool diag) {
      double h = 4.0 * xa * xb / (t * t * t * t) - 8.0 * xa * xb / (t * t * t);
      if (diag) h -= 2.0 / (t * t);
      return h * v;
    };
    H[0] = hij(x[0], x[0], true);
    if (dim == 2) {
      H[3] = hij(x[1], x[1], true);
      H[1] = H[2] = hij(x[0], x[1], false);
    }
    return H;
  };
  return f;
}

namespace {

// C^2 envelope (1 - (t/L)^2)^3 on |t| < L.
struct Envelope {
  double L;
  double v(double t) const {
    const double q = 1.0 - (t / L) * (t / L);
    return q <= 0.0 ? 0.0 : q * q * q;
  }
  double d1(double t) const {
    const double q = 1.0 - (t / L) * (t / L);
    return q <= 0.0 ? 0.0 : -6.0 * t / (L * L) * q * q;
  }
  double d2(double t) const {
    const double q = 1.0 - (t / L) * (t / L);
    if (q <= 0.0) return 0.0;
    return -6.0 / (L * L) * q * q + 24.0 * t * t / (L * L * L * L) * q;
  }
};

}  // namespace

ClosedForm sinpacket_function(int dim, double omega, double L) {
  ClosedForm f;
  f.dim = dim;
  f.name = "sinpacket";
  f.support_radius = L * std::sqrt(static_cast<double>(dim));
  f.c2 = true;
  const Envelope env{L};
  auto s = [omega](double t) { return std::sin(omega * t); };
  auto s1 = [omega](double t) { return omega * std::cos(omega * t); };
  auto s2 = [omega](double t) { return -omega * omega * std::sin(omega * t); };
  f.value = [dim, env, s](const Vec& x) {
    double v = s(x[0]) * env.v(x[0]);
    if (dim == 2) v *= env.v(x[1]);
    return v;
  };
  f.grad = [dim, env, s, s1](const Vec& x) {
    const double a = s1(x[0]) * env.v(x[0]) + s(x[0]) * env.d1(x[0]);
    if (dim == 1) return Vec{a, 0.0};
    return Vec{a * env.v(x[1]), s(x[0]) * env.v(x[0]) * env.d1(x[1])};
  };
  f.hess = [dim, env, s, s1, s2](const Vec& x) {
    std::array<double, 4> H{0, 0, 0, 0};
    const double axx =
        s2(x[0]) * env.v(x[0]) + 2.0 * s1(x[0]) * env.d1(x[0]) + s(x[0]) * env.d2(x[0]);
    if (dim == 1) {
      H[0] = axx;
      return H;
    }
    H[0] = axx * env.v(x[1]);
    H[3] = s(x[0]) * env.v(x[0]) * env.d2(x[1]);
    H[1] = H[2] = (s1(x[0]) * env.v(x[0]) + s(x[0]) * env.d1(x[0])) * env.d1(x[1]);
    return H;
  };
  return f;
}

ClosedForm stepmoll_function(int dim, int j, double L) {
  if (dim != 1) throw InvalidInputError("stepmoll: 1D only");
  if (j < 1) throw InvalidInputError("stepmoll: j must be >= 1");
  ClosedForm f;
  f.dim = 1;
  f.name = "stepmoll";
  f.support_radius = L + 1.0 / j;
  f.c2 = true;  // eta in C^1 makes the mollified indicator C^2
  const double c = mollifier_sup(1);
  auto P = [c](double sarg) {
    const double s = std::clamp(sarg, -1.0, 1.0);
    return c * (s - 2.0 * s * s * s / 3.0 + std::pow(s, 5) / 5.0 + 8.0 / 15.0);
  };
  auto eta = [c](double sarg) {
    if (std::abs(sarg) >= 1.0) return 0.0;
    const double q = 1.0 - sarg * sarg;
    return c * q * q;
  };
  auto etap = [c](double sarg) {
    if (std::abs(sarg) >= 1.0) return 0.0;
    return -4.0 * c * sarg * (1.0 - sarg * sarg);
  };
  const double jd = j;
  f.value = [P, jd, L](const Vec& x) { return P((x[0] + L) * jd) - P((x[0] - L) * jd); };
  f.grad = [eta, jd, L](const Vec& x) {
    return Vec{jd * (eta((x[0] + L) * jd) - eta((x[0] - L) * jd)), 0.0};
  };
  f.hess = [etap, jd, L](const Vec& x) {
    return std::array<double, 4>{jd * jd * (etap((x[0] + L) * jd) - etap((x[0] - L) * jd)),
                                 0, 0, 0};
  };
  return f;
}

ClosedForm shifted(const ClosedForm& f, const Vec& c) {
  ClosedForm out = f;
  out.name = f.name + "_shifted";
  out.support_radius = f.support_radius + norm(c, f.dim);
  const ClosedForm base = f;
  out.value = [base, c](const Vec& x) {
    return base.value(Vec{x[0] - c[0], x[1] - c[1]});
  };
  out.grad = [base, c](const Vec& x) { return base.grad(Vec{x[0] - c[0], x[1] - c[1]}); };
  out.hess = [base, c](const Vec& x) { return base.hess(Vec{x[0] - c[0], x[1] - c[1]}); };
  return out;
}

ClosedForm scaled(const ClosedForm& f, double factor) {
  ClosedForm out = f;
  const ClosedForm base = f;
  out.value = [base, factor](const Vec& x) { return factor * base.value(x); };
  out.grad = [base, factor](const Vec& x) {
    const Vec g = base.grad(x);
    return Vec{factor * g[0], factor * g[1]};
  };
  out.hess = [base, factor](const Vec& x) {
    auto H = base.hess(x);
    for (double& v : H) v *= factor;
    return H;
  };
  return out;
}

ClosedForm parse_function_spec(const std::string& spec, int dim) {
  std::string name = spec;
  std::vector<double> args;
  const size_t open = spec.find('(');
  if (open != std::string::npos) {
    if (spec.back() != ')') throw ConfigError("function spec: missing ')': " + spec);
    name = spec.substr(0, open);
    std::istringstream in(spec.substr(open + 1, spec.size() - open - 2));
    std::string tok;
    while (std::getline(in, tok, ',')) args.push_back(std::stod(tok));
  }
  if (name == "hat") return hat_function(dim);
  if (name == "gaussian") return gaussian_function(dim, args.empty() ? 1.0 : args[0]);
  if (name == "bump") return bump_function(dim);
  if (name == "sinpacket")
    return sinpacket_function(dim, args.empty() ? 6.0 : args[0],
                              args.size() > 1 ? args[1] : 1.0);
  if (name == "stepmoll" || name == "indicator-mollified")
    return stepmoll_function(dim, args.empty() ? 4 : static_cast<int>(args[0]),
                             args.size() > 1 ? args[1] : 1.0);
  throw ConfigError("unknown function spec: " + spec);
}

}  // namespace bbmlab
