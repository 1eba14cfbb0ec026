#include "bbmlab/quadrature.hpp"

#include <cmath>
#include <vector>

#include "bbmlab/errors.hpp"

namespace bbmlab {

namespace {

// Kronrod abscissae (positive half), Gauss-7 and Kronrod-15 weights.
const double kNW[8][3] = {
    {0.000000000000000, 0.417959183673469, 0.209482141084728},
    {0.405845151377397, 0.381830050505119, 0.190350578064785},
    {0.741531185599394, 0.279705391489277, 0.140653259715525},
    {0.949107912342759, 0.129484966168870, 0.063092092629979},
    {0.207784955007898, 0.0, 0.204432940075298},
    {0.586087235467691, 0.0, 0.169004726639267},
    {0.864864423359769, 0.0, 0.104790010322250},
    {0.991455371120813, 0.0, 0.022935322010529}};

double g7k15(const std::function<double(double)>& f, double a, double b, double& err) {
  const double c = 0.5 * (a + b);
  const double m = b - c;
  const double y0 = f(c);
  double g7 = kNW[0][1] * y0;
  double k15 = kNW[0][2] * y0;
  for (int i = 1; i < 8; ++i) {
    const double dx = m * kNW[i][0];
    const double yi = f(c + dx) + f(c - dx);
    g7 += kNW[i][1] * yi;
    k15 += kNW[i][2] * yi;
  }
  g7 *= m;
  k15 *= m;
  err = std::abs(g7 - k15);
  return k15;
}

double adapt(const std::function<double(double)>& f, double a, double b, double tol,
             int depth, int max_depth) {
  double err;
  const double s = g7k15(f, a, b, err);
  if (err <= tol || depth >= max_depth) return s;
  const double c = 0.5 * (a + b);
  return adapt(f, a, c, 0.5 * tol, depth + 1, max_depth) +
         adapt(f, c, b, 0.5 * tol, depth + 1, max_depth);
}

}  // namespace

double adaptive_integrate(const std::function<double(double)>& f, double a, double b,
                          double rel_tol, double abs_tol, int max_depth) {
  if (a == b) return 0.0;
  double err;
  const double coarse = g7k15(f, a, b, err);
  const double tol = std::max(abs_tol, rel_tol * std::abs(coarse));
  if (err <= tol) return coarse;
  return adapt(f, a, b, tol, 0, max_depth);
}

double power_moment(const PowerLaw& pl, double a, double b, double moment) {
  const double e = pl.exponent + moment;
  b = std::min(b, pl.valid_radius);
  if (b <= a) return 0.0;
  if (a <= 0.0 && e <= -1.0)
    throw SingularityError("power_moment: non-integrable exponent at r = 0");
  if (std::abs(e + 1.0) < 1e-14) return pl.prefactor * std::log(b / a);
  const double lo = a > 0.0 ? std::pow(a, e + 1.0) : 0.0;
  return pl.prefactor * (std::pow(b, e + 1.0) - lo) / (e + 1.0);
}

GaussRule gauss_legendre_16(double a, double b) {
  static const double x[8] = {0.0950125098376374, 0.2816035507792589, 0.4580167776572274,
                              0.6178762444026438, 0.7554044083550030, 0.8656312023878318,
                              0.9445750230732326, 0.9894009349916499};
  static const double w[8] = {0.1894506104550685, 0.1826034150449236, 0.1691565193950025,
                              0.1495959888165767, 0.1246289712555339, 0.0951585116824928,
                              0.0622535239386479, 0.0271524594117541};
  GaussRule r;
  const double c = 0.5 * (a + b);
  const double m = 0.5 * (b - a);
  for (int i = 7; i >= 0; --i) {
    r.nodes.push_back(c - m * x[i]);
    r.weights.push_back(m * w[i]);
  }
  for (int i = 0; i < 8; ++i) {
    r.nodes.push_back(c + m * x[i]);
    r.weights.push_back(m * w[i]);
  }
  return r;
}

}  // namespace bbmlab
