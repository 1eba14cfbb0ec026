#pragma once

#include <functional>
#include <limits>
#include <vector>
#include <optional>

namespace bbmlab {

/// Adaptive Gauss7/Kronrod15 integration of f on [a, b].
/// Subdivides until the local error estimate meets rel_tol*|sum| + abs_tol.
double adaptive_integrate(const std::function<double(double)>& f, double a, double b,
                          double rel_tol = 1e-10, double abs_tol = 1e-14,
                          int max_depth = 40);

/// Pure power-law radial profile rho(r) = prefactor * r^exponent, valid on
/// (0, valid_radius). Integrable moments get closed-form handling at 0.
struct PowerLaw {
  double prefactor = 0.0;
  double exponent = 0.0;
  double valid_radius = std::numeric_limits<double>::infinity();
};

/// int_a^b prefactor r^(exponent+moment) dr in closed form; requires
/// exponent + moment > -1 when a == 0.
double power_moment(const PowerLaw& pl, double a, double b, double moment);

/// Gauss-Legendre nodes/weights on [a, b] (16-point fixed rule).
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
GaussRule gauss_legendre_16(double a, double b);

}  // namespace bbmlab
