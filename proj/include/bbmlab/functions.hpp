#pragma once

#include <string>
#include <vector>

#include "bbmlab/energy.hpp"

namespace bbmlab {

/// Closed-form vocabulary: hat, gaussian(s), bump, sinpacket(omega, L),
/// stepmoll(j, L). All are compactly supported (the Gaussian is clamped at
/// 6s, below double rounding of its tails).
ClosedForm hat_function(int dim);
ClosedForm gaussian_function(int dim, double s = 1.0);
ClosedForm bump_function(int dim);
ClosedForm sinpacket_function(int dim, double omega = 6.0, double L = 1.0);
ClosedForm stepmoll_function(int dim, int j = 4, double L = 1.0);

ClosedForm shifted(const ClosedForm& f, const Vec& c);
ClosedForm scaled(const ClosedForm& f, double factor);

/// Parse "hat", "gaussian(0.5)", "bump", "sinpacket(6,1)", "stepmoll(4)".
ClosedForm parse_function_spec(const std::string& spec, int dim);

}  // namespace bbmlab
