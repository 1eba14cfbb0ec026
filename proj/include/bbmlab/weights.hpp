#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "bbmlab/grid.hpp"

namespace bbmlab {

/// w^0(x) = w(x,x) sampled on a grid.
using DiagonalWeight = GridFunction;

/// Family of nonnegative weights w_k(x,y) with limit weight w(x,y) and an
/// optional modulus of continuity for w.
struct WeightFamily {
  enum class Kind { Unit, Product, General };

  int dim = 1;
  Kind kind = Kind::Unit;
  std::function<double(double, const Vec&, const Vec&)> eval_k;  // (index, x, y)
  std::function<double(const Vec&, const Vec&)> eval_limit;
  std::optional<double> sup_norm_limit;
  std::optional<std::function<double(double)>> modulus;  // omega(t)
  bool symmetric = true;
  std::string label;

  // Product structure w_k = f_k(x) f_k(y), w = f(x) f(y); lets the energy
  // quadrature precompute per-node factors.
  std::function<double(const Vec&)> factor_limit;
  std::function<double(double, const Vec&)> factor_k;  // (index, x)

  /// eval_k at the given index, or the limit weight when index is absent.
  double operator()(std::optional<double> index, const Vec& x, const Vec& y) const {
    return index ? eval_k(*index, x, y) : eval_limit(x, y);
  }
};

WeightFamily unit_weight(int dim);

/// w_k(x,y) = f_k(x) f_k(y), w(x,y) = f(x) f(y). The modulus is derived from
/// the supplied Lipschitz bound and sup of f; nonnegativity of f and f_k is
/// checked by sampling on a coarse default net.
WeightFamily product_weight(const std::function<double(double, const Vec&)>& f_k,
                            const std::function<double(const Vec&)>& f, int dim,
                            double lipschitz, double sup_norm);

/// General weight from callables; symmetric flags whether w(x,y) = w(y,x).
WeightFamily general_weight(const std::function<double(double, const Vec&, const Vec&)>& eval_k,
                            const std::function<double(const Vec&, const Vec&)>& eval_limit,
                            int dim, std::optional<std::function<double(double)>> modulus,
                            bool symmetric, const std::string& label = "general");

DiagonalWeight diagonal_trace(const WeightFamily& wf, const Grid& grid);

/// Diagonal of w_k at a fixed index (used by the energy near-cell rule).
DiagonalWeight diagonal_trace_k(const WeightFamily& wf, double index, const Grid& grid);

/// Sample nets of (x, y) pairs.
using PairNet = std::vector<std::pair<Vec, Vec>>;

/// All pairs (x, x+z) with x, x+z on a per-axis lattice of the given spacing
/// covering [-box, box]^N; z additionally limited to |z| <= z_reach.
PairNet make_pair_net(double box, double z_reach, double spacing, int dim);

/// Pairs (x, x+z) with x in B_R and z in B_{2R} on a lattice of the spacing.
PairNet make_ell_net(double R, double spacing, int dim);

/// max over the net of |w_k - w|; a lower bound for ||w_k - w||_inf.
double sup_distance(const WeightFamily& wf, double index, const PairNet& net);

/// ell_R = inf { w(x, x+z) : x in B_R, z in B_2R }, sampled on the net.
double ell_R(const WeightFamily& wf, double R, const PairNet& net);

struct MollifiedWeightGap {
  double sampled_gap = 0.0;  // sup over the net of |w[eta_j] - w|
  double bound = 0.0;        // |B_1| ||eta||_inf omega(2/j)
};

/// w[eta_j](x,y) = int w(x+t, y+t) eta_j(t) dt by Gauss quadrature.
MollifiedWeightGap mollified_weight_gap(const WeightFamily& wf, int j, const PairNet& net);

struct ModulusViolation {
  Vec x, y, xp, yp;
  double lhs = 0.0;  // |w(x,y) - w(x',y')|
  double rhs = 0.0;  // omega(|x-x'| + |y-y'|)
};

/// Checks the modulus inequality on random quadruples in [-box, box]^N.
/// Returns the worst violating quadruple, if any.
std::optional<ModulusViolation> check_modulus(const WeightFamily& wf, double box,
                                              int quadruples, unsigned long long seed);

}  // namespace bbmlab
