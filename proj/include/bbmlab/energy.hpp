#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "bbmlab/grid.hpp"
#include "bbmlab/kernels.hpp"
#include "bbmlab/weights.hpp"

namespace bbmlab {

struct EnergyOptions {
  double truncation = 8.0;   // z-integral truncated at |z| <= truncation
  double delta = 0.125;      // breakdown split; far field starts at 1/delta
  double overflow_guard = 1e100;
};

/// near (|z| < delta) / mid (delta <= |z| <= 1/delta) / far (|z| > 1/delta)
/// decomposition of the double-sum quadrature. The |z| < h cell is handled
/// by the closed-form Taylor rule for pure-power radial kernels (included
/// in near_field and reported in near_cell_correction); otherwise it is
/// dropped and near_cell_dropped is set.
struct EnergyBreakdown {
  double total = 0.0;
  double near_field = 0.0;
  double mid_field = 0.0;
  double far_field = 0.0;
  double delta = 0.0;
  double truncation_radius = 0.0;
  double near_cell_correction = 0.0;
  bool near_cell_dropped = false;
  double tail_bound = 0.0;  // analytic bound on the part beyond truncation
};

/// F_{k,p}^{w_k}(u): double-sum quadrature of
/// |u(x)-u(y)|^p / |x-y|^p rho(x-y) w(x,y) over node pairs, with u extended
/// by zero outside its box. index absent means the limit weight w.
EnergyBreakdown nonlocal_energy(const GridFunction& u, const Kernel& rho,
                                const WeightFamily& wf, std::optional<double> index,
                                double p, const EnergyOptions& opts = {});

/// [u]_{W^{kappa,p}_w}^p: same engine with the kernel slot carrying kappa
/// directly (no |z|^-p factor); uses the limit weight.
double gagliardo_seminorm(const GridFunction& u, const Kernel& kappa,
                          const WeightFamily& wf, double p, const EnergyOptions& opts = {});

/// D^mu_{p,w}(u): mu-average over directions of the w^0-weighted
/// directional seminorm (centered differences; p = 1 is the discrete
/// weighted total variation surrogate for Lipschitz data).
double limit_energy(const GridFunction& u, const LimitMeasure& mu,
                    const DiagonalWeight& w0, double p);

// --- General J-functionals -------------------------------------------------

struct JSpec {
  std::function<double(double, const Vec&, const Vec&)> eval_k;  // (index, x, y)
  std::function<double(const Vec&, const Vec&)> eval_limit;
  DomainMask domain;
  std::optional<std::function<bool(const Vec&, const Vec&)>> monotone_plus;
  std::optional<std::function<bool(const Vec&, const Vec&)>> monotone_minus;
  std::optional<double> domination_constant;

  // Difference-kernel structure J_k(x,y) = rho_k(x-y) w_k(x,y) / |x-y|^p;
  // when present, j_energy runs the exact nonlocal_energy code path. The
  // limit J(x,y) = kappa(x-y) w(x,y) with kappa already the quotient kernel.
  struct Separable {
    KernelFamily kernels;
    WeightFamily weights;
    double p = 2.0;
    Kernel kappa_limit;
  };
  std::optional<Separable> separable;

  static JSpec from_separable(const KernelFamily& kernels, const WeightFamily& weights,
                              double p, const DomainMask& domain, const Kernel& kappa_limit);
};

/// J_{k,p}(u) = sum over A x A node pairs of |u(x)-u(y)|^p J_k(x,y) h^{2N}.
/// index absent means the limit J.
double j_energy(const GridFunction& u, const JSpec& spec, std::optional<double> index,
                double p, const EnergyOptions& opts = {});

struct EpsDelta {
  double eps = 0.0;
  double delta = 0.0;
};

struct JConditionRow {
  std::string condition;
  bool pass = true;
  bool applicable = true;
  double observed = 0.0;   // worst margin / ratio, condition-specific
  std::string witness;     // human-readable offending sample, if any
};

struct JConditionReport {
  std::vector<JConditionRow> rows;
  bool all_pass = true;
};

/// Pass/fail-on-witness probes of the J-functional conditions: the
/// small-scale lower bound per (eps, delta), liminf J_k >= J, the dominated
/// bound sup_k J_k <= C J, and the monotone partition.
JConditionReport j_condition_check(const JSpec& spec, const std::vector<EpsDelta>& table,
                                   const std::vector<double>& indices, const PairNet& net);

// --- Quantitative inequality checkers --------------------------------------

/// Closed-form test function with analytic derivatives for the C^2 checks.
struct ClosedForm {
  int dim = 1;
  std::string name;
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> grad;
  std::function<std::array<double, 4>(const Vec&)> hess;  // row-major N x N
  bool c2 = false;
  double support_radius = 0.0;  // clamp radius used when sampling
};

GridFunction sample_closed_form(const ClosedForm& f, const Grid& g);

struct FtcSides {
  double lhs_i = 0.0;   // ||u(.+z)-u||_{L^p(w^z)}^p
  double rhs_i = 0.0;   // ||z.Du||_{L^p(w^0)}^p + omega(|z|)|z|^p ||Du||_p^p
  double lhs_ii = 0.0;  // | ||u(.+z)-u||_{L^p(w^z)} - ||z.Du||_{L^p(w^0)} |
  double rhs_ii = 0.0;  // (|z|^2/2)||D^2u||_p + |z| omega(|z|)^{1/p} ||Du||_p
};

/// Both sides of the FTC estimates by grid quadrature; derivatives of u are
/// analytic (requires a C^2 closed form and a modulus on the weight).
FtcSides ftc_check(const ClosedForm& u, const Grid& g, const Vec& z,
                   const WeightFamily& wf, double p);

struct WeightPerturbationGap {
  double gap = 0.0;        // |F^{w_k}(u) - F^{w}(u)|
  double bound = 0.0;      // F^1(u) * sup over visited pairs of |w_k - w|
  double f1 = 0.0;         // F^1(u)
  double sup_dist = 0.0;   // sup over the energy quadrature pairs
};

WeightPerturbationGap weight_perturbation_gap(const GridFunction& u, const Kernel& rho,
                                              const WeightFamily& wf, double index, double p,
                                              const EnergyOptions& opts = {});

struct EllRBoundCheck {
  bool precondition_ok = true;   // supp u in B_R and ||w_k - w|| <= ell_R/2
  std::string precondition_note;
  double ell = 0.0;
  double w_dist = 0.0;
  double lhs = 0.0;              // F^1_{k,p}(u)
  double rhs = 0.0;              // (2/ell) F^{w_k}(u) + discrete tail term
  double tail_term = 0.0;        // 2^p ||u||_p^p * matched-offset tail sum
  double analytic_tail = 0.0;    // closed-form tail bound, when available
};

EllRBoundCheck ell_R_bound_check(const GridFunction& u, const Kernel& rho,
                                 const WeightFamily& wf, double index, double p, double R,
                                 const EnergyOptions& opts = {});

struct MollificationDefectRow {
  double index = 0.0;
  double defect = 0.0;        // ||eta_delta * u_k - u_k||_{L^p(E)}^p
  double epsilon_used = 0.0;  // 1 / (delta^N * min visited J_k)
  double j_value = 0.0;       // J_{k,p}(u_k)
  double budget = 0.0;        // epsilon_used * j_value
  double lp = 0.0;            // ||u_k||_p
};

struct MollificationDefectReport {
  std::vector<MollificationDefectRow> rows;
  bool energy_unbounded = false;  // J blow-up along the sequence
};

/// Compactness probe: box-mollifier defect on E against eps * J_{k,p}(u_k).
MollificationDefectReport mollification_defect(const std::vector<GridFunction>& u_seq,
                                               const std::vector<double>& indices,
                                               double delta, const DomainMask& E,
                                               const JSpec& spec, double p,
                                               const EnergyOptions& opts = {});

// --- internals shared with the spectral assembly ---------------------------

namespace detail {

/// Kernel factor at lattice offset z: rho(z)/|z|^p (or kappa(z) in quotient
/// mode), guarded against overflow.
double offset_kernel_value(const Kernel& k, const Vec& z, double p, bool quotient,
                           double guard);

/// Closed-form int_{|z|<h} factor of the near-cell Taylor rule:
/// Lambda_N(p) * int_0^h rho(r) r^{N-1} dr (quotient mode: moment p+N-1).
/// Returns nullopt when no valid power law covers (0, h).
std::optional<double> near_cell_factor(const Kernel& k, int dim, double h, double p,
                                       bool quotient);

double angular_lp_factor(int dim, double p);  // Lambda_N(p)

/// Total energy and its gradient dF/du_i (mask-restricted pairs when mask
/// is given); backs the descent eigensolver.
double nonlocal_energy_with_gradient(const GridFunction& u, const Kernel& rho,
                                     const WeightFamily& wf, std::optional<double> index,
                                     double p, const DomainMask* mask,
                                     const EnergyOptions& opts, std::vector<double>& grad);

}  // namespace detail

}  // namespace bbmlab
