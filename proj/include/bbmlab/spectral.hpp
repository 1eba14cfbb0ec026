#pragma once

#include <optional>
#include <vector>

#include "bbmlab/energy.hpp"
#include "bbmlab/kernels.hpp"
#include "bbmlab/weights.hpp"

namespace bbmlab {

struct EigenOptions {
  enum class Solver { Matrix, Descent };
  Solver solver = Solver::Matrix;
  int max_iter = 400;
  double tol = 1e-12;
};

struct EigenResult {
  double lambda = 0.0;
  GridFunction eigenfunction;   // ||.||_{L^p} = 1, nonnegative integral
  double residual = 0.0;        // final Rayleigh-quotient decrement
  int iterations = 0;
  bool converged = false;
  bool degenerate = false;      // e.g. mu = 0 (any normalized u attains 0)
  bool upper_bound_only = false;  // descent on p != 2 certifies only an upper bound
};

/// First eigenvalue of F^{w_k}_{k,p} over L^p_0(Omega): p = 2 assembles the
/// quadratic-form matrix on Omega nodes and runs shifted inverse iteration;
/// other p run normalized descent on the Rayleigh quotient.
EigenResult first_eigen_nonlocal(const Kernel& rho, const WeightFamily& wf,
                                 std::optional<double> index, double p,
                                 const DomainMask& omega, const EnergyOptions& eopts = {},
                                 const EigenOptions& opts = {});

/// First eigenvalue of the local energy D^mu_{p,w} over W^{1,p}_0(Omega).
/// The discrete form uses forward differences (the standard discrete
/// Dirichlet form); for N = 1, p = 2, w = 1, mu = (1/2,1/2) it is exactly
/// the classical Dirichlet Laplacian.
EigenResult first_eigen_local(const LimitMeasure& mu, const DiagonalWeight& w0, double p,
                              const DomainMask& omega, const EigenOptions& opts = {});

/// The forward-difference discrete form the local eigensolver minimizes.
double local_form_energy(const GridFunction& u, const LimitMeasure& mu,
                         const DiagonalWeight& w0, double p);

/// Full nonlocal energy of a mask-supported function, evaluated exactly as
/// the eigensolver's quadratic form (zero extension outside Omega).
double nonlocal_form_energy(const GridFunction& u, const Kernel& rho,
                            const WeightFamily& wf, std::optional<double> index, double p,
                            const EnergyOptions& eopts = {});

struct PoincareEstimate {
  double constant = 0.0;        // A = 1/lambda
  double via_lambda = 0.0;
  double sample_max_ratio = 0.0;  // max over the bank of ||u||_p^p / D(u)
  bool no_poincare = false;       // lambda = 0
  double lambda = 0.0;
};

PoincareEstimate poincare_estimate(const LimitMeasure& mu, const WeightFamily& wf, double p,
                                   const DomainMask& omega,
                                   const std::vector<GridFunction>& test_bank,
                                   const EigenOptions& opts = {});

struct PoincareStabilityRow {
  double index = 0.0;
  double worst_margin = 0.0;  // min over the bank of rhs - lhs
  int failures = 0;
  bool all_pass = true;
};

struct PoincareStabilityReport {
  double constant = 0.0;  // A
  double eps = 0.0;
  std::vector<PoincareStabilityRow> rows;
  std::optional<double> empirical_k_eps;  // smallest index from which all pass
};

/// Checks ||u||_p^p <= (A + eps) F^{w_k}_{k,p}(u) over the index range and
/// bank; failures are data, not errors.
PoincareStabilityReport poincare_stability_check(
    const KernelFamily& family, const WeightFamily& wf, double p, const DomainMask& omega,
    double eps, double A, const std::vector<double>& indices,
    const std::vector<GridFunction>& test_bank, const EnergyOptions& eopts = {});

struct SpectralSweepRow {
  double index = 0.0;
  double lambda = 0.0;
  double gap_to_limit = 0.0;
  double ef_distance = 0.0;  // sign-aligned L^p distance to the limit eigenfunction
  bool converged = false;
};

struct SpectralSweepReport {
  double lambda_limit = 0.0;
  GridFunction limit_eigenfunction;
  std::vector<SpectralSweepRow> rows;
};

SpectralSweepReport spectral_stability_sweep(const KernelFamily& family,
                                             const WeightFamily& wf, double p,
                                             const DomainMask& omega,
                                             const std::vector<double>& indices,
                                             const LimitMeasure& mu,
                                             const EnergyOptions& eopts = {},
                                             const EigenOptions& opts = {});

}  // namespace bbmlab
