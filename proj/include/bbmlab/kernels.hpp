#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "bbmlab/grid.hpp"
#include "bbmlab/quadrature.hpp"

namespace bbmlab {

/// One member rho of a kernel family (the family evaluated at a fixed index).
struct Kernel {
  int dim = 1;
  bool is_radial = true;
  std::function<double(const Vec&)> eval;       // z != 0
  std::function<double(double)> radial;         // r > 0; empty when !is_radial
  std::optional<PowerLaw> power_law;            // rho(r) = c r^a on (0, valid_radius)
  std::optional<double> support_radius;         // rho == 0 for |z| >= this
  std::string label;
};

/// Indexed family (rho_k) or (rho_s); the index is a real number.
struct KernelFamily {
  int dim = 1;
  bool is_radial = true;
  std::function<Kernel(double)> member;
  std::string label;
};

/// rho_s(z) = (1-s) |z|^{-(N-(1-s)p)}, s in (0,1).
Kernel fractional_kernel(double s, double p, int N);
KernelFamily fractional_family(double p, int N);

KernelFamily zero_family(int N);

/// rho_k(z) = (k/(k+1)) chi_{|z|<radius} |z|^p; the k -> infinity limit of
/// rho_k/|.|^p is the indicator kappa = chi_{B_radius}.
KernelFamily ramp_indicator_family(double p, int N, double radius = 1.0);
Kernel indicator_power_kernel(double p, int N, double radius = 1.0);

/// rho_k(z) = (1 + (-1)^k/(2k)) chi_{|z|<radius} |z|^p: dominated,
/// non-monotone convergence to the same kappa.
KernelFamily dominated_indicator_family(double p, int N, double radius = 1.0);

/// int_a^b rho(r) r^moment dr for a radial kernel. Uses the closed-form
/// power-law head near r = 0 when metadata is available, otherwise a
/// two-sample power extrapolation below r = head_cut plus adaptive
/// Gauss-Kronrod above it (the singularity is assumed integrable).
double radial_moment(const Kernel& k, double a, double b, double moment);

/// Same along the ray r -> r*sigma for possibly non-radial kernels.
double ray_moment(const Kernel& k, const Vec& sigma, double a, double b, double moment);

// --- Admissibility diagnostics -------------------------------------------

struct MassConditionOptions {
  double truncation_radius = 32.0;
  double overflow_guard = 1e12;
};

struct MassConditionEntry {
  double radius = 0.0;  // R
  double index = 0.0;   // k (or s)
  double value = 0.0;   // R^p int rho_k(z) / (R^p + |z|^p) dz, |z| <= trunc
  bool overflowed = false;
};

struct MassConditionReport {
  std::vector<MassConditionEntry> table;
  double mass_condition_value = 0.0;  // max over the table
  std::optional<std::pair<double, double>> offending;  // (R, k) on overflow
};

MassConditionReport mass_condition_check(const KernelFamily& family, double p,
                                         const std::vector<double>& indices,
                                         const std::vector<double>& radii,
                                         const MassConditionOptions& opts = {});

struct WeakStarReport {
  double delta = 0.0;
  double annulus_outer = 1.0;
  std::vector<double> indices;
  // Per-direction radial masses: int_0^delta rho_k(r) r^{N-1} dr and the
  // annulus (delta, annulus_outer) analogue (angular mean for non-radial).
  std::vector<double> near_origin_mass;
  std::vector<double> far_mass;
  double alpha_estimate = 0.0;  // stabilized near-origin mass along the schedule
  bool near_stabilized = false;
  bool far_vanishing = false;  // annulus-mass decay trend observed
};

WeakStarReport weak_star_check(const KernelFamily& family, const std::vector<double>& indices,
                               double delta, double annulus_outer = 1.0);

/// Aggregate of the Eq.-style admissibility constants.
struct AdmissibilityReport {
  double mass_condition_value = 0.0;
  std::vector<double> near_origin_mass;
  std::vector<double> far_mass;
  double alpha_estimate = 0.0;
};

AdmissibilityReport admissibility_report(const KernelFamily& family, double p,
                                         const std::vector<double>& indices,
                                         const std::vector<double>& radii, double delta,
                                         const MassConditionOptions& opts = {});

// --- Limit measure ---------------------------------------------------------

/// Finite nonnegative measure on S^{N-1}; atoms at +/-1 for N = 1,
/// quadrature nodes (angles) with masses on the circle for N = 2.
struct LimitMeasure {
  int dim = 1;
  double atom_plus = 0.0;
  double atom_minus = 0.0;
  std::vector<double> angles;
  std::vector<double> masses;

  static LimitMeasure atoms_1d(double plus, double minus);
  static LimitMeasure uniform_circle(double total_mass, int nodes);
  static LimitMeasure zero(int dim);

  double total_mass() const;
  bool is_zero(double tol = 0.0) const;
  void check_valid() const;
};

struct DoubleLimitSchedule {
  std::vector<double> deltas;   // outer limit, decreasing
  std::vector<double> indices;  // inner limit, in family order
  double stabilization_rtol = 1e-3;

  /// Geometric deltas 2^-l for l = 4..l_max.
  static DoubleLimitSchedule geometric(int l_max, std::vector<double> indices,
                                       double rtol = 1e-3);
};

struct LimitMeasureDiagnostics {
  bool converged = true;
  double residual = 0.0;  // last relative inner/outer increment
};

struct LimitMeasureResult {
  LimitMeasure mu;
  LimitMeasureDiagnostics diag;
};

/// Rotation-invariant construction for radial families: per-direction mass
/// lim_l lim_k int_0^{delta_l} rho_k(r) r^{N-1} dr.
LimitMeasureResult limit_measure_radial(const KernelFamily& family,
                                        const DoubleLimitSchedule& schedule,
                                        int angular_nodes = 16);

/// Direct double-limit surrogate on angular sectors (N = 2 only).
LimitMeasureResult limit_measure_numeric(const KernelFamily& family,
                                         const DoubleLimitSchedule& schedule,
                                         int angular_nodes);

}  // namespace bbmlab
