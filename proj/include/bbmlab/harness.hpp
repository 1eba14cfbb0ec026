#pragma once

#include <string>
#include <vector>

#include "bbmlab/config.hpp"
#include "bbmlab/report.hpp"
#include "bbmlab/spectral.hpp"

namespace bbmlab {

/// Dispatches on cfg["experiment"], fills metadata, and persists to
/// cfg["out_csv"] / cfg["out_json"] when present.
SweepReport run_experiment(const json& cfg);

SweepReport run_bbm_sweep(const json& cfg);
SweepReport run_nonlocal_bbm(const json& cfg);
SweepReport run_inequality_suite(const json& cfg);
SweepReport run_eigen_sweep(const json& cfg);
SweepReport run_poincare(const json& cfg);
SweepReport run_mu(const json& cfg);
SweepReport run_energy_eval(const json& cfg);
SweepReport run_limit_energy_eval(const json& cfg);
SweepReport run_eigen_single(const json& cfg);

/// BBMLAB_WORKERS caps sweep-row parallelism (default: hardware threads).
int harness_worker_count();

/// Deterministic bank of Omega-supported test functions (eigenmode, sine
/// modes, hats, bumps, mollified noise), L^p-normalized.
std::vector<GridFunction> make_test_bank(const DomainMask& omega, int count,
                                         unsigned long long seed, double p = 2.0);

}  // namespace bbmlab
