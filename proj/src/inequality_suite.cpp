#include <chrono>
#include <cmath>

#include "bbmlab/harness.hpp"

namespace bbmlab {

namespace {

struct NamedWeight {
  std::string name;
  WeightFamily wf;
};

std::vector<NamedWeight> weights_from_config(const json& cfg, int dim) {
  std::vector<NamedWeight> out;
  if (!cfg.contains("weights")) {
    out.push_back({"one", unit_weight(dim)});
    return out;
  }
  int i = 0;
  for (const json& spec : cfg.at("weights")) {
    NamedWeight nw;
    nw.wf = weight_from_spec(spec, dim);
    nw.name = spec.is_string() ? spec.get<std::string>()
                               : spec.value("name", nw.wf.label + std::to_string(i));
    out.push_back(std::move(nw));
    ++i;
  }
  return out;
}

}  // namespace

SweepReport run_inequality_suite(const json& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  SweepReport rep;
  rep.kind = "inequality-suite";

  const Grid g = grid_from_spec(cfg.at("grid"));
  const double p = cfg.value("p", 2.0);
  const EnergyOptions opts = energy_options_from_config(cfg);
  const KernelFamily family = kernel_from_spec(cfg.at("kernel"));
  const auto kernel_indices = cfg.at("kernel_indices").get<std::vector<double>>();
  const std::vector<NamedWeight> weights = weights_from_config(cfg, g.dim);

  std::vector<ClosedForm> bank;
  for (const json& spec : cfg.value("bank", json::array({"hat", "bump", "stepmoll(4)"})))
    bank.push_back(function_from_spec(spec, g.dim));
  std::vector<ClosedForm> ftc_bank;
  for (const json& spec :
       cfg.value("ftc_bank", json::array({"gaussian", "bump", "sinpacket(6,1)"})))
    ftc_bank.push_back(function_from_spec(spec, g.dim));

  double row_seq = 0.0;
  auto add_row = [&](const std::string& op, double computed,
                     std::optional<double> target, std::optional<bool> passed,
                     json params) {
    SweepRow row;
    row.index = row_seq;
    row_seq += 1.0;
    row.op = op;
    row.computed = computed;
    row.target = target;
    row.gap = target ? std::abs(computed - *target) : 0.0;
    row.passed = passed;
    row.params = std::move(params);
    rep.rows.push_back(std::move(row));
  };

  // Modulus of continuity on random quadruples.
  const int quadruples = cfg.value("modulus_quadruples", 10000);
  const unsigned long long seed = cfg.value("seed", 0ull);
  for (const auto& nw : weights) {
    if (!nw.wf.modulus) continue;
    const auto violation = check_modulus(nw.wf, 4.0, quadruples, seed);
    json params = {{"weight", nw.name}, {"quadruples", quadruples}};
    if (violation) {
      params["witness_lhs"] = violation->lhs;
      params["witness_rhs"] = violation->rhs;
    }
    add_row("modulus", violation ? violation->lhs - violation->rhs : 0.0, 0.0,
            !violation.has_value(), params);
  }

  // Weight-perturbation bound |F^{w_k} - F^w| <= F^1 ||w_k - w||, exact at
  // quadrature level.
  for (const auto& u_cf : bank)
    for (const auto& nw : weights)
      for (double idx : kernel_indices) {
        const GridFunction u = sample_closed_form(u_cf, g);
        const Kernel rho = family.member(idx);
        const WeightPerturbationGap r = weight_perturbation_gap(u, rho, nw.wf, idx, p, opts);
        add_row("w_diff", r.gap, r.bound,
                r.gap <= r.bound * (1.0 + 1e-10) + 1e-300,
                {{"u", u_cf.name}, {"weight", nw.name}, {"index", idx}, {"f1", r.f1},
                 {"sup_dist", r.sup_dist}});
      }

  // FTC estimates (i) and (ii) with additive slack 2h on the C^2 bank.
  const auto zs = cfg.value("ftc_z", std::vector<double>{0.05, 0.1, 0.2});
  for (const auto& u_cf : ftc_bank) {
    if (!u_cf.c2) continue;
    for (const auto& nw : weights) {
      if (!nw.wf.modulus) continue;
      for (double z1 : zs) {
        const Vec z{z1, 0.0};
        const FtcSides s = ftc_check(u_cf, g, z, nw.wf, p);
        const double slack = 2.0 * g.h;
        add_row("ftc_i", s.lhs_i, s.rhs_i, s.lhs_i <= s.rhs_i + slack,
                {{"u", u_cf.name}, {"weight", nw.name}, {"z", z1}, {"slack", slack}});
        add_row("ftc_ii", s.lhs_ii, s.rhs_ii, s.lhs_ii <= s.rhs_ii + slack,
                {{"u", u_cf.name}, {"weight", nw.name}, {"z", z1}, {"slack", slack}});
      }
    }
  }

  // ell_R lower-bound lemma, asserted for symmetric weights.
  for (const auto& u_cf : bank)
    for (const auto& nw : weights)
      for (double idx : kernel_indices) {
        const GridFunction u = sample_closed_form(u_cf, g);
        const double R = u_cf.support_radius;
        const Kernel rho = family.member(idx);
        const EllRBoundCheck r = ell_R_bound_check(u, rho, nw.wf, idx, p, R, opts);
        json params = {{"u", u_cf.name},     {"weight", nw.name},
                       {"index", idx},       {"R", R},
                       {"ell", r.ell},       {"w_dist", r.w_dist},
                       {"tail", r.tail_term}, {"analytic_tail", r.analytic_tail},
                       {"precondition_ok", r.precondition_ok}};
        if (!r.precondition_ok) {
          params["note"] = r.precondition_note;
          add_row("ell_R", 0.0, std::nullopt, std::nullopt, params);
        } else {
          std::optional<bool> passed;
          if (nw.wf.symmetric) passed = r.lhs <= r.rhs * (1.0 + 1e-10) + 1e-300;
          add_row("ell_R", r.lhs, r.rhs, passed, params);
        }
      }

  // Mollified-weight gap against |B_1| ||eta||_inf omega(2/j).
  const auto js = cfg.value("wmoll_j", std::vector<int>{4, 16, 64});
  const PairNet net = make_pair_net(2.0, 2.0, 0.25, g.dim);
  for (const auto& nw : weights) {
    if (!nw.wf.modulus) continue;
    for (int j : js) {
      const MollifiedWeightGap r = mollified_weight_gap(nw.wf, j, net);
      const double slack = 1e-12;  // quadrature rounding on exact-zero gaps
      add_row("w_moll", r.sampled_gap, r.bound, r.sampled_gap <= r.bound + slack,
              {{"weight", nw.name}, {"j", j}, {"slack", slack}});
    }
  }

  // Compactness probe: box-mollifier defect against eps * J.
  if (cfg.contains("brez")) {
    const json& bz = cfg.at("brez");
    const double delta = bz.value("delta", 0.125);
    const auto idxs = bz.at("indices").get<std::vector<double>>();
    const double Ebox = bz.value("E_radius", 1.5);
    const DomainMask A = DomainMask::full(g);
    const DomainMask E = DomainMask::from_predicate(
        g, [&](const Vec& x) { return norm(x, g.dim) <= Ebox; });
    JSpec spec = JSpec::from_separable(family, weights.front().wf, p, A,
                                       family.member(idxs.back()));
    std::vector<GridFunction> seq;
    std::vector<double> shifts;
    for (double k : idxs) {
      const ClosedForm moved = shifted(function_from_spec(bz.value("u", json("hat")), g.dim),
                                       Vec{1.0 / k, 0.0});
      seq.push_back(sample_closed_form(moved, g));
      shifts.push_back(1.0 / k);
    }
    const MollificationDefectReport r =
        mollification_defect(seq, idxs, delta, E, spec, p, opts);
    for (size_t i = 0; i < r.rows.size(); ++i) {
      const auto& row = r.rows[i];
      add_row("brez_defect", row.defect, row.budget, row.defect <= row.budget,
              {{"index", row.index},
               {"epsilon", row.epsilon_used},
               {"j_energy", row.j_value},
               {"shift", shifts[i]}});
    }
    rep.extra["brez_energy_unbounded"] = r.energy_unbounded;
  }

  rep.config = cfg;
  rep.config_hash = fnv1a_hex(cfg.dump());
#ifdef BBMLAB_GIT_DESCRIBE
  rep.git_describe = BBMLAB_GIT_DESCRIBE;
#endif
  rep.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

}  // namespace bbmlab
