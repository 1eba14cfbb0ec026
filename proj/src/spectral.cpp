#include "bbmlab/spectral.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace bbmlab {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct DofMap {
  std::vector<int> node_to_dof;  // -1 outside the mask
  std::vector<int> dof_to_node;
  int count = 0;

  explicit DofMap(const DomainMask& m) {
    node_to_dof.assign(static_cast<size_t>(m.grid.node_count()), -1);
    for (int i = 0; i < m.grid.node_count(); ++i)
      if (m.contains(i)) {
        node_to_dof[static_cast<size_t>(i)] = count++;
        dof_to_node.push_back(i);
      }
  }
};

Vec node_pos(const Grid& g, int i0, int i1) {
  return Vec{g.lo[0] + (i0 + 0.5) * g.h, g.dim == 2 ? g.lo[1] + (i1 + 0.5) * g.h : 0.0};
}

double weight_at(const WeightFamily& wf, std::optional<double> index, const Vec& x,
                 const Vec& y) {
  return index ? wf.eval_k(*index, x, y) : wf.eval_limit(x, y);
}

// Symmetric accumulation of c * (u_a - u_b)^2 where either node may lie
// outside the mask (value zero there).
void add_pair(MatrixXd& A, int da, int db, double c) {
  if (da >= 0) A(da, da) += c;
  if (db >= 0) A(db, db) += c;
  if (da >= 0 && db >= 0) {
    A(da, db) -= c;
    A(db, da) -= c;
  }
}

MatrixXd assemble_nonlocal_form(const Kernel& rho, const WeightFamily& wf,
                                std::optional<double> index, const DomainMask& omega,
                                const EnergyOptions& opts) {
  const Grid& g = omega.grid;
  const DofMap dof(omega);
  MatrixXd A = MatrixXd::Zero(dof.count, dof.count);
  const int reach = static_cast<int>(std::floor(opts.truncation / g.h + 1e-9));
  const double h2N = g.cell_measure() * g.cell_measure();

  auto in_mask = [&](int i0, int i1) {
    if (i0 < 0 || i0 >= g.n[0] || i1 < 0 || i1 >= g.n[1]) return -1;
    return dof.node_to_dof[static_cast<size_t>(g.index(i0, i1))];
  };

  if (g.dim == 1) {
    int m0 = g.n[0], m1 = -1;
    for (int i = 0; i < g.n[0]; ++i)
      if (omega.contains(i)) {
        m0 = std::min(m0, i);
        m1 = std::max(m1, i);
      }
    for (int ad = 1; ad <= reach; ++ad)
      for (int sign = 0; sign < 2; ++sign) {
        const int d = sign == 0 ? ad : -ad;
        const Vec z{d * g.h, 0.0};
        const double K =
            detail::offset_kernel_value(rho, z, 2.0, false, opts.overflow_guard) * h2N;
        if (K == 0.0) continue;
        // i with i in M or i+d in M
        const int lo = std::min(m0, m0 - d), hi = std::max(m1, m1 - d);
        for (int i = lo; i <= hi; ++i) {
          const int a = in_mask(i, 0);
          const int b = in_mask(i + d, 0);
          if (a < 0 && b < 0) continue;
          const double w = weight_at(wf, index, node_pos(g, i, 0), node_pos(g, i + d, 0));
          add_pair(A, a, b, K * w);
        }
      }
  } else {
    for (int d0 = -reach; d0 <= reach; ++d0)
      for (int d1 = -reach; d1 <= reach; ++d1) {
        if (d0 == 0 && d1 == 0) continue;
        const Vec z{d0 * g.h, d1 * g.h};
        if (norm(z, 2) > opts.truncation * (1.0 + 1e-12)) continue;
        const double K =
            detail::offset_kernel_value(rho, z, 2.0, false, opts.overflow_guard) * h2N;
        if (K == 0.0) continue;
        for (int i0 = -std::abs(d0); i0 < g.n[0] + std::abs(d0); ++i0)
          for (int i1 = -std::abs(d1); i1 < g.n[1] + std::abs(d1); ++i1) {
            const int a = in_mask(i0, i1);
            const int b = in_mask(i0 + d0, i1 + d1);
            if (a < 0 && b < 0) continue;
            const double w =
                weight_at(wf, index, node_pos(g, i0, i1), node_pos(g, i0 + d0, i1 + d1));
            add_pair(A, a, b, K * w);
          }
      }
  }

  // Near-cell Taylor correction as a quadratic form in the centered
  // gradient (one-sided at the box boundary, mirroring discrete_gradient).
  const auto nc = detail::near_cell_factor(rho, g.dim, g.h, 2.0, false);
  if (nc) {
    const double C = *nc * g.cell_measure();
    for (int i0 = 0; i0 < g.n[0]; ++i0)
      for (int i1 = 0; i1 < g.n[1]; ++i1) {
        const Vec x = node_pos(g, i0, i1);
        const double wd = weight_at(wf, index, x, x);
        if (wd == 0.0) continue;
        for (int axis = 0; axis < g.dim; ++axis) {
          const int i = axis == 0 ? i0 : i1;
          const int n = g.n[axis];
          int pa0 = i0, pa1 = i1, pb0 = i0, pb1 = i1;
          double coef;
          if (i == 0) {
            (axis == 0 ? pa0 : pa1) += 1;
            coef = 1.0 / g.h;
          } else if (i == n - 1) {
            (axis == 0 ? pb0 : pb1) -= 1;
            coef = 1.0 / g.h;
          } else {
            (axis == 0 ? pa0 : pa1) += 1;
            (axis == 0 ? pb0 : pb1) -= 1;
            coef = 1.0 / (2.0 * g.h);
          }
          const int da = in_mask(pa0, pa1);
          const int db = in_mask(pb0, pb1);
          if (da < 0 && db < 0) continue;
          add_pair(A, da, db, C * wd * coef * coef);
        }
      }
  }
  return A;
}

// sigma directions and masses of the limit measure.
std::vector<std::pair<Vec, double>> measure_nodes(const LimitMeasure& mu) {
  std::vector<std::pair<Vec, double>> out;
  if (mu.dim == 1) {
    out.push_back({Vec{1.0, 0.0}, mu.atom_plus});
    out.push_back({Vec{-1.0, 0.0}, mu.atom_minus});
  } else {
    for (size_t i = 0; i < mu.angles.size(); ++i)
      out.push_back({Vec{std::cos(mu.angles[i]), std::sin(mu.angles[i])},
                     mu.masses[i]});
  }
  return out;
}

double clamped_w0(const DiagonalWeight& w0, int i0, int i1) {
  const Grid& g = w0.grid;
  const int c0 = std::clamp(i0, 0, g.n[0] - 1);
  const int c1 = std::clamp(i1, 0, g.n[1] - 1);
  return w0[g.index(c0, c1)];
}

MatrixXd assemble_local_form(const LimitMeasure& mu, const DiagonalWeight& w0,
                             const DomainMask& omega) {
  const Grid& g = omega.grid;
  const DofMap dof(omega);
  MatrixXd A = MatrixXd::Zero(dof.count, dof.count);
  const double hN = g.cell_measure();
  auto in_mask = [&](int i0, int i1) {
    if (i0 < 0 || i0 >= g.n[0] || i1 < 0 || i1 >= g.n[1]) return -1;
    return dof.node_to_dof[static_cast<size_t>(g.index(i0, i1))];
  };
  for (const auto& [sigma, mass] : measure_nodes(mu)) {
    if (mass == 0.0) continue;
    for (int i0 = -1; i0 < g.n[0]; ++i0)
      for (int i1 = (g.dim == 2 ? -1 : 0); i1 < (g.dim == 2 ? g.n[1] : 1); ++i1) {
        // linear form sigma . D+ u at this (ghost-extended) node
        const double w = clamped_w0(w0, i0, i1);
        if (w == 0.0) continue;
        const double c = mass * hN * w;
        const int self = in_mask(i0, i1);
        const int e0 = in_mask(i0 + 1, i1);
        const int e1 = g.dim == 2 ? in_mask(i0, i1 + 1) : -1;
        // coefficients over (self, e0, e1)
        const double c_self = -(sigma[0] + (g.dim == 2 ? sigma[1] : 0.0)) / g.h;
        const double c_e0 = sigma[0] / g.h;
        const double c_e1 = g.dim == 2 ? sigma[1] / g.h : 0.0;
        const int ids[3] = {self, e0, e1};
        const double cs[3] = {c_self, c_e0, c_e1};
        for (int a = 0; a < 3; ++a)
          for (int b = 0; b < 3; ++b)
            if (ids[a] >= 0 && ids[b] >= 0 && cs[a] != 0.0 && cs[b] != 0.0)
              A(ids[a], ids[b]) += c * cs[a] * cs[b];
      }
  }
  return A;
}

struct IterationOutcome {
  double lambda_matrix = 0.0;  // v^T A v with ||v||_2 = 1
  VectorXd v;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

IterationOutcome smallest_pair_inverse_iteration(const MatrixXd& A, int max_iter,
                                                 double tol) {
  IterationOutcome out;
  const int n = static_cast<int>(A.rows());
  const double scale = A.cwiseAbs().maxCoeff();
  out.v = VectorXd::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
  if (scale == 0.0) {  // zero form
    out.converged = true;
    return out;
  }
  const double shift = 1e-12 * scale;
  Eigen::LDLT<MatrixXd> ldlt(A + shift * MatrixXd::Identity(n, n));
  double lambda_prev = out.v.dot(A * out.v);
  for (int it = 1; it <= max_iter; ++it) {
    VectorXd w = ldlt.solve(out.v);
    const double wn = w.norm();
    if (!(wn > 0.0) || !std::isfinite(wn)) break;
    w /= wn;
    const double lambda = w.dot(A * w);
    out.v = w;
    out.iterations = it;
    out.residual = std::abs(lambda - lambda_prev);
    out.lambda_matrix = lambda;
    if (out.residual <= tol * std::max(std::abs(lambda), 1e-300)) {
      out.converged = true;
      break;
    }
    lambda_prev = lambda;
  }
  return out;
}

GridFunction vector_to_function(const VectorXd& v, const DofMap& dof, const Grid& g) {
  GridFunction u(g);
  for (int d = 0; d < dof.count; ++d) u[dof.dof_to_node[static_cast<size_t>(d)]] = v(d);
  return u;
}

void canonicalize(GridFunction& u, double p) {
  const double nrm = lp_norm(u, p);
  if (nrm > 0.0)
    for (double& v : u.values) v /= nrm;
  if (integral(u) < 0.0)
    for (double& v : u.values) v = -v;
}

// Local forward-difference energy with optional gradient.
double local_energy_grad(const GridFunction& u, const LimitMeasure& mu,
                         const DiagonalWeight& w0, double p, std::vector<double>* grad) {
  const Grid& g = u.grid;
  const double hN = g.cell_measure();
  double total = 0.0;
  if (grad) grad->assign(static_cast<size_t>(g.node_count()), 0.0);
  auto addg = [&](int i0, int i1, double v) {
    if (grad && i0 >= 0 && i0 < g.n[0] && i1 >= 0 && i1 < g.n[1])
      (*grad)[static_cast<size_t>(g.index(i0, i1))] += v;
  };
  for (const auto& [sigma, mass] : measure_nodes(mu)) {
    if (mass == 0.0) continue;
    for (int i0 = -1; i0 < g.n[0]; ++i0)
      for (int i1 = (g.dim == 2 ? -1 : 0); i1 < (g.dim == 2 ? g.n[1] : 1); ++i1) {
        const double w = clamped_w0(w0, i0, i1);
        if (w == 0.0) continue;
        const double ui = u.at_or_zero(i0, i1);
        double L = sigma[0] * (u.at_or_zero(i0 + 1, i1) - ui) / g.h;
        if (g.dim == 2) L += sigma[1] * (u.at_or_zero(i0, i1 + 1) - ui) / g.h;
        if (L == 0.0) continue;
        const double ap = std::pow(std::abs(L), p);
        total += mass * w * ap;
        if (grad) {
          const double dl = mass * hN * w * p * std::pow(std::abs(L), p - 1.0) *
                            (L > 0.0 ? 1.0 : -1.0);
          addg(i0 + 1, i1, dl * sigma[0] / g.h);
          addg(i0, i1, -dl * (sigma[0] + (g.dim == 2 ? sigma[1] : 0.0)) / g.h);
          if (g.dim == 2) addg(i0, i1 + 1, dl * sigma[1] / g.h);
        }
      }
  }
  return total * hN;
}

// Normalized descent on the Rayleigh quotient E(u)/||u||_p^p with Armijo
// backtracking; u stays supported in the mask and L^p-normalized.
EigenResult descent_minimize(
    const std::function<double(const GridFunction&, std::vector<double>&)>& energy_grad,
    const DomainMask& omega, double p, GridFunction u, const EigenOptions& opts) {
  const Grid& g = u.grid;
  const double hN = g.cell_measure();
  for (int i = 0; i < g.node_count(); ++i)
    if (!omega.contains(i)) u[i] = 0.0;
  canonicalize(u, p);

  std::vector<double> ge, gn(static_cast<size_t>(g.node_count()), 0.0);
  double E = energy_grad(u, ge);
  double R = E;  // ||u||_p = 1
  double step = 0.1;
  EigenResult res;
  res.residual = std::numeric_limits<double>::infinity();

  for (int it = 1; it <= opts.max_iter; ++it) {
    // gradient of the quotient at the normalized point
    for (int i = 0; i < g.node_count(); ++i) {
      const double ui = u[i];
      const double dnorm =
          p * std::pow(std::abs(ui), p - 1.0) * (ui > 0.0 ? 1.0 : (ui < 0.0 ? -1.0 : 0.0)) *
          hN;
      gn[static_cast<size_t>(i)] =
          omega.contains(i) ? ge[static_cast<size_t>(i)] - R * dnorm : 0.0;
    }
    double gnorm2 = 0.0;
    for (double v : gn) gnorm2 += v * v;
    if (gnorm2 == 0.0) {
      res.converged = true;
      res.residual = 0.0;
      res.iterations = it - 1;
      break;
    }

    bool accepted = false;
    double t = step;
    for (int ls = 0; ls < 45 && !accepted; ++ls, t *= 0.5) {
      GridFunction cand = u;
      for (int i = 0; i < g.node_count(); ++i)
        if (omega.contains(i)) cand[i] -= t * gn[static_cast<size_t>(i)];
      const double nrm = lp_norm(cand, p);
      if (!(nrm > 0.0)) continue;
      for (double& v : cand.values) v /= nrm;
      std::vector<double> gec;
      const double Ec = energy_grad(cand, gec);
      if (Ec <= R - 1e-4 * t * gnorm2) {
        res.residual = R - Ec;
        u = std::move(cand);
        ge = std::move(gec);
        R = Ec;
        step = std::min(1e3, t * 2.0);
        accepted = true;
      }
    }
    res.iterations = it;
    if (!accepted || res.residual <= opts.tol * std::max(std::abs(R), 1e-300)) {
      res.converged = accepted || res.residual <= opts.tol * std::max(std::abs(R), 1e-300);
      if (!accepted && res.residual > opts.tol * std::max(std::abs(R), 1e-300))
        res.converged = res.residual < 1e-8 * std::max(std::abs(R), 1e-300);
      break;
    }
  }
  canonicalize(u, p);
  res.lambda = R;
  res.eigenfunction = std::move(u);
  return res;
}

}  // namespace

double nonlocal_form_energy(const GridFunction& u, const Kernel& rho,
                            const WeightFamily& wf, std::optional<double> index, double p,
                            const EnergyOptions& eopts) {
  return nonlocal_energy(u, rho, wf, index, p, eopts).total;
}

double local_form_energy(const GridFunction& u, const LimitMeasure& mu,
                         const DiagonalWeight& w0, double p) {
  return local_energy_grad(u, mu, w0, p, nullptr);
}

EigenResult first_eigen_nonlocal(const Kernel& rho, const WeightFamily& wf,
                                 std::optional<double> index, double p,
                                 const DomainMask& omega, const EnergyOptions& eopts,
                                 const EigenOptions& opts) {
  omega.check_nonempty();
  const Grid& g = omega.grid;

  if (p == 2.0 && opts.solver == EigenOptions::Solver::Matrix) {
    const DofMap dof(omega);
    const MatrixXd A = assemble_nonlocal_form(rho, wf, index, omega, eopts);
    EigenResult res;
    if (A.cwiseAbs().maxCoeff() == 0.0) {
      res.degenerate = true;
      res.converged = true;
      GridFunction u(g);
      u[dof.dof_to_node[0]] = 1.0;
      canonicalize(u, p);
      res.eigenfunction = std::move(u);
      return res;
    }
    const IterationOutcome it = smallest_pair_inverse_iteration(A, opts.max_iter, opts.tol);
    GridFunction u = vector_to_function(it.v, dof, g);
    canonicalize(u, p);
    res.eigenfunction = u;
    res.lambda = it.lambda_matrix / g.cell_measure();
    res.residual = it.residual / g.cell_measure();
    res.iterations = it.iterations;
    res.converged = it.converged;
    return res;
  }

  // Descent path; restart from the p = 2 matrix eigenfunction.
  GridFunction init(g);
  {
    EigenOptions mopts = opts;
    mopts.solver = EigenOptions::Solver::Matrix;
    const EigenResult p2 = first_eigen_nonlocal(rho, wf, index, 2.0, omega, eopts, mopts);
    init = p2.eigenfunction;
    if (p2.degenerate) {
      EigenResult res = p2;
      res.lambda = 0.0;
      return res;
    }
  }
  auto eg = [&](const GridFunction& u, std::vector<double>& grad) {
    return detail::nonlocal_energy_with_gradient(u, rho, wf, index, p, nullptr, eopts,
                                                 grad);
  };
  EigenResult res = descent_minimize(eg, omega, p, init, opts);
  res.upper_bound_only = (p != 2.0);
  return res;
}

EigenResult first_eigen_local(const LimitMeasure& mu, const DiagonalWeight& w0, double p,
                              const DomainMask& omega, const EigenOptions& opts) {
  omega.check_nonempty();
  mu.check_valid();
  if (!w0.grid.same_layout(omega.grid))
    throw InvalidInputError("first_eigen_local: w0 and omega grids differ");
  const Grid& g = omega.grid;
  const DofMap dof(omega);

  if (mu.is_zero()) {
    EigenResult res;
    res.degenerate = true;
    res.converged = true;
    res.lambda = 0.0;
    GridFunction u(g);
    u[dof.dof_to_node[0]] = 1.0;
    canonicalize(u, p);
    res.eigenfunction = std::move(u);
    return res;
  }

  if (p == 2.0 && opts.solver == EigenOptions::Solver::Matrix) {
    const MatrixXd A = assemble_local_form(mu, w0, omega);
    EigenResult res;
    if (A.cwiseAbs().maxCoeff() == 0.0) {
      res.degenerate = true;
      res.converged = true;
      GridFunction u(g);
      u[dof.dof_to_node[0]] = 1.0;
      canonicalize(u, p);
      res.eigenfunction = std::move(u);
      return res;
    }
    const IterationOutcome it = smallest_pair_inverse_iteration(A, opts.max_iter, opts.tol);
    GridFunction u = vector_to_function(it.v, dof, g);
    canonicalize(u, p);
    res.eigenfunction = u;
    res.lambda = it.lambda_matrix / g.cell_measure();
    res.residual = it.residual / g.cell_measure();
    res.iterations = it.iterations;
    res.converged = it.converged;
    return res;
  }

  GridFunction init(g);
  {
    EigenOptions mopts = opts;
    mopts.solver = EigenOptions::Solver::Matrix;
    const EigenResult p2 = first_eigen_local(mu, w0, 2.0, omega, mopts);
    init = p2.eigenfunction;
  }
  auto eg = [&](const GridFunction& u, std::vector<double>& grad) {
    return local_energy_grad(u, mu, w0, p, &grad);
  };
  EigenResult res = descent_minimize(eg, omega, p, init, opts);
  res.upper_bound_only = (p != 2.0);
  return res;
}

PoincareEstimate poincare_estimate(const LimitMeasure& mu, const WeightFamily& wf, double p,
                                   const DomainMask& omega,
                                   const std::vector<GridFunction>& test_bank,
                                   const EigenOptions& opts) {
  const DiagonalWeight w0 = diagonal_trace(wf, omega.grid);
  const EigenResult eig = first_eigen_local(mu, w0, p, omega, opts);
  PoincareEstimate out;
  out.lambda = eig.lambda;
  if (eig.degenerate || !(eig.lambda > 0.0)) {
    out.no_poincare = true;
    return out;
  }
  out.constant = 1.0 / eig.lambda;
  out.via_lambda = out.constant;
  for (const GridFunction& b : test_bank) {
    GridFunction u = b;
    for (int i = 0; i < u.grid.node_count(); ++i)
      if (!omega.contains(i)) u[i] = 0.0;
    const double num = std::pow(lp_norm(u, p), p);
    if (num == 0.0) continue;
    const double den = local_form_energy(u, mu, w0, p);
    if (den > 0.0) out.sample_max_ratio = std::max(out.sample_max_ratio, num / den);
  }
  return out;
}

PoincareStabilityReport poincare_stability_check(
    const KernelFamily& family, const WeightFamily& wf, double p, const DomainMask& omega,
    double eps, double A, const std::vector<double>& indices,
    const std::vector<GridFunction>& test_bank, const EnergyOptions& eopts) {
  PoincareStabilityReport rep;
  rep.constant = A;
  rep.eps = eps;
  for (double index : indices) {
    const Kernel rho = family.member(index);
    PoincareStabilityRow row;
    row.index = index;
    row.worst_margin = std::numeric_limits<double>::infinity();
    for (const GridFunction& b : test_bank) {
      GridFunction u = b;
      for (int i = 0; i < u.grid.node_count(); ++i)
        if (!omega.contains(i)) u[i] = 0.0;
      const double lhs = std::pow(lp_norm(u, p), p);
      if (lhs == 0.0) continue;
      const double rhs = (A + eps) * nonlocal_form_energy(u, rho, wf, index, p, eopts);
      const double margin = rhs - lhs;
      row.worst_margin = std::min(row.worst_margin, margin);
      if (margin < -1e-12 * std::max(lhs, rhs)) {
        row.failures += 1;
        row.all_pass = false;
      }
    }
    rep.rows.push_back(row);
  }
  for (size_t i = 0; i < rep.rows.size(); ++i) {
    bool tail_ok = true;
    for (size_t j = i; j < rep.rows.size(); ++j) tail_ok = tail_ok && rep.rows[j].all_pass;
    if (tail_ok) {
      rep.empirical_k_eps = rep.rows[i].index;
      break;
    }
  }
  return rep;
}

SpectralSweepReport spectral_stability_sweep(const KernelFamily& family,
                                             const WeightFamily& wf, double p,
                                             const DomainMask& omega,
                                             const std::vector<double>& indices,
                                             const LimitMeasure& mu,
                                             const EnergyOptions& eopts,
                                             const EigenOptions& opts) {
  SpectralSweepReport rep;
  const DiagonalWeight w0 = diagonal_trace(wf, omega.grid);
  const EigenResult limit = first_eigen_local(mu, w0, p, omega, opts);
  rep.lambda_limit = limit.lambda;
  rep.limit_eigenfunction = limit.eigenfunction;
  for (double index : indices) {
    const Kernel rho = family.member(index);
    const EigenResult e = first_eigen_nonlocal(rho, wf, index, p, omega, eopts, opts);
    SpectralSweepRow row;
    row.index = index;
    row.lambda = e.lambda;
    row.gap_to_limit = std::abs(e.lambda - rep.lambda_limit);
    GridFunction diff_m = e.eigenfunction, diff_p = e.eigenfunction;
    for (int i = 0; i < diff_m.grid.node_count(); ++i) {
      diff_m[i] -= rep.limit_eigenfunction[i];
      diff_p[i] += rep.limit_eigenfunction[i];
    }
    row.ef_distance = std::min(lp_norm(diff_m, p), lp_norm(diff_p, p));
    row.converged = e.converged;
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace bbmlab
