#pragma once

#include <Eigen/Dense>

#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dynamics.hpp"
#include "lp.hpp"
#include "zonotope.hpp"

namespace zk {

enum class KernelMode {
  invariant,            // autonomous, no disturbance
  invariant_disturbed,  // autonomous with disturbance
  viable,               // controlled, feedback + free inputs
  viable_no_free,       // controlled, feedback only
  discriminating,       // controlled with disturbance
};

inline const char* to_string(KernelMode m) {
  switch (m) {
    case KernelMode::invariant: return "invariant";
    case KernelMode::invariant_disturbed: return "invariant_disturbed";
    case KernelMode::viable: return "viable";
    case KernelMode::viable_no_free: return "viable_no_free";
    case KernelMode::discriminating: return "discriminating";
  }
  return "?";
}

/// Kernel under-approximation problem: scale the template zonotope
/// <alpha | G_I diag(gamma)> so that every reach set over the horizon stays
/// in X and every input set stays in U.
struct KernelProblem {
  DiscreteAffineSystem system;
  Eigen::MatrixXd template_generators;            // d_x x n_I
  std::vector<Eigen::MatrixXd> free_generators;   // per step, d_u x n_F(t); may be empty
  int T = 1;
  double eta = 1.0;
  bool use_phi = true;  // enable the state-feedback columns Phi(t)
};

struct KernelResult {
  LPStatus status = LPStatus::infeasible;
  Eigen::VectorXd alpha;
  Eigen::VectorXd gamma;
  PolicyParams policy;
  double objective_value = 0.0;  // 1'gamma + eta sum 1'psi at the optimum
  KernelMode mode = KernelMode::invariant;
  KernelProblem problem;  // normalized copy of the input problem
};

struct CertReport {
  bool pass = false;
  double max_violation = 0.0;
  std::vector<double> per_time_violations;  // length T+1
};

namespace kernel_detail {

struct Layout {
  int dx = 0, nI = 0, du = 0, T = 0;
  bool has_input = false, has_phi = false, has_free = false, has_dist = false;
  // Frozen decision vector:
  // [alpha | gamma | beta(0..T-1) | vec Phi(0..T-1) | psi(0..T-1) |
  //  c(1..T) | H(1..T) | Theta(1..T) | P(0..T-1)]
  int alpha0 = 0, gamma0 = 0, beta0 = 0, phi0 = 0;
  std::vector<int> psi_off, nF;
  int num_primary = 0;
  int c0 = 0, h0 = 0, theta0 = 0, p0 = 0;
  int num_vars = 0;

  int beta_at(int t, int l) const { return beta0 + t * du + l; }
  int phi_at(int t, int l, int j) const { return phi0 + t * du * nI + j * du + l; }
  int psi_at(int t, int k) const { return psi_off[static_cast<size_t>(t)] + k; }
  int c_at(int t, int i) const { return c0 + (t - 1) * dx + i; }          // t >= 1
  int h_at(int t, int i, int j) const { return h0 + ((t - 1) * nI + j) * dx + i; }
  int theta_at(int t, int i, int j) const { return theta0 + ((t - 1) * nI + j) * dx + i; }
  int p_at(int t, int l, int j) const { return p0 + (t * nI + j) * du + l; }
};

struct Assembled {
  StandardLP lp;
  Layout layout;
};

inline void check_problem(const KernelProblem& p, KernelMode mode) {
  p.system.validate();
  const int dx = p.system.state_dim();
  if (p.T < 1) throw std::invalid_argument("kernel: horizon must be >= 1");
  if (p.eta <= 0) throw std::invalid_argument("kernel: eta must be positive");
  if (p.template_generators.rows() != dx || p.template_generators.cols() < 1)
    throw std::invalid_argument("kernel: template must have >= 1 generator of state dimension");
  for (int j = 0; j < p.template_generators.cols(); ++j)
    if (p.template_generators.col(j).norm() <= kGeomTol)
      throw std::invalid_argument("kernel: zero-norm template generator");
  if (p.system.X.dim() != dx)
    throw std::invalid_argument("kernel: state constraint box X is required");

  const bool has_input = mode == KernelMode::viable ||
                         mode == KernelMode::viable_no_free ||
                         mode == KernelMode::discriminating;
  const bool dist_allowed = mode == KernelMode::invariant_disturbed ||
                            mode == KernelMode::discriminating;
  if (!dist_allowed && p.system.V.count() > 0)
    throw std::invalid_argument("kernel: mode requires an empty disturbance set");
  if (mode == KernelMode::invariant_disturbed && p.system.V.count() == 0)
    throw std::invalid_argument("kernel: invariant_disturbed requires a disturbance set");
  if (has_input) {
    if (p.system.input_dim() < 1)
      throw std::invalid_argument("kernel: controlled mode requires inputs");
    if (p.system.U.dim() != p.system.input_dim())
      throw std::invalid_argument("kernel: input constraint box U is required");
  }
  const bool free_allowed =
      mode == KernelMode::viable || mode == KernelMode::discriminating;
  if (!free_allowed && !p.free_generators.empty())
    throw std::invalid_argument("kernel: mode does not admit free generators");
  if (!p.free_generators.empty()) {
    if (static_cast<int>(p.free_generators.size()) != p.T)
      throw std::invalid_argument("kernel: need one free-generator matrix per step");
    for (const auto& gf : p.free_generators) {
      if (gf.rows() != p.system.input_dim())
        throw std::invalid_argument("kernel: free generator row mismatch");
      for (int k = 0; k < gf.cols(); ++k)
        if (gf.col(k).norm() <= kGeomTol)
          throw std::invalid_argument("kernel: zero-norm free generator");
    }
  }
}

/// Columns are rescaled to unit norm; gamma absorbs the norms, keeping the
/// objective an unweighted sum of scaling factors.
inline KernelProblem normalized(const KernelProblem& p) {
  KernelProblem out = p;
  bool warned = false;
  for (int j = 0; j < out.template_generators.cols(); ++j) {
    double nrm = out.template_generators.col(j).norm();
    if (std::abs(nrm - 1.0) > 1e-9) {
      out.template_generators.col(j) /= nrm;
      if (!warned) {
        std::cerr << "kernel: normalizing template generators to unit norm\n";
        warned = true;
      }
    }
  }
  return out;
}

inline Assembled assemble(const KernelProblem& prob, KernelMode mode) {
  check_problem(prob, mode);
  const auto& sys = prob.system;
  Layout L;
  L.dx = sys.state_dim();
  L.nI = static_cast<int>(prob.template_generators.cols());
  L.T = prob.T;
  L.has_input = mode == KernelMode::viable || mode == KernelMode::viable_no_free ||
                mode == KernelMode::discriminating;
  L.du = L.has_input ? sys.input_dim() : 0;
  L.has_phi = L.has_input && prob.use_phi;
  L.has_free = L.has_input && !prob.free_generators.empty();
  L.has_dist = sys.V.count() > 0;

  StandardLP lp;
  L.alpha0 = lp.add_variables(L.dx);
  L.gamma0 = lp.add_variables(L.nI, 0.0, kInf, -1.0);
  L.beta0 = L.has_input ? lp.add_variables(L.T * L.du) : lp.num_vars;
  L.phi0 = L.has_phi ? lp.add_variables(L.T * L.du * L.nI) : lp.num_vars;
  L.psi_off.resize(static_cast<size_t>(L.T), lp.num_vars);
  L.nF.resize(static_cast<size_t>(L.T), 0);
  if (L.has_free)
    for (int t = 0; t < L.T; ++t) {
      int nf = static_cast<int>(prob.free_generators[static_cast<size_t>(t)].cols());
      L.nF[static_cast<size_t>(t)] = nf;
      L.psi_off[static_cast<size_t>(t)] = lp.add_variables(nf, 0.0, kInf, -prob.eta);
    }
  L.num_primary = lp.num_vars;
  L.c0 = L.has_phi ? lp.add_variables(L.T * L.dx) : lp.num_vars;
  L.h0 = L.has_phi ? lp.add_variables(L.T * L.dx * L.nI) : lp.num_vars;
  L.theta0 = L.has_phi ? lp.add_variables(L.T * L.dx * L.nI) : lp.num_vars;
  L.p0 = L.has_phi ? lp.add_variables(L.T * L.du * L.nI) : lp.num_vars;
  L.num_vars = lp.num_vars;

  auto apow = matrix_powers(sys.A, L.T);
  Eigen::MatrixXd absGI = prob.template_generators.cwiseAbs();
  Eigen::VectorXd drift = sys.w;
  if (L.has_dist) drift += sys.C * sys.V.center;
  // Accumulated center constant sum_{s<t} A^{t-1-s} (C c_V + w).
  std::vector<Eigen::VectorXd> wconst(static_cast<size_t>(L.T) + 1,
                                      Eigen::VectorXd::Zero(L.dx));
  for (int t = 1; t <= L.T; ++t)
    wconst[static_cast<size_t>(t)] = sys.A * wconst[static_cast<size_t>(t - 1)] + drift;
  // Accumulated disturbance half-width sum_{s<t} |A^{t-1-s} C G_V| 1.
  std::vector<Eigen::VectorXd> dconst(static_cast<size_t>(L.T) + 1,
                                      Eigen::VectorXd::Zero(L.dx));
  if (L.has_dist) {
    Eigen::MatrixXd cgv = sys.C * sys.V.generators;
    for (int t = 1; t <= L.T; ++t) {
      Eigen::VectorXd acc = Eigen::VectorXd::Zero(L.dx);
      for (int s = 0; s < t; ++s)
        acc += (apow[static_cast<size_t>(t - 1 - s)] * cgv).cwiseAbs().rowwise().sum();
      dconst[static_cast<size_t>(t)] = acc;
    }
  }
  std::vector<Eigen::MatrixXd> bgf;  // B G_F(t)
  if (L.has_free)
    for (int t = 0; t < L.T; ++t)
      bgf.push_back(sys.B * prob.free_generators[static_cast<size_t>(t)]);

  // State containment at t = 0..T, upper/lower row pair per coordinate.
  for (int t = 0; t <= L.T; ++t) {
    const auto& at = apow[static_cast<size_t>(t)];
    Eigen::MatrixXd abs_at_gi;
    if (!L.has_phi || t == 0) abs_at_gi = (at * prob.template_generators).cwiseAbs();
    for (int i = 0; i < L.dx; ++i)
      for (int sign : {+1, -1}) {
        double rhs = (sign > 0 ? sys.X.upper[i] : -sys.X.lower[i]) -
                     dconst[static_cast<size_t>(t)][i];
        if (!(L.has_phi && t >= 1)) rhs -= sign * wconst[static_cast<size_t>(t)][i];
        int r = lp.add_inequality(rhs);
        // Center.
        if (L.has_phi && t >= 1) {
          lp.ineq_term(r, L.c_at(t, i), sign);
        } else {
          for (int k = 0; k < L.dx; ++k)
            if (at(i, k) != 0.0) lp.ineq_term(r, L.alpha0 + k, sign * at(i, k));
          if (L.has_input)
            for (int s = 0; s < t; ++s) {
              Eigen::RowVectorXd ab =
                  apow[static_cast<size_t>(t - 1 - s)].row(i) * sys.B;
              for (int l = 0; l < L.du; ++l)
                if (ab[l] != 0.0) lp.ineq_term(r, L.beta_at(s, l), sign * ab[l]);
            }
        }
        // Template half-width.
        if (L.has_phi && t >= 1) {
          for (int j = 0; j < L.nI; ++j) lp.ineq_term(r, L.theta_at(t, i, j), 1.0);
        } else {
          for (int j = 0; j < L.nI; ++j)
            if (abs_at_gi(i, j) != 0.0)
              lp.ineq_term(r, L.gamma0 + j, abs_at_gi(i, j));
        }
        // Free-input half-width.
        if (L.has_free)
          for (int s = 0; s < t; ++s) {
            Eigen::RowVectorXd row =
                (apow[static_cast<size_t>(t - 1 - s)].row(i) *
                 bgf[static_cast<size_t>(s)]).cwiseAbs();
            for (int k = 0; k < L.nF[static_cast<size_t>(s)]; ++k)
              if (row[k] != 0.0) lp.ineq_term(r, L.psi_at(s, k), row[k]);
          }
      }
  }

  // Input containment at t = 0..T-1.
  if (L.has_input) {
    for (int t = 0; t < L.T; ++t)
      for (int i = 0; i < L.du; ++i)
        for (int sign : {+1, -1}) {
          int r = lp.add_inequality(sign > 0 ? sys.U.upper[i] : -sys.U.lower[i]);
          lp.ineq_term(r, L.beta_at(t, i), sign);
          if (L.has_phi)
            for (int j = 0; j < L.nI; ++j) lp.ineq_term(r, L.p_at(t, i, j), 1.0);
          if (L.has_free) {
            const auto& gf = prob.free_generators[static_cast<size_t>(t)];
            for (int k = 0; k < L.nF[static_cast<size_t>(t)]; ++k)
              if (gf(i, k) != 0.0)
                lp.ineq_term(r, L.psi_at(t, k), std::abs(gf(i, k)));
          }
        }
  }

  if (L.has_phi) {
    // Center recursion c(t) = A c(t-1) + B beta(t-1) + (C c_V + w).
    for (int t = 1; t <= L.T; ++t)
      for (int i = 0; i < L.dx; ++i) {
        int r = lp.add_equality(drift[i]);
        lp.eq_term(r, L.c_at(t, i), 1.0);
        for (int k = 0; k < L.dx; ++k)
          if (sys.A(i, k) != 0.0) {
            if (t == 1)
              lp.eq_term(r, L.alpha0 + k, -sys.A(i, k));
            else
              lp.eq_term(r, L.c_at(t - 1, k), -sys.A(i, k));
          }
        for (int l = 0; l < L.du; ++l)
          if (sys.B(i, l) != 0.0) lp.eq_term(r, L.beta_at(t - 1, l), -sys.B(i, l));
      }
    // Generator recursion H(t) = A H(t-1) + B Phi(t-1), H(0) = G_I Gamma.
    Eigen::MatrixXd agi = sys.A * prob.template_generators;
    for (int t = 1; t <= L.T; ++t)
      for (int j = 0; j < L.nI; ++j)
        for (int i = 0; i < L.dx; ++i) {
          int r = lp.add_equality(0.0);
          lp.eq_term(r, L.h_at(t, i, j), 1.0);
          if (t == 1) {
            if (agi(i, j) != 0.0) lp.eq_term(r, L.gamma0 + j, -agi(i, j));
          } else {
            for (int k = 0; k < L.dx; ++k)
              if (sys.A(i, k) != 0.0) lp.eq_term(r, L.h_at(t - 1, k, j), -sys.A(i, k));
          }
          for (int l = 0; l < L.du; ++l)
            if (sys.B(i, l) != 0.0)
              lp.eq_term(r, L.phi_at(t - 1, l, j), -sys.B(i, l));
        }
    // Epigraph rows Theta(t) >= +-H(t), P(t) >= +-Phi(t).
    for (int t = 1; t <= L.T; ++t)
      for (int j = 0; j < L.nI; ++j)
        for (int i = 0; i < L.dx; ++i)
          for (int sign : {+1, -1}) {
            int r = lp.add_inequality(0.0);
            lp.ineq_term(r, L.h_at(t, i, j), sign);
            lp.ineq_term(r, L.theta_at(t, i, j), -1.0);
          }
    for (int t = 0; t < L.T; ++t)
      for (int j = 0; j < L.nI; ++j)
        for (int l = 0; l < L.du; ++l)
          for (int sign : {+1, -1}) {
            int r = lp.add_inequality(0.0);
            lp.ineq_term(r, L.phi_at(t, l, j), sign);
            lp.ineq_term(r, L.p_at(t, l, j), -1.0);
          }
  }

  return Assembled{std::move(lp), std::move(L)};
}

}  // namespace kernel_detail

inline StandardLP assemble_program(const KernelProblem& problem, KernelMode mode) {
  return kernel_detail::assemble(kernel_detail::normalized(problem), mode).lp;
}

inline KernelResult solve_kernel(const KernelProblem& problem, KernelMode mode) {
  KernelProblem prob = kernel_detail::normalized(problem);
  auto asm_prog = kernel_detail::assemble(prob, mode);
  const auto& L = asm_prog.layout;

  // Viability needs the input signal to be coupled to the state.  With both
  // the feedback columns Phi and the free-input generators suppressed the
  // policy is open loop, and no viable set is reported.
  if (L.has_input && !L.has_phi && !L.has_free) {
    KernelResult res;
    res.status = LPStatus::infeasible;
    res.mode = mode;
    res.problem = std::move(prob);
    return res;
  }

  auto sol = solve_lp(asm_prog.lp);

  if (sol.status == LPStatus::unbounded)
    throw std::runtime_error("solve_kernel: program unexpectedly unbounded");

  KernelResult res;
  res.status = sol.status;
  res.mode = mode;
  res.problem = std::move(prob);
  if (sol.status != LPStatus::optimal) return res;

  res.alpha = sol.z.segment(L.alpha0, L.dx);
  res.gamma = sol.z.segment(L.gamma0, L.nI).cwiseMax(0.0);
  if (L.has_input)
    for (int t = 0; t < L.T; ++t)
      res.policy.beta.push_back(sol.z.segment(L.beta_at(t, 0), L.du));
  if (L.has_phi)
    for (int t = 0; t < L.T; ++t) {
      Eigen::MatrixXd phi(L.du, L.nI);
      for (int j = 0; j < L.nI; ++j)
        phi.col(j) = sol.z.segment(L.phi_at(t, 0, j), L.du);
      res.policy.Phi.push_back(std::move(phi));
    }
  if (L.has_free) {
    res.policy.free_generators = res.problem.free_generators;
    for (int t = 0; t < L.T; ++t)
      res.policy.psi.push_back(
          sol.z.segment(L.psi_at(t, 0), L.nF[static_cast<size_t>(t)]).cwiseMax(0.0));
  }
  res.objective_value = res.gamma.sum();
  for (const auto& psi : res.policy.psi) res.objective_value += res.problem.eta * psi.sum();
  return res;
}

/// Re-evaluates every containment condition from scratch (matrix powers and
/// interval hulls only, independent of the LP residuals).
inline CertReport certify(const KernelProblem& problem, const KernelResult& result) {
  if (result.status != LPStatus::optimal)
    throw std::invalid_argument("certify: result is not optimal");
  KernelProblem prob = kernel_detail::normalized(problem);
  auto reach = reach_sequence(prob.system, prob.template_generators, result.alpha,
                              result.gamma, result.policy, prob.T);
  CertReport rep;
  rep.per_time_violations.assign(static_cast<size_t>(prob.T) + 1, 0.0);
  for (int t = 0; t <= prob.T; ++t) {
    auto hull = interval_hull(reach[static_cast<size_t>(t)]);
    double v = std::max((prob.system.X.lower - hull.lower).maxCoeff(),
                        (hull.upper - prob.system.X.upper).maxCoeff());
    rep.per_time_violations[static_cast<size_t>(t)] = std::max(0.0, v);
  }
  if (!result.policy.beta.empty()) {
    const bool has_phi = !result.policy.Phi.empty();
    const bool has_free = !result.policy.psi.empty();
    for (int t = 0; t < prob.T; ++t) {
      const auto& beta = result.policy.beta[static_cast<size_t>(t)];
      Eigen::VectorXd hw = Eigen::VectorXd::Zero(beta.size());
      if (has_phi)
        hw += result.policy.Phi[static_cast<size_t>(t)].cwiseAbs().rowwise().sum();
      if (has_free)
        hw += (result.policy.free_generators[static_cast<size_t>(t)] *
               result.policy.psi[static_cast<size_t>(t)].asDiagonal())
                  .cwiseAbs()
                  .rowwise()
                  .sum();
      double v = std::max((prob.system.U.lower - (beta - hw)).maxCoeff(),
                          ((beta + hw) - prob.system.U.upper).maxCoeff());
      auto& slot = rep.per_time_violations[static_cast<size_t>(t)];
      slot = std::max(slot, v);
    }
  }
  rep.max_violation = 0.0;
  for (double v : rep.per_time_violations) rep.max_violation = std::max(rep.max_violation, v);
  rep.pass = rep.max_violation <= kCertTol;
  return rep;
}

/// Drops template generators with gamma below the threshold (and the matching
/// Phi columns), then re-certifies.  If certification of the pruned set fails
/// the original result is returned unchanged.
inline KernelResult prune(const KernelResult& result, double threshold) {
  if (result.status != LPStatus::optimal)
    throw std::invalid_argument("prune: result is not optimal");
  if (threshold < 0) throw std::invalid_argument("prune: negative threshold");
  std::vector<int> keep;
  for (int j = 0; j < result.gamma.size(); ++j)
    if (result.gamma[j] >= threshold) keep.push_back(j);
  if (keep.empty()) throw std::invalid_argument("prune: threshold removes every generator");
  if (static_cast<int>(keep.size()) == result.gamma.size()) return result;

  KernelResult pruned = result;
  const int dx = result.problem.system.state_dim();
  Eigen::MatrixXd gi(dx, static_cast<Eigen::Index>(keep.size()));
  Eigen::VectorXd gamma(static_cast<Eigen::Index>(keep.size()));
  for (size_t k = 0; k < keep.size(); ++k) {
    gi.col(static_cast<Eigen::Index>(k)) =
        result.problem.template_generators.col(keep[k]);
    gamma[static_cast<Eigen::Index>(k)] = result.gamma[keep[k]];
  }
  pruned.problem.template_generators = std::move(gi);
  pruned.gamma = std::move(gamma);
  for (auto& phi : pruned.policy.Phi) {
    Eigen::MatrixXd cut(phi.rows(), static_cast<Eigen::Index>(keep.size()));
    for (size_t k = 0; k < keep.size(); ++k)
      cut.col(static_cast<Eigen::Index>(k)) = phi.col(keep[k]);
    phi = std::move(cut);
  }
  pruned.objective_value = pruned.gamma.sum();
  for (const auto& psi : pruned.policy.psi)
    pruned.objective_value += pruned.problem.eta * psi.sum();

  auto rep = certify(pruned.problem, pruned);
  if (!rep.pass) {
    std::cerr << "prune: pruned set failed certification (violation "
              << rep.max_violation << "), keeping the original\n";
    return result;
  }
  return pruned;
}

}  // namespace zk
