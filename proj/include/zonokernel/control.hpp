#pragma once

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "kernel.hpp"

namespace zk {

struct Trajectory {
  Eigen::MatrixXd states;        // (T+1) x d_x
  Eigen::MatrixXd inputs;        // T x d_u
  Eigen::MatrixXd disturbances;  // T x d_v
  std::vector<bool> in_X;        // per time step, length T+1
  std::vector<bool> in_U;        // per input step, length T
};

enum class DisturbanceSource {
  none,         // disturbance fixed at the center of V
  random_in_v,  // uniform generator coefficients in [-1, 1]
  corner_of_v,  // random extreme coefficients in {-1, +1}
};

struct ValidationReport {
  bool pass = false;
  std::vector<bool> state_ok, input_ok;
  double worst_state_margin = 0.0;
  double worst_input_margin = 0.0;
};

/// The viable input set at time t: <beta(t) | [Phi(t), G_F(t) Psi(t)]>.
inline Zonotope input_zonotope(const KernelResult& result, int t) {
  if (result.status != LPStatus::optimal)
    throw std::invalid_argument("input_zonotope: result is not optimal");
  if (result.policy.beta.empty())
    throw std::invalid_argument("input_zonotope: result has no input policy");
  if (t < 0 || t >= result.problem.T)
    throw std::invalid_argument("input_zonotope: time index out of range");
  const auto& beta = result.policy.beta[static_cast<size_t>(t)];
  const int du = static_cast<int>(beta.size());
  int cols = 0;
  if (!result.policy.Phi.empty())
    cols += static_cast<int>(result.policy.Phi[static_cast<size_t>(t)].cols());
  if (!result.policy.psi.empty())
    cols += static_cast<int>(result.policy.psi[static_cast<size_t>(t)].size());
  Eigen::MatrixXd g(du, cols);
  int at = 0;
  if (!result.policy.Phi.empty()) {
    const auto& phi = result.policy.Phi[static_cast<size_t>(t)];
    g.middleCols(at, phi.cols()) = phi;
    at += static_cast<int>(phi.cols());
  }
  if (!result.policy.psi.empty()) {
    const auto& psi = result.policy.psi[static_cast<size_t>(t)];
    g.middleCols(at, psi.size()) =
        result.policy.free_generators[static_cast<size_t>(t)] * psi.asDiagonal();
  }
  return Zonotope(beta, std::move(g));
}

/// Chooses u = beta(t) + Phi~(t) lambda + G_F(t) Psi(t) rho with (lambda, rho)
/// jointly minimizing ||u - u_des||_inf subject to reconstructing x from
/// reach_t.  Phi~ zero-pads the free and disturbance generator columns.
/// Returns nullopt when x is not a member of reach_t.
inline std::optional<Eigen::VectorXd> select_input(const KernelResult& result,
                                                   const Zonotope& reach_t,
                                                   const Eigen::VectorXd& x, int t,
                                                   const Eigen::VectorXd& u_des) {
  if (result.status != LPStatus::optimal)
    throw std::invalid_argument("select_input: result is not optimal");
  if (t < 0 || t >= result.problem.T)
    throw std::invalid_argument("select_input: time index out of range");
  if (result.policy.beta.empty())
    throw std::invalid_argument("select_input: result has no input policy");
  const auto& beta = result.policy.beta[static_cast<size_t>(t)];
  const int du = static_cast<int>(beta.size());
  if (u_des.size() != du || x.size() != reach_t.dim())
    throw std::invalid_argument("select_input: dimension mismatch");
  if (!interval_hull(reach_t).contains(x, kFeasTol)) return std::nullopt;

  const bool has_phi = !result.policy.Phi.empty();
  const bool has_free = !result.policy.psi.empty();
  const int n = reach_t.count();
  const int nI = static_cast<int>(result.problem.template_generators.cols());
  const int nf = has_free
                     ? static_cast<int>(result.policy.psi[static_cast<size_t>(t)].size())
                     : 0;

  StandardLP lp;
  int l0 = lp.add_variables(n, -1.0 - kFeasTol, 1.0 + kFeasTol);
  int r0 = nf > 0 ? lp.add_variables(nf, -1.0, 1.0) : lp.num_vars;
  int m = lp.add_variable(0.0, kInf, 1.0);
  // Reconstruction c + G lambda = x.
  Eigen::VectorXd rhs = x - reach_t.center;
  for (int i = 0; i < reach_t.dim(); ++i) {
    int r = lp.add_equality(rhs[i]);
    for (int j = 0; j < n; ++j) lp.eq_term(r, l0 + j, reach_t.generators(i, j));
  }
  // +-(u_i - u_des_i) <= m.
  Eigen::MatrixXd gf_psi;
  if (nf > 0)
    gf_psi = result.policy.free_generators[static_cast<size_t>(t)] *
             result.policy.psi[static_cast<size_t>(t)].asDiagonal();
  for (int i = 0; i < du; ++i)
    for (int sign : {+1, -1}) {
      int r = lp.add_inequality(sign * (u_des[i] - beta[i]));
      if (has_phi) {
        const auto& phi = result.policy.Phi[static_cast<size_t>(t)];
        for (int j = 0; j < nI && j < n; ++j)
          lp.ineq_term(r, l0 + j, sign * phi(i, j));
      }
      for (int k = 0; k < nf; ++k) lp.ineq_term(r, r0 + k, sign * gf_psi(i, k));
      lp.ineq_term(r, m, -1.0);
    }
  auto sol = solve_lp(lp);
  if (sol.status != LPStatus::optimal) return std::nullopt;

  Eigen::VectorXd u = beta;
  if (has_phi) {
    const auto& phi = result.policy.Phi[static_cast<size_t>(t)];
    u += phi * sol.z.segment(l0, nI).cwiseMin(1.0).cwiseMax(-1.0);
  }
  if (nf > 0) u += gf_psi * sol.z.segment(r0, nf).cwiseMin(1.0).cwiseMax(-1.0);
  // The input set is certified inside U; clamp residual solver slack away.
  const auto& U = result.problem.system.U;
  if (U.dim() == du) u = u.cwiseMax(U.lower).cwiseMin(U.upper);
  return u;
}

/// Closed-loop rollout from x0 (which must belong to the computed set),
/// tracking u_des as closely as the viable input sets allow.
inline Trajectory simulate(const DiscreteAffineSystem& sys, const KernelResult& result,
                           const Eigen::VectorXd& x0,
                           const std::function<Eigen::VectorXd(int)>& u_des_signal,
                           DisturbanceSource disturbance_source, int T,
                           unsigned seed = 0) {
  if (result.status != LPStatus::optimal)
    throw std::invalid_argument("simulate: result is not optimal");
  if (T < 0 || T > result.problem.T)
    throw std::invalid_argument("simulate: horizon out of range");
  Zonotope initial = scale(result.problem.template_generators, result.gamma, result.alpha);
  if (!lambda_of(x0, initial))
    throw std::invalid_argument("simulate: x0 is outside the computed set");

  const int dx = sys.state_dim();
  const int du = sys.input_dim();
  const int dv = sys.disturbance_dim();
  const bool has_input = !result.policy.beta.empty();
  auto reach = reach_sequence(sys, result.problem.template_generators, result.alpha,
                              result.gamma, result.policy, result.problem.T);

  std::mt19937_64 rng(seed);
  auto uniform = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53 * 2.0 - 1.0; };

  Trajectory traj;
  traj.states.resize(T + 1, dx);
  traj.inputs.resize(T, du);
  traj.disturbances.resize(T, dv);
  traj.in_X.resize(static_cast<size_t>(T) + 1);
  traj.in_U.resize(static_cast<size_t>(T));

  Eigen::VectorXd x = x0;
  for (int t = 0; t <= T; ++t) {
    traj.states.row(t) = x.transpose();
    traj.in_X[static_cast<size_t>(t)] =
        sys.X.dim() == dx ? sys.X.contains(x, kFeasTol) : true;
    if (t == T) break;

    Eigen::VectorXd u(du);
    if (has_input) {
      auto picked = select_input(result, reach[static_cast<size_t>(t)], x, t,
                                 u_des_signal(t));
      if (!picked) throw std::runtime_error("simulate: state left the certified tube");
      u = *picked;
    } else {
      u.setZero();  // autonomous result: B was ignored during synthesis
    }
    Eigen::VectorXd v(dv);
    if (dv > 0) {
      Eigen::VectorXd coeff(sys.V.count());
      for (int k = 0; k < coeff.size(); ++k) {
        double c = disturbance_source == DisturbanceSource::none ? 0.0 : uniform();
        if (disturbance_source == DisturbanceSource::corner_of_v) c = c >= 0 ? 1.0 : -1.0;
        coeff[k] = c;
      }
      v = sys.V.center + sys.V.generators * coeff;
    }
    traj.inputs.row(t) = u.transpose();
    traj.disturbances.row(t) = v.transpose();
    traj.in_U[static_cast<size_t>(t)] =
        sys.U.dim() == du ? sys.U.contains(u, kFeasTol) : true;
    x = step(sys, x, u, v);
  }
  return traj;
}

inline ValidationReport validate(const Trajectory& traj, const IntervalBox& X,
                                 const IntervalBox& U) {
  ValidationReport rep;
  rep.worst_state_margin = kInf;
  rep.worst_input_margin = kInf;
  const int T1 = static_cast<int>(traj.states.rows());
  for (int t = 0; t < T1; ++t) {
    Eigen::VectorXd x = traj.states.row(t).transpose();
    double margin = kInf;
    if (X.dim() == x.size())
      margin = std::min((x - X.lower).minCoeff(), (X.upper - x).minCoeff());
    rep.state_ok.push_back(margin >= -1e-7);
    rep.worst_state_margin = std::min(rep.worst_state_margin, margin);
  }
  const int T = static_cast<int>(traj.inputs.rows());
  for (int t = 0; t < T; ++t) {
    Eigen::VectorXd u = traj.inputs.row(t).transpose();
    double margin = kInf;
    if (U.dim() == u.size() && u.size() > 0)
      margin = std::min((u - U.lower).minCoeff(), (U.upper - u).minCoeff());
    rep.input_ok.push_back(margin >= -1e-7);
    rep.worst_input_margin = std::min(rep.worst_input_margin, margin);
  }
  rep.pass = true;
  for (bool ok : rep.state_ok) rep.pass = rep.pass && ok;
  for (bool ok : rep.input_ok) rep.pass = rep.pass && ok;
  return rep;
}

}  // namespace zk
