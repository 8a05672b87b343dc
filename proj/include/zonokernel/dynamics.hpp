#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <stdexcept>
#include <vector>

#include "zonotope.hpp"

namespace zk {

/// x(t+1) = A x(t) + B u(t) + C v(t) + w with box constraints X on the state,
/// U on the input and a zonotopic disturbance set V.  B and C may have zero
/// columns for systems without the corresponding input.
struct DiscreteAffineSystem {
  Eigen::MatrixXd A;  // d_x x d_x
  Eigen::MatrixXd B;  // d_x x d_u
  Eigen::MatrixXd C;  // d_x x d_v
  Eigen::VectorXd w;  // drift
  IntervalBox X;      // state constraint
  IntervalBox U;      // input constraint (dimension d_u)
  Zonotope V;         // disturbance constraint (dimension d_v)

  int state_dim() const { return static_cast<int>(A.rows()); }
  int input_dim() const { return static_cast<int>(B.cols()); }
  int disturbance_dim() const { return static_cast<int>(C.cols()); }

  void validate() const {
    const int dx = state_dim();
    if (A.cols() != dx || w.size() != dx)
      throw std::invalid_argument("DiscreteAffineSystem: A/w shape mismatch");
    if (B.size() > 0 && B.rows() != dx)
      throw std::invalid_argument("DiscreteAffineSystem: B shape mismatch");
    if (C.size() > 0 && C.rows() != dx)
      throw std::invalid_argument("DiscreteAffineSystem: C shape mismatch");
    if (!A.allFinite() || !w.allFinite() ||
        (B.size() > 0 && !B.allFinite()) || (C.size() > 0 && !C.allFinite()))
      throw std::invalid_argument("DiscreteAffineSystem: non-finite entry");
    if (X.dim() != 0 && X.dim() != dx)
      throw std::invalid_argument("DiscreteAffineSystem: X dimension mismatch");
    if (U.dim() != 0 && U.dim() != input_dim())
      throw std::invalid_argument("DiscreteAffineSystem: U dimension mismatch");
    if (V.dim() != 0 && V.dim() != disturbance_dim())
      throw std::invalid_argument("DiscreteAffineSystem: V dimension mismatch");
  }
};

/// xdot = A_c x + B_c u + C_c v + w_c sampled with period dt.
struct ContinuousAffineSystem {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  Eigen::MatrixXd C;
  Eigen::VectorXd w;
  double dt = 0.0;
};

/// Per-step policy data: input-set centers beta(t), state-feedback columns
/// Phi(t), free-input scalings psi(t) over generators G_F(t).  Empty
/// sequences mean the corresponding mechanism is absent.
struct PolicyParams {
  std::vector<Eigen::VectorXd> beta;
  std::vector<Eigen::MatrixXd> Phi;
  std::vector<Eigen::VectorXd> psi;
  std::vector<Eigen::MatrixXd> free_generators;
};

/// Exact zero-order-hold discretization via the augmented block matrix
/// exp([[A, M], [0, 0]] dt): the top-left block is exp(A dt) and the
/// top-right is the integral of exp(A s) ds applied to M = [B C w].
inline DiscreteAffineSystem discretize(const ContinuousAffineSystem& csys) {
  if (csys.dt <= 0) throw std::invalid_argument("discretize: dt must be positive");
  const int dx = static_cast<int>(csys.A.rows());
  const int du = static_cast<int>(csys.B.cols());
  const int dv = static_cast<int>(csys.C.cols());
  if (csys.A.cols() != dx || csys.w.size() != dx ||
      (du > 0 && csys.B.rows() != dx) || (dv > 0 && csys.C.rows() != dx))
    throw std::invalid_argument("discretize: shape mismatch");
  if (!csys.A.allFinite() || !csys.w.allFinite() ||
      (du > 0 && !csys.B.allFinite()) || (dv > 0 && !csys.C.allFinite()))
    throw std::invalid_argument("discretize: non-finite entry");

  const int k = du + dv + 1;
  Eigen::MatrixXd blk = Eigen::MatrixXd::Zero(dx + k, dx + k);
  blk.topLeftCorner(dx, dx) = csys.A;
  int col = dx;
  if (du > 0) blk.block(0, col, dx, du) = csys.B;
  col += du;
  if (dv > 0) blk.block(0, col, dx, dv) = csys.C;
  col += dv;
  blk.block(0, col, dx, 1) = csys.w;
  Eigen::MatrixXd e = (blk * csys.dt).exp();

  DiscreteAffineSystem sys;
  sys.A = e.topLeftCorner(dx, dx);
  sys.B = e.block(0, dx, dx, du);
  sys.C = e.block(0, dx + du, dx, dv);
  sys.w = e.block(0, dx + du + dv, dx, 1);
  return sys;
}

inline Eigen::VectorXd step(const DiscreteAffineSystem& sys, const Eigen::VectorXd& x,
                            const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  if (x.size() != sys.state_dim() || u.size() != sys.input_dim() ||
      v.size() != sys.disturbance_dim())
    throw std::invalid_argument("step: dimension mismatch");
  Eigen::VectorXd next = sys.A * x + sys.w;
  if (u.size() > 0) next += sys.B * u;
  if (v.size() > 0) next += sys.C * v;
  return next;
}

inline std::vector<Eigen::MatrixXd> matrix_powers(const Eigen::MatrixXd& a, int T) {
  std::vector<Eigen::MatrixXd> pow;
  pow.reserve(static_cast<size_t>(T) + 1);
  pow.push_back(Eigen::MatrixXd::Identity(a.rows(), a.cols()));
  for (int t = 1; t <= T; ++t) pow.push_back(pow.back() * a);
  return pow;
}

/// Reach sets R_0..R_T of the scaled template zonotope under the policy.
/// Generator blocks keep the frozen order: scaled-template block (with the
/// accumulated Phi feedback), then free-input blocks F_0..F_{t-1}, then
/// disturbance blocks with the newest last.
inline std::vector<Zonotope> reach_sequence(const DiscreteAffineSystem& sys,
                                            const Eigen::MatrixXd& template_generators,
                                            const Eigen::VectorXd& alpha,
                                            const Eigen::VectorXd& gamma,
                                            const PolicyParams& policy, int T) {
  sys.validate();
  const int dx = sys.state_dim();
  const int n_template = static_cast<int>(template_generators.cols());
  if (template_generators.rows() != dx || alpha.size() != dx ||
      gamma.size() != n_template)
    throw std::invalid_argument("reach_sequence: dimension mismatch");
  if ((gamma.array() < 0).any())
    throw std::invalid_argument("reach_sequence: negative gamma");
  const bool has_beta = !policy.beta.empty();
  const bool has_phi = !policy.Phi.empty();
  const bool has_free = !policy.psi.empty();
  const bool has_dist = sys.disturbance_dim() > 0;
  if ((has_beta && static_cast<int>(policy.beta.size()) < T) ||
      (has_phi && static_cast<int>(policy.Phi.size()) < T) ||
      (has_free && (static_cast<int>(policy.psi.size()) < T ||
                    policy.free_generators.size() < policy.psi.size())))
    throw std::invalid_argument("reach_sequence: policy shorter than horizon");

  auto apow = matrix_powers(sys.A, T);
  Eigen::MatrixXd scaled = template_generators * gamma.asDiagonal();

  std::vector<Zonotope> out;
  out.reserve(static_cast<size_t>(T) + 1);
  for (int t = 0; t <= T; ++t) {
    Eigen::VectorXd center = apow[static_cast<size_t>(t)] * alpha;
    for (int s = 0; s < t; ++s) {
      const auto& ap = apow[static_cast<size_t>(t - 1 - s)];
      center += ap * sys.w;
      if (has_beta) center += ap * (sys.B * policy.beta[static_cast<size_t>(s)]);
      if (has_dist) center += ap * (sys.C * sys.V.center);
    }
    int n_free = 0, n_dist = has_dist ? t * sys.V.count() : 0;
    if (has_free)
      for (int s = 0; s < t; ++s)
        n_free += static_cast<int>(policy.free_generators[static_cast<size_t>(s)].cols());
    Eigen::MatrixXd G(dx, n_template + n_free + n_dist);
    Eigen::MatrixXd head = apow[static_cast<size_t>(t)] * scaled;
    if (has_phi)
      for (int s = 0; s < t; ++s)
        head += apow[static_cast<size_t>(t - 1 - s)] *
                (sys.B * policy.Phi[static_cast<size_t>(s)]);
    G.leftCols(n_template) = head;
    int at = n_template;
    if (has_free)
      for (int s = 0; s < t; ++s) {
        const auto& gf = policy.free_generators[static_cast<size_t>(s)];
        int nf = static_cast<int>(gf.cols());
        G.middleCols(at, nf) =
            apow[static_cast<size_t>(t - 1 - s)] *
            (sys.B * (gf * policy.psi[static_cast<size_t>(s)].asDiagonal()));
        at += nf;
      }
    if (has_dist)
      for (int s = 0; s < t; ++s) {
        G.middleCols(at, sys.V.count()) =
            apow[static_cast<size_t>(t - 1 - s)] * (sys.C * sys.V.generators);
        at += sys.V.count();
      }
    out.emplace_back(std::move(center), std::move(G));
  }
  return out;
}

}  // namespace zk
