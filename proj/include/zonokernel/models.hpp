#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "dynamics.hpp"

namespace zk::models {

/// Rotation toy system: continuous xdot = [[0,-1],[1,0]] x sampled at 0.2 s,
/// X = [-1,1]^2, no inputs.  With `with_disturbance` a 0.05-identity
/// disturbance zonotope is attached through C = I.
inline DiscreteAffineSystem rotation_system(bool with_disturbance = false) {
  ContinuousAffineSystem c;
  c.A.resize(2, 2);
  c.A << 0, -1, 1, 0;
  c.B.resize(2, 0);
  c.C.resize(2, 0);
  c.w = Eigen::VectorXd::Zero(2);
  c.dt = 0.2;
  DiscreteAffineSystem sys = discretize(c);
  sys.X = IntervalBox(Eigen::Vector2d(-1, -1), Eigen::Vector2d(1, 1));
  sys.U = IntervalBox(Eigen::VectorXd(0), Eigen::VectorXd(0));
  if (with_disturbance) {
    sys.C = Eigen::MatrixXd::Identity(2, 2);
    sys.V = Zonotope(Eigen::Vector2d::Zero(), 0.05 * Eigen::MatrixXd::Identity(2, 2));
  } else {
    sys.V = Zonotope(Eigen::VectorXd(0), Eigen::MatrixXd(0, 0));
  }
  return sys;
}

/// Double integrator sampled at 0.1 s with X = [-1,1]^2, U = [-1,1].
inline DiscreteAffineSystem double_integrator_system() {
  ContinuousAffineSystem c;
  c.A.resize(2, 2);
  c.A << 0, 1, 0, 0;
  c.B.resize(2, 1);
  c.B << 0, 1;
  c.C.resize(2, 0);
  c.w = Eigen::VectorXd::Zero(2);
  c.dt = 0.1;
  DiscreteAffineSystem sys = discretize(c);
  sys.X = IntervalBox(Eigen::Vector2d(-1, -1), Eigen::Vector2d(1, 1));
  sys.U = IntervalBox(Eigen::VectorXd::Constant(1, -1.0), Eigen::VectorXd::Constant(1, 1.0));
  sys.V = Zonotope(Eigen::VectorXd(0), Eigen::MatrixXd(0, 0));
  return sys;
}

/// Longitudinal quadrotor parameters (thrust gain, roll PD gains, input
/// gain) with the hover linearization point.
struct QuadrotorParams {
  double K = 0.89 / 1.4;
  double d0 = 70.0;
  double d1 = 17.0;
  double n0 = 55.0;
  double g = 9.81;
  double x5_bar = 0.0;
  double u1_bar() const { return g / K; }
};

/// Linearization of the longitudinal quadrotor about (u1_bar, x5_bar).
/// States: horizontal/vertical position, horizontal/vertical velocity,
/// roll, roll velocity.  Inputs: total thrust, desired roll.  The
/// disturbance channels feed the two velocity rows, which carry all of
/// the model nonlinearity.
inline ContinuousAffineSystem quadrotor_linearized(const QuadrotorParams& p,
                                                   double dt = 0.05) {
  if (p.K <= 0 || p.n0 <= 0 || p.g <= 0)
    throw std::invalid_argument("quadrotor_linearized: invalid params");
  ContinuousAffineSystem c;
  c.A = Eigen::MatrixXd::Zero(6, 6);
  c.A(0, 2) = 1;
  c.A(1, 3) = 1;
  c.A(2, 4) = p.K * p.u1_bar() * std::cos(p.x5_bar);
  c.A(3, 4) = -p.K * p.u1_bar() * std::sin(p.x5_bar);
  c.A(4, 5) = 1;
  c.A(5, 4) = -p.d0;
  c.A(5, 5) = -p.d1;
  c.B = Eigen::MatrixXd::Zero(6, 2);
  c.B(2, 0) = p.K * std::sin(p.x5_bar);
  c.B(3, 0) = p.K * std::cos(p.x5_bar);
  c.B(5, 1) = p.n0;
  c.C = Eigen::MatrixXd::Zero(6, 2);
  c.C(2, 0) = 1;
  c.C(3, 1) = 1;
  // Affine remainder f(x_bar, u_bar) - A x_bar - B u_bar.
  Eigen::VectorXd x_bar = Eigen::VectorXd::Zero(6);
  x_bar[4] = p.x5_bar;
  Eigen::Vector2d u_bar(p.u1_bar(), 0.0);
  Eigen::VectorXd f0 = Eigen::VectorXd::Zero(6);
  f0[2] = p.u1_bar() * p.K * std::sin(p.x5_bar);
  f0[3] = p.u1_bar() * p.K * std::cos(p.x5_bar) - p.g;
  f0[4] = 0.0;
  f0[5] = -p.d0 * p.x5_bar;
  c.w = f0 - c.A * x_bar - c.B * u_bar;
  c.dt = dt;
  return c;
}

inline IntervalBox quadrotor_state_box() {
  constexpr double pi = std::numbers::pi;
  Eigen::VectorXd lo(6), hi(6);
  lo << -1.7, 0.3, -0.8, -1.0, -pi / 12, -pi / 2;
  hi << 1.7, 2.0, 0.8, 1.0, pi / 12, pi / 2;
  return IntervalBox(lo, hi);
}

inline IntervalBox quadrotor_input_box(const QuadrotorParams& p) {
  constexpr double pi = std::numbers::pi;
  Eigen::VectorXd lo(2), hi(2);
  lo << p.u1_bar() - 1.5, p.x5_bar - pi / 12;
  hi << p.u1_bar() + 1.5, p.x5_bar + pi / 12;
  return IntervalBox(lo, hi);
}

struct ErrorBounds {
  IntervalBox raw;       // per-dimension linearization error intervals
  Zonotope dilated_box;  // 10%-dilated rectangle as a 2-generator zonotope
};

/// Deterministic grid maximization of the linearization errors of the two
/// velocity equations over the given (roll, thrust) ranges.
inline ErrorBounds quadrotor_error_bounds(const QuadrotorParams& p,
                                          std::pair<double, double> x5_range,
                                          std::pair<double, double> u1_range,
                                          int grid_n = 400) {
  if (x5_range.second < x5_range.first || u1_range.second < u1_range.first)
    throw std::invalid_argument("quadrotor_error_bounds: empty range");
  if (grid_n < 200) throw std::invalid_argument("quadrotor_error_bounds: grid too coarse");
  double lo3 = 0, hi3 = 0, lo4 = 0, hi4 = 0;
  for (int i = 0; i <= grid_n; ++i) {
    double x5 = x5_range.first +
                (x5_range.second - x5_range.first) * i / static_cast<double>(grid_n);
    for (int j = 0; j <= grid_n; ++j) {
      double u1 = u1_range.first +
                  (u1_range.second - u1_range.first) * j / static_cast<double>(grid_n);
      double e3 = u1 * p.K * std::sin(x5) - p.g * x5;
      double e4 = u1 * p.K * std::cos(x5) - u1 * p.K;
      lo3 = std::min(lo3, e3);
      hi3 = std::max(hi3, e3);
      lo4 = std::min(lo4, e4);
      hi4 = std::max(hi4, e4);
    }
  }
  ErrorBounds out;
  out.raw = IntervalBox(Eigen::Vector2d(lo3, lo4), Eigen::Vector2d(hi3, hi4));
  Eigen::Vector2d center(0.5 * (lo3 + hi3), 0.5 * (lo4 + hi4));
  Eigen::Vector2d half(0.55 * (hi3 - lo3), 0.55 * (hi4 - lo4));
  out.dilated_box = Zonotope(center, half.asDiagonal().toDenseMatrix());
  return out;
}

/// Quadrotor discriminating-set model: hover linearization discretized at
/// dt, with the 10%-dilated linearization-error rectangle as disturbance.
inline DiscreteAffineSystem quadrotor_system(const QuadrotorParams& p = {},
                                             double dt = 0.05, int grid_n = 400) {
  constexpr double pi = std::numbers::pi;
  DiscreteAffineSystem sys = discretize(quadrotor_linearized(p, dt));
  sys.X = quadrotor_state_box();
  sys.U = quadrotor_input_box(p);
  sys.V = quadrotor_error_bounds(p, {-pi / 12, pi / 12},
                                 {p.u1_bar() - 1.5, p.u1_bar() + 1.5}, grid_n)
              .dilated_box;
  return sys;
}

// ---- Generator bases ----------------------------------------------------

inline Eigen::MatrixXd axes_basis(int d) {
  if (d < 1) throw std::invalid_argument("axes_basis: d must be positive");
  return Eigen::MatrixXd::Identity(d, d);
}

/// k unit vectors at angles m*pi/k for m = 0..k-1 (equally spaced around
/// the top half circle).
inline Eigen::MatrixXd half_circle_fan(int k) {
  if (k < 1) throw std::invalid_argument("half_circle_fan: k must be positive");
  constexpr double pi = std::numbers::pi;
  Eigen::MatrixXd g(2, k);
  for (int m = 0; m < k; ++m) {
    double a = pi * m / k;
    g(0, m) = std::cos(a);
    g(1, m) = std::sin(a);
  }
  return g;
}

/// k unit vectors strictly inside the north-west quadrant of the (i, j)
/// coordinate plane, embedded into dimension d.
inline Eigen::MatrixXd pair_fan(int d, int i, int j, int k) {
  if (i < 0 || j < 0 || i >= d || j >= d || i == j || k < 1)
    throw std::invalid_argument("pair_fan: invalid spec");
  constexpr double pi = std::numbers::pi;
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(d, k);
  for (int m = 0; m < k; ++m) {
    double a = pi / 2 + (m + 1) * (pi / 2) / (k + 1);
    g(i, m) = std::cos(a);
    g(j, m) = std::sin(a);
  }
  return g;
}

/// Diagonal and anti-diagonal unit vectors of the (i, j) plane in dimension d.
inline Eigen::MatrixXd diagonal_pair(int d, int i, int j) {
  if (i < 0 || j < 0 || i >= d || j >= d || i == j)
    throw std::invalid_argument("diagonal_pair: invalid spec");
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(d, 2);
  const double r = 1.0 / std::sqrt(2.0);
  g(i, 0) = r;
  g(j, 0) = r;
  g(i, 1) = r;
  g(j, 1) = -r;
  return g;
}

inline Eigen::MatrixXd random_unit_basis(int d, int n, unsigned seed) {
  if (d < 1 || n < 0) throw std::invalid_argument("random_unit_basis: invalid spec");
  std::mt19937_64 rng(seed);
  auto uniform = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53 * 2.0 - 1.0; };
  Eigen::MatrixXd g(d, n);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd v(d);
    double nrm = 0;
    do {
      for (int j = 0; j < d; ++j) v[j] = uniform();
      nrm = v.norm();
    } while (nrm < 1e-3);
    g.col(i) = v / nrm;
  }
  return g;
}

/// The 48-generator quadrotor recipe: coordinate axes, five-generator
/// north-west fans on the double-integrator-like pairs, and
/// diagonal/anti-diagonal pairs elsewhere.
inline Eigen::MatrixXd quadrotor_template() {
  const std::pair<int, int> fan_pairs[] = {{0, 2}, {1, 3}, {2, 4}, {4, 5}};
  Eigen::MatrixXd g(6, 48);
  int at = 0;
  g.middleCols(at, 6) = axes_basis(6);
  at += 6;
  for (auto [i, j] : fan_pairs) {
    g.middleCols(at, 5) = pair_fan(6, i, j, 5);
    at += 5;
  }
  for (int i = 0; i < 6; ++i)
    for (int j = i + 1; j < 6; ++j) {
      bool is_fan = false;
      for (auto [a, b] : fan_pairs)
        if (a == i && b == j) is_fan = true;
      if (is_fan) continue;
      g.middleCols(at, 2) = diagonal_pair(6, i, j);
      at += 2;
    }
  if (at != 48) throw std::logic_error("quadrotor_template: bad column count");
  return g;
}

}  // namespace zk::models
