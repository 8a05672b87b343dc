#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <zonokernel/dynamics.hpp>

#include <cmath>
#include <random>

using namespace zk;

namespace {

double uniform(std::mt19937_64& g, double lo, double hi) {
  double u = static_cast<double>(g() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

ContinuousAffineSystem double_integrator_cont() {
  ContinuousAffineSystem c;
  c.A.resize(2, 2);
  c.A << 0, 1, 0, 0;
  c.B.resize(2, 1);
  c.B << 0, 1;
  c.C.resize(2, 0);
  c.w = Eigen::VectorXd::Zero(2);
  c.dt = 0.1;
  return c;
}

ContinuousAffineSystem rotation_cont(double dt) {
  ContinuousAffineSystem c;
  c.A.resize(2, 2);
  c.A << 0, -1, 1, 0;
  c.B.resize(2, 0);
  c.C.resize(2, 0);
  c.w = Eigen::VectorXd::Zero(2);
  c.dt = dt;
  return c;
}

}  // namespace

TEST_CASE("discretize: zero dynamics gives identity and dt-scaled input") {
  ContinuousAffineSystem c;
  c.A = Eigen::MatrixXd::Zero(3, 3);
  c.B.resize(3, 2);
  c.B << 1, 0, 0, 2, 3, -1;
  c.C.resize(3, 0);
  c.w.resize(3);
  c.w << 0.5, 0, -0.25;
  c.dt = 0.4;
  auto sys = discretize(c);
  CHECK((sys.A - Eigen::MatrixXd::Identity(3, 3)).lpNorm<Eigen::Infinity>() <= 1e-12);
  CHECK((sys.B - 0.4 * c.B).lpNorm<Eigen::Infinity>() <= 1e-12);
  CHECK((sys.w - 0.4 * c.w).lpNorm<Eigen::Infinity>() <= 1e-12);
}

TEST_CASE("discretize: double integrator at 0.1 s") {
  auto sys = discretize(double_integrator_cont());
  CHECK(sys.A(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(sys.A(0, 1) == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(sys.A(1, 0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(sys.A(1, 1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(sys.B(0, 0) == doctest::Approx(0.005).epsilon(1e-12));
  CHECK(sys.B(1, 0) == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("discretize: rotation at 0.2 s is the planar rotation matrix") {
  auto sys = discretize(rotation_cont(0.2));
  CHECK(sys.A(0, 0) == doctest::Approx(std::cos(0.2)).epsilon(1e-12));
  CHECK(sys.A(0, 1) == doctest::Approx(-std::sin(0.2)).epsilon(1e-12));
  CHECK(sys.A(1, 0) == doctest::Approx(std::sin(0.2)).epsilon(1e-12));
  CHECK(sys.A(1, 1) == doctest::Approx(std::cos(0.2)).epsilon(1e-12));
  CHECK(sys.A(0, 0) == doctest::Approx(0.9801).epsilon(1e-4));
  CHECK(sys.A(1, 0) == doctest::Approx(0.1987).epsilon(1e-4));
}

TEST_CASE("discretize: semigroup property") {
  auto s1 = discretize(rotation_cont(0.2));
  auto s2 = discretize(rotation_cont(0.4));
  CHECK((s1.A * s1.A - s2.A).lpNorm<Eigen::Infinity>() <= 1e-12);

  auto d1 = discretize(double_integrator_cont());
  auto c2 = double_integrator_cont();
  c2.dt = 0.2;
  auto d2 = discretize(c2);
  CHECK((d1.A * d1.A - d2.A).lpNorm<Eigen::Infinity>() <= 1e-12);
  // One zero-order-hold input over 0.2 s equals two identical 0.1 s holds.
  CHECK((d1.A * d1.B + d1.B - d2.B).lpNorm<Eigen::Infinity>() <= 1e-12);
}

TEST_CASE("discretize rejects bad input") {
  auto c = double_integrator_cont();
  c.dt = 0.0;
  CHECK_THROWS_AS(discretize(c), std::invalid_argument);
  c = double_integrator_cont();
  c.w = Eigen::VectorXd::Zero(3);
  CHECK_THROWS_AS(discretize(c), std::invalid_argument);
}

TEST_CASE("step applies affine update") {
  auto sys = discretize(double_integrator_cont());
  Eigen::Vector2d x(1.0, -0.5);
  Eigen::VectorXd u = Eigen::VectorXd::Constant(1, 2.0);
  Eigen::VectorXd v(0);
  Eigen::VectorXd next = step(sys, x, u, v);
  CHECK(next[0] == doctest::Approx(1.0 - 0.05 + 0.01).epsilon(1e-12));
  CHECK(next[1] == doctest::Approx(-0.5 + 0.2).epsilon(1e-12));
  CHECK_THROWS_AS(step(sys, Eigen::Vector3d::Zero(), u, v), std::invalid_argument);
}

TEST_CASE("matrix_powers") {
  Eigen::MatrixXd a(2, 2);
  a << 1, 1, 0, 1;
  auto p = matrix_powers(a, 4);
  REQUIRE(p.size() == 5);
  CHECK(p[0] == Eigen::MatrixXd::Identity(2, 2));
  CHECK(p[4](0, 1) == doctest::Approx(4.0));
}

TEST_CASE("reach_sequence: step zero is the scaled template") {
  auto sys = discretize(rotation_cont(0.2));
  sys.V = Zonotope(Eigen::VectorXd(0), Eigen::MatrixXd(0, 0));
  Eigen::MatrixXd gi(2, 3);
  gi << 1, 0, 0.6, 0, 1, 0.8;
  Eigen::Vector2d alpha(0.1, -0.2);
  Eigen::Vector3d gamma(0.5, 0.25, 1.0);
  auto reach = reach_sequence(sys, gi, alpha, gamma, PolicyParams{}, 5);
  REQUIRE(reach.size() == 6);
  CHECK((reach[0].center - alpha).lpNorm<Eigen::Infinity>() <= 1e-14);
  CHECK((reach[0].generators - gi * gamma.asDiagonal()).lpNorm<Eigen::Infinity>() <= 1e-14);
  // No inputs, no disturbance: generator count stays constant and the sets
  // are rotations of the initial one.
  for (int t = 0; t <= 5; ++t) {
    CHECK(reach[static_cast<size_t>(t)].count() == 3);
    Eigen::MatrixXd at = matrix_powers(sys.A, t)[static_cast<size_t>(t)];
    CHECK((reach[static_cast<size_t>(t)].generators - at * gi * gamma.asDiagonal())
              .lpNorm<Eigen::Infinity>() <= 1e-12);
  }
}

TEST_CASE("reach_sequence: disturbance block count grows per step") {
  auto sys = discretize(rotation_cont(0.2));
  sys.C = Eigen::MatrixXd::Identity(2, 2);
  sys.V = Zonotope(Eigen::Vector2d(0.01, 0.0), 0.05 * Eigen::MatrixXd::Identity(2, 2));
  Eigen::MatrixXd gi = Eigen::MatrixXd::Identity(2, 2);
  auto reach = reach_sequence(sys, gi, Eigen::Vector2d::Zero(),
                              Eigen::Vector2d(0.3, 0.3), PolicyParams{}, 4);
  for (int t = 0; t <= 4; ++t)
    CHECK(reach[static_cast<size_t>(t)].count() == 2 + 2 * t);
  // Newest disturbance block is the unmapped C G_V.
  CHECK((reach[3].generators.rightCols(2) - sys.C * sys.V.generators)
            .lpNorm<Eigen::Infinity>() <= 1e-14);
  // Disturbance center accumulates through the drift term.
  Eigen::Vector2d c_expect = Eigen::Vector2d::Zero();
  for (int s = 0; s < 3; ++s)
    c_expect += matrix_powers(sys.A, 2)[static_cast<size_t>(2 - s)] *
                (sys.C * sys.V.center);
  CHECK((reach[3].center - c_expect).lpNorm<Eigen::Infinity>() <= 1e-13);
}

TEST_CASE("reach_sequence: sampled closed-loop points are members") {
  std::mt19937_64 rng(41);
  auto sys = discretize(double_integrator_cont());
  sys.C = Eigen::MatrixXd::Identity(2, 2) * 0.5;
  sys.V = Zonotope(Eigen::Vector2d(0.0, 0.01),
                   (Eigen::Vector2d(0.02, 0.01)).asDiagonal().toDenseMatrix());
  const int T = 6;
  Eigen::MatrixXd gi(2, 3);
  gi << 1, 0, 0.6, 0, 1, -0.8;
  Eigen::Vector2d alpha(0.05, -0.1);
  Eigen::Vector3d gamma(0.4, 0.3, 0.2);

  PolicyParams pol;
  for (int t = 0; t < T; ++t) {
    pol.beta.push_back(Eigen::VectorXd::Constant(1, uniform(rng, -0.3, 0.3)));
    Eigen::MatrixXd phi(1, 3);
    for (int i = 0; i < 3; ++i) phi(0, i) = uniform(rng, -0.2, 0.2);
    pol.Phi.push_back(phi);
    pol.free_generators.push_back(Eigen::MatrixXd::Constant(1, 1, 1.0));
    pol.psi.push_back(Eigen::VectorXd::Constant(1, uniform(rng, 0.0, 0.25)));
  }
  auto reach = reach_sequence(sys, gi, alpha, gamma, pol, T);

  for (int trial = 0; trial < 50; ++trial) {
    Eigen::Vector3d lambda;
    for (int i = 0; i < 3; ++i) lambda[i] = uniform(rng, -1, 1);
    Eigen::VectorXd x = alpha + gi * gamma.asDiagonal() * lambda;
    std::vector<double> rho, mu1, mu2;
    for (int t = 0; t < T; ++t) {
      // Coefficients for the reach zonotope at time t match the rollout so far.
      Eigen::VectorXd coeff(reach[static_cast<size_t>(t)].count());
      coeff.head(3) = lambda;
      for (int s = 0; s < t; ++s) coeff[3 + s] = rho[static_cast<size_t>(s)];
      for (int s = 0; s < t; ++s) {
        coeff[3 + t + 2 * s] = mu1[static_cast<size_t>(s)];
        coeff[3 + t + 2 * s + 1] = mu2[static_cast<size_t>(s)];
      }
      Eigen::VectorXd recon = reach[static_cast<size_t>(t)].center +
                              reach[static_cast<size_t>(t)].generators * coeff;
      CHECK((recon - x).lpNorm<Eigen::Infinity>() <= 1e-10);

      double r = uniform(rng, -1, 1), m1 = uniform(rng, -1, 1), m2 = uniform(rng, -1, 1);
      rho.push_back(r);
      mu1.push_back(m1);
      mu2.push_back(m2);
      Eigen::VectorXd u = pol.beta[static_cast<size_t>(t)] +
                          pol.Phi[static_cast<size_t>(t)] * lambda +
                          pol.free_generators[static_cast<size_t>(t)] *
                              pol.psi[static_cast<size_t>(t)].asDiagonal() *
                              Eigen::VectorXd::Constant(1, r);
      Eigen::VectorXd v = sys.V.center + sys.V.generators * Eigen::Vector2d(m1, m2);
      x = step(sys, x, u, v);
    }
  }
}

TEST_CASE("reach_sequence: centers superpose linearly in alpha") {
  auto sys = discretize(double_integrator_cont());
  sys.V = Zonotope(Eigen::VectorXd(0), Eigen::MatrixXd(0, 0));
  Eigen::MatrixXd gi = Eigen::MatrixXd::Identity(2, 2);
  Eigen::Vector2d gamma(0.1, 0.1);
  PolicyParams pol;
  for (int t = 0; t < 4; ++t) pol.beta.push_back(Eigen::VectorXd::Constant(1, 0.2));
  Eigen::Vector2d a1(0.3, 0.0), a2(-0.1, 0.4);
  auto r1 = reach_sequence(sys, gi, a1, gamma, pol, 4);
  auto r2 = reach_sequence(sys, gi, a2, gamma, pol, 4);
  auto rs = reach_sequence(sys, gi, a1 + a2, gamma, pol, 4);
  auto r0 = reach_sequence(sys, gi, Eigen::Vector2d::Zero(), gamma, pol, 4);
  for (int t = 0; t <= 4; ++t) {
    Eigen::VectorXd lhs = rs[static_cast<size_t>(t)].center;
    Eigen::VectorXd rhs = r1[static_cast<size_t>(t)].center +
                          r2[static_cast<size_t>(t)].center -
                          r0[static_cast<size_t>(t)].center;
    CHECK((lhs - rhs).lpNorm<Eigen::Infinity>() <= 1e-12);
  }
}

TEST_CASE("reach_sequence input validation") {
  auto sys = discretize(rotation_cont(0.2));
  sys.V = Zonotope(Eigen::VectorXd(0), Eigen::MatrixXd(0, 0));
  Eigen::MatrixXd gi = Eigen::MatrixXd::Identity(2, 2);
  CHECK_THROWS_AS(reach_sequence(sys, gi, Eigen::Vector2d::Zero(),
                                 Eigen::Vector2d(-0.1, 0.1), PolicyParams{}, 2),
                  std::invalid_argument);
  CHECK_THROWS_AS(reach_sequence(sys, gi, Eigen::Vector3d::Zero(),
                                 Eigen::Vector2d(0.1, 0.1), PolicyParams{}, 2),
                  std::invalid_argument);
  PolicyParams pol;
  pol.beta.push_back(Eigen::VectorXd(0));
  CHECK_THROWS_AS(reach_sequence(sys, gi, Eigen::Vector2d::Zero(),
                                 Eigen::Vector2d(0.1, 0.1), pol, 2),
                  std::invalid_argument);
}
