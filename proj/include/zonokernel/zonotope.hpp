#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

#include "lp.hpp"

namespace zk {

// Centralized tolerances.
inline constexpr double kFeasTol = 1e-8;   // LP feasibility / membership
inline constexpr double kGeomTol = 1e-9;   // geometric comparisons
inline constexpr double kCertTol = 1e-6;   // user-facing certification

/// Elementwise box [lower, upper].
struct IntervalBox {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  IntervalBox() = default;
  IntervalBox(Eigen::VectorXd lo, Eigen::VectorXd hi)
      : lower(std::move(lo)), upper(std::move(hi)) {
    if (lower.size() != upper.size())
      throw std::invalid_argument("IntervalBox: dimension mismatch");
    for (Eigen::Index i = 0; i < lower.size(); ++i) {
      if (!std::isfinite(lower[i]) || !std::isfinite(upper[i]))
        throw std::invalid_argument("IntervalBox: non-finite bound");
      if (lower[i] > upper[i])
        throw std::invalid_argument("IntervalBox: lower above upper");
    }
  }

  int dim() const { return static_cast<int>(lower.size()); }

  bool contains(const Eigen::VectorXd& x, double tol = 0.0) const {
    if (x.size() != lower.size())
      throw std::invalid_argument("IntervalBox::contains: dimension mismatch");
    return (x.array() >= lower.array() - tol).all() &&
           (x.array() <= upper.array() + tol).all();
  }

  Eigen::VectorXd center() const { return 0.5 * (lower + upper); }
  Eigen::VectorXd half_width() const { return 0.5 * (upper - lower); }
};

/// Zonotope in G-representation: center plus a d x n generator matrix.
struct Zonotope {
  Eigen::VectorXd center;
  Eigen::MatrixXd generators;  // column i is generator g_i

  Zonotope() = default;
  Zonotope(Eigen::VectorXd c, Eigen::MatrixXd G)
      : center(std::move(c)), generators(std::move(G)) {
    if (generators.size() == 0 && generators.rows() == 0)
      generators.resize(center.size(), 0);
    if (center.size() != generators.rows())
      throw std::invalid_argument("Zonotope: center/generator dimension mismatch");
    if (!center.allFinite() || !generators.allFinite())
      throw std::invalid_argument("Zonotope: non-finite entry");
  }

  static Zonotope point(Eigen::VectorXd c) {
    Eigen::MatrixXd G(c.size(), 0);
    return Zonotope(std::move(c), std::move(G));
  }

  int dim() const { return static_cast<int>(center.size()); }
  int count() const { return static_cast<int>(generators.cols()); }
};

/// Generator coefficients lambda with |lambda_i| <= 1.
struct LambdaCoeffs {
  Eigen::VectorXd lambda;
};

/// Tight coordinate bounds [c - |G|1, c + |G|1].
inline IntervalBox interval_hull(const Zonotope& z) {
  Eigen::VectorXd r = z.generators.cwiseAbs().rowwise().sum();
  return IntervalBox(z.center - r, z.center + r);
}

inline Zonotope linear_map(const Eigen::MatrixXd& m, const Zonotope& z) {
  if (m.cols() != z.dim())
    throw std::invalid_argument("linear_map: dimension mismatch");
  return Zonotope(m * z.center, m * z.generators);
}

/// <c + shift | [G extra]>; realizes Minkowski-sum style block accumulation.
inline Zonotope concatenate(const Zonotope& z, const Eigen::VectorXd& center_shift,
                            const Eigen::MatrixXd& extra) {
  if (center_shift.size() != z.dim() ||
      (extra.size() > 0 && extra.rows() != z.dim()))
    throw std::invalid_argument("concatenate: dimension mismatch");
  Eigen::MatrixXd g(z.dim(), z.count() + extra.cols());
  g << z.generators, extra;
  return Zonotope(z.center + center_shift, std::move(g));
}

/// <alpha | G Gamma> with Gamma = diag(gamma), gamma >= 0.
inline Zonotope scale(const Eigen::MatrixXd& template_generators,
                      const Eigen::VectorXd& gamma, const Eigen::VectorXd& alpha) {
  if (gamma.size() != template_generators.cols() ||
      alpha.size() != template_generators.rows())
    throw std::invalid_argument("scale: dimension mismatch");
  if ((gamma.array() < 0).any())
    throw std::invalid_argument("scale: negative gamma entry");
  return Zonotope(alpha, template_generators * gamma.asDiagonal());
}

/// Exact containment test of a zonotope in a box.
inline bool contained_in_box(const Zonotope& z, const IntervalBox& b,
                             double tol = 0.0) {
  if (z.dim() != b.dim())
    throw std::invalid_argument("contained_in_box: dimension mismatch");
  Eigen::VectorXd r = z.generators.cwiseAbs().rowwise().sum();
  return ((z.center - r).array() >= b.lower.array() - tol).all() &&
         ((z.center + r).array() <= b.upper.array() + tol).all();
}

/// Membership with witness: the minimum-infinity-norm lambda reconstructing x,
/// or nullopt when x is outside the zonotope.
inline std::optional<LambdaCoeffs> lambda_of(const Eigen::VectorXd& x,
                                             const Zonotope& z) {
  if (x.size() != z.dim())
    throw std::invalid_argument("lambda_of: dimension mismatch");
  const int n = z.count();
  if (n == 0)
    return ((x - z.center).lpNorm<Eigen::Infinity>() <= kFeasTol)
               ? std::optional<LambdaCoeffs>(LambdaCoeffs{Eigen::VectorXd(0)})
               : std::nullopt;
  if (!interval_hull(z).contains(x, kFeasTol)) return std::nullopt;

  StandardLP lp;
  int l0 = lp.add_variables(n, -1.0 - kFeasTol, 1.0 + kFeasTol);
  int t = lp.add_variable(0.0, kInf, 1.0);
  for (int i = 0; i < n; ++i) {
    int r1 = lp.add_inequality(0.0);  // lambda_i - t <= 0
    lp.ineq_term(r1, l0 + i, 1.0);
    lp.ineq_term(r1, t, -1.0);
    int r2 = lp.add_inequality(0.0);  // -lambda_i - t <= 0
    lp.ineq_term(r2, l0 + i, -1.0);
    lp.ineq_term(r2, t, -1.0);
  }
  Eigen::VectorXd rhs = x - z.center;
  for (int j = 0; j < z.dim(); ++j) {
    int r = lp.add_equality(rhs[j]);
    for (int i = 0; i < n; ++i) lp.eq_term(r, l0 + i, z.generators(j, i));
  }
  auto sol = solve_lp(lp);
  if (sol.status != LPStatus::optimal) return std::nullopt;
  if (sol.z[t] > 1.0 + kFeasTol) return std::nullopt;
  Eigen::VectorXd lambda = sol.z.segment(l0, n).cwiseMin(1.0).cwiseMax(-1.0);
  if ((z.center + z.generators * lambda - x).lpNorm<Eigen::Infinity>() > kFeasTol)
    return std::nullopt;
  return LambdaCoeffs{std::move(lambda)};
}

/// Vertices of the shadow of z on coordinate axes (dims.first, dims.second),
/// in counter-clockwise order.  Degenerate (collinear) projections come back
/// as a 2-point segment, a point projection as a single vertex.
inline std::vector<Eigen::Vector2d> project_polygon(const Zonotope& z,
                                                    std::pair<int, int> dims) {
  auto [di, dj] = dims;
  if (di < 0 || dj < 0 || di >= z.dim() || dj >= z.dim() || di == dj)
    throw std::invalid_argument("project_polygon: invalid axis indices");
  Eigen::Vector2d c(z.center[di], z.center[dj]);

  std::vector<Eigen::Vector2d> gens;
  for (int i = 0; i < z.count(); ++i) {
    Eigen::Vector2d p(z.generators(di, i), z.generators(dj, i));
    if (p.norm() <= kGeomTol) continue;  // zero-norm generators are skipped
    if (p.y() < 0 || (p.y() == 0 && p.x() < 0)) p = -p;
    gens.push_back(p);
  }
  if (gens.empty()) return {c};

  bool collinear = true;
  for (size_t i = 1; i < gens.size() && collinear; ++i)
    if (std::abs(gens[0].x() * gens[i].y() - gens[0].y() * gens[i].x()) >
        kGeomTol * gens[0].norm() * gens[i].norm())
      collinear = false;
  if (collinear) {
    Eigen::Vector2d d = Eigen::Vector2d::Zero();
    for (const auto& p : gens) d += p;
    return {c - d, c + d};
  }

  std::vector<int> order(gens.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    double aa = std::atan2(gens[static_cast<size_t>(a)].y(), gens[static_cast<size_t>(a)].x());
    double ab = std::atan2(gens[static_cast<size_t>(b)].y(), gens[static_cast<size_t>(b)].x());
    if (aa != ab) return aa < ab;
    return a < b;
  });

  Eigen::Vector2d v = c;
  for (const auto& p : gens) v -= p;
  std::vector<Eigen::Vector2d> verts;
  verts.push_back(v);
  for (size_t k = 0; k < order.size(); ++k) {
    v += 2.0 * gens[static_cast<size_t>(order[k])];
    verts.push_back(v);
  }
  for (size_t k = 0; k + 1 < order.size(); ++k) {
    v -= 2.0 * gens[static_cast<size_t>(order[k])];
    verts.push_back(v);
  }
  // Walking sorted edge directions from the bottom vertex traces the boundary
  // counter-clockwise; verify via the shoelace sum as a cheap safeguard.
  double area2 = 0;
  for (size_t k = 0; k < verts.size(); ++k) {
    const auto& a = verts[k];
    const auto& b = verts[(k + 1) % verts.size()];
    area2 += a.x() * b.y() - b.x() * a.y();
  }
  if (area2 < 0) std::reverse(verts.begin(), verts.end());
  return verts;
}

/// Signed polygon area (shoelace); CCW polygons come out positive.
inline double polygon_area(const std::vector<Eigen::Vector2d>& verts) {
  double area2 = 0;
  for (size_t k = 0; k < verts.size(); ++k) {
    const auto& a = verts[k];
    const auto& b = verts[(k + 1) % verts.size()];
    area2 += a.x() * b.y() - b.x() * a.y();
  }
  return 0.5 * area2;
}

}  // namespace zk
