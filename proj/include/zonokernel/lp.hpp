#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace zk {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Standard-form linear program: minimize c.z subject to G z <= h,
/// E z = f and per-variable bounds.  Matrices are stored as triplets so
/// zero entries cost nothing.
struct StandardLP {
  int num_vars = 0;
  std::vector<double> cost;
  std::vector<double> lower;
  std::vector<double> upper;

  std::vector<Eigen::Triplet<double>> ineq;
  std::vector<double> ineq_rhs;
  std::vector<Eigen::Triplet<double>> eq;
  std::vector<double> eq_rhs;

  int add_variable(double lo = -kInf, double hi = kInf, double c = 0.0) {
    cost.push_back(c);
    lower.push_back(lo);
    upper.push_back(hi);
    return num_vars++;
  }

  int add_variables(int n, double lo = -kInf, double hi = kInf, double c = 0.0) {
    int first = num_vars;
    for (int i = 0; i < n; ++i) add_variable(lo, hi, c);
    return first;
  }

  void set_cost(int var, double c) { cost.at(static_cast<size_t>(var)) = c; }

  int add_inequality(double rhs) {
    ineq_rhs.push_back(rhs);
    return static_cast<int>(ineq_rhs.size()) - 1;
  }

  void ineq_term(int row, int var, double coeff) {
    if (coeff != 0.0) ineq.emplace_back(row, var, coeff);
  }

  int add_equality(double rhs) {
    eq_rhs.push_back(rhs);
    return static_cast<int>(eq_rhs.size()) - 1;
  }

  void eq_term(int row, int var, double coeff) {
    if (coeff != 0.0) eq.emplace_back(row, var, coeff);
  }

  int num_inequalities() const { return static_cast<int>(ineq_rhs.size()); }
  int num_equalities() const { return static_cast<int>(eq_rhs.size()); }

  void validate() const {
    if (static_cast<int>(cost.size()) != num_vars ||
        static_cast<int>(lower.size()) != num_vars ||
        static_cast<int>(upper.size()) != num_vars)
      throw std::invalid_argument("StandardLP: inconsistent variable arrays");
    for (int j = 0; j < num_vars; ++j) {
      if (!std::isfinite(cost[static_cast<size_t>(j)]))
        throw std::invalid_argument("StandardLP: non-finite cost");
      if (lower[static_cast<size_t>(j)] > upper[static_cast<size_t>(j)])
        throw std::invalid_argument("StandardLP: lower bound above upper bound");
    }
    auto check = [&](const std::vector<Eigen::Triplet<double>>& trips, int rows,
                     const char* what) {
      for (const auto& t : trips) {
        if (t.row() < 0 || t.row() >= rows || t.col() < 0 || t.col() >= num_vars)
          throw std::invalid_argument(std::string("StandardLP: index out of range in ") + what);
        if (!std::isfinite(t.value()))
          throw std::invalid_argument(std::string("StandardLP: non-finite entry in ") + what);
      }
    };
    check(ineq, num_inequalities(), "G");
    check(eq, num_equalities(), "E");
    for (double v : ineq_rhs)
      if (!std::isfinite(v)) throw std::invalid_argument("StandardLP: non-finite h");
    for (double v : eq_rhs)
      if (!std::isfinite(v)) throw std::invalid_argument("StandardLP: non-finite f");
  }
};

enum class LPStatus { optimal, infeasible, unbounded };

struct LPSolution {
  LPStatus status = LPStatus::optimal;
  Eigen::VectorXd z;
  double objective_value = 0.0;
  double max_residual = 0.0;  // max primal infeasibility
  int iterations = 0;
};

/// Plain-text dump of an assembled LP, one line per constraint, for
/// external cross-checks.
inline void dump_lp(const StandardLP& lp, std::ostream& os) {
  os << "min:";
  for (int j = 0; j < lp.num_vars; ++j)
    if (lp.cost[static_cast<size_t>(j)] != 0.0)
      os << " " << lp.cost[static_cast<size_t>(j)] << "*z" << j;
  os << "\n";
  std::vector<std::vector<std::pair<int, double>>> rows(
      static_cast<size_t>(lp.num_inequalities()));
  for (const auto& t : lp.ineq)
    rows[static_cast<size_t>(t.row())].emplace_back(t.col(), t.value());
  for (int r = 0; r < lp.num_inequalities(); ++r) {
    auto& terms = rows[static_cast<size_t>(r)];
    std::sort(terms.begin(), terms.end());
    bool first = true;
    for (auto& [v, c] : terms) {
      os << (first ? "" : " + ") << c << "*z" << v;
      first = false;
    }
    os << " <= " << lp.ineq_rhs[static_cast<size_t>(r)] << "\n";
  }
  std::vector<std::vector<std::pair<int, double>>> erows(
      static_cast<size_t>(lp.num_equalities()));
  for (const auto& t : lp.eq)
    erows[static_cast<size_t>(t.row())].emplace_back(t.col(), t.value());
  for (int r = 0; r < lp.num_equalities(); ++r) {
    auto& terms = erows[static_cast<size_t>(r)];
    std::sort(terms.begin(), terms.end());
    bool first = true;
    for (auto& [v, c] : terms) {
      os << (first ? "" : " + ") << c << "*z" << v;
      first = false;
    }
    os << " = " << lp.eq_rhs[static_cast<size_t>(r)] << "\n";
  }
  for (int j = 0; j < lp.num_vars; ++j) {
    double lo = lp.lower[static_cast<size_t>(j)], hi = lp.upper[static_cast<size_t>(j)];
    if (lo != -kInf || hi != kInf)
      os << lo << " <= z" << j << " <= " << hi << "\n";
  }
}

namespace lp_detail {

struct IpmOutcome {
  bool converged = false;
  bool diverged = false;
  Eigen::VectorXd x;
  double rel_primal = kInf;   // relative primal infeasibility of best iterate
  double rel_dual = kInf;
  double rel_gap = kInf;
  int iterations = 0;
};

// Primal-dual interior point (Mehrotra predictor-corrector) for
//   min c'x  s.t.  A x + s = b, s >= 0,  E x = f.
// The Newton steps are computed from the regularized quasidefinite KKT
// system factored with a sparse LDL^T; regularization error is removed
// by iterative refinement against the unregularized system.
inline IpmOutcome ipm_solve(const Eigen::SparseMatrix<double>& A,
                            const Eigen::VectorXd& b,
                            const Eigen::SparseMatrix<double>& E,
                            const Eigen::VectorXd& f,
                            const Eigen::VectorXd& c,
                            double tol, int max_iter) {
  using SpMat = Eigen::SparseMatrix<double>;
  using Vec = Eigen::VectorXd;
  const int n = static_cast<int>(c.size());
  const int m = static_cast<int>(A.rows());
  const int p = static_cast<int>(E.rows());
  if (m == 0) throw std::invalid_argument("ipm_solve: at least one inequality required");

  const double bnorm = std::max({1.0, b.lpNorm<Eigen::Infinity>(),
                                 p > 0 ? f.lpNorm<Eigen::Infinity>() : 0.0});
  const double cnorm = std::max(1.0, c.lpNorm<Eigen::Infinity>());

  Vec x = Vec::Zero(n);
  Vec z = Vec::Zero(p);
  Vec s = Vec::Constant(m, std::sqrt(bnorm) * std::sqrt(cnorm));
  Vec y = Vec::Constant(m, std::sqrt(bnorm) * std::sqrt(cnorm));

  const SpMat At = A.transpose();
  const SpMat Et = E.transpose();

  double delta = 1e-9;

  // KKT structure: [delta*I  A'      E'   ]
  //                [A        -(D+d)  0    ]
  //                [E        0       -d*I ]
  const int N = n + m + p;
  SpMat K(N, N);
  {
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<size_t>(2 * (A.nonZeros() + E.nonZeros()) + N));
    for (int j = 0; j < n; ++j) trips.emplace_back(j, j, delta);
    for (int k = 0; k < A.outerSize(); ++k)
      for (SpMat::InnerIterator it(A, k); it; ++it) {
        trips.emplace_back(n + it.row(), it.col(), it.value());
        trips.emplace_back(it.col(), n + it.row(), it.value());
      }
    for (int i = 0; i < m; ++i) trips.emplace_back(n + i, n + i, -1.0);
    for (int k = 0; k < E.outerSize(); ++k)
      for (SpMat::InnerIterator it(E, k); it; ++it) {
        trips.emplace_back(n + m + it.row(), it.col(), it.value());
        trips.emplace_back(it.col(), n + m + it.row(), it.value());
      }
    for (int i = 0; i < p; ++i) trips.emplace_back(n + m + i, n + m + i, -delta);
    K.setFromTriplets(trips.begin(), trips.end());
    K.makeCompressed();
  }
  // Locate every diagonal slot; the middle m of them hold -(D_ii + delta).
  std::vector<Eigen::Index> dslot(static_cast<size_t>(N), -1);
  {
    const auto* outer = K.outerIndexPtr();
    const auto* inner = K.innerIndexPtr();
    for (int col = 0; col < N; ++col)
      for (Eigen::Index k = outer[col]; k < outer[col + 1]; ++k)
        if (inner[k] == col) { dslot[static_cast<size_t>(col)] = k; break; }
  }

  Eigen::SimplicialLDLT<SpMat, Eigen::Lower> ldlt;
  ldlt.analyzePattern(K);

  IpmOutcome out;
  out.x = x;
  double best_merit = kInf;

  Vec D(m);
  auto kkt_apply = [&](const Vec& v, Vec& r) {
    // Unregularized KKT product, for refinement.
    auto dx = v.head(n);
    auto dy = v.segment(n, m);
    auto dz = v.tail(p);
    r.head(n) = At * dy;
    if (p > 0) r.head(n) += Et * dz;
    r.segment(n, m) = A * dx - D.cwiseProduct(dy);
    if (p > 0) r.tail(p) = E * dx;
  };
  auto solve_refined = [&](const Vec& rhs) {
    Vec sol = ldlt.solve(rhs);
    Vec resid(N), corr(N);
    for (int it = 0; it < 2; ++it) {
      kkt_apply(sol, resid);
      resid = rhs - resid;
      corr = ldlt.solve(resid);
      sol += corr;
    }
    return sol;
  };
  auto max_step = [](const Vec& v, const Vec& dv) {
    double a = 1.0;
    for (Eigen::Index i = 0; i < v.size(); ++i)
      if (dv[i] < 0.0) a = std::min(a, -v[i] / dv[i]);
    return a;
  };

  for (int iter = 0; iter < max_iter; ++iter) {
    Vec r_p = b - A * x - s;
    Vec r_f = p > 0 ? Vec(f - E * x) : Vec(0);
    Vec r_d = -c - At * y;
    if (p > 0) r_d -= Et * z;
    double mu = s.dot(y) / m;

    double pobj = c.dot(x);
    double dobj = -b.dot(y) - (p > 0 ? f.dot(z) : 0.0);
    double rel_p = std::max(r_p.lpNorm<Eigen::Infinity>(),
                            p > 0 ? r_f.lpNorm<Eigen::Infinity>() : 0.0) / bnorm;
    double rel_d = r_d.lpNorm<Eigen::Infinity>() / cnorm;
    double rel_g = std::abs(pobj - dobj) / (1.0 + std::abs(pobj));

    double merit = rel_p + rel_d + rel_g;
    if (merit < best_merit) {
      best_merit = merit;
      out.x = x;
      out.rel_primal = rel_p;
      out.rel_dual = rel_d;
      out.rel_gap = rel_g;
    }
    out.iterations = iter;
    if (rel_p < tol && rel_d < tol && rel_g < tol) {
      out.converged = true;
      out.x = x;
      out.rel_primal = rel_p;
      out.rel_dual = rel_d;
      out.rel_gap = rel_g;
      return out;
    }
    if (x.lpNorm<Eigen::Infinity>() > 1e13 || mu > 1e14) {
      out.diverged = true;
      return out;
    }

    D = s.cwiseQuotient(y);
    double* vals = K.valuePtr();
    for (int i = 0; i < m; ++i)
      vals[dslot[static_cast<size_t>(n + i)]] = -(D[i] + delta);
    ldlt.factorize(K);
    if (ldlt.info() != Eigen::Success) {
      delta *= 100.0;
      for (int j = 0; j < n; ++j) vals[dslot[static_cast<size_t>(j)]] = delta;
      for (int i = 0; i < p; ++i) vals[dslot[static_cast<size_t>(n + m + i)]] = -delta;
      continue;
    }

    // Predictor.
    Vec rhs(N);
    rhs.head(n) = r_d;
    rhs.segment(n, m) = r_p + s;  // r_p - Y^{-1} r_c with r_c = -y.*s
    if (p > 0) rhs.tail(p) = r_f;
    Vec step = solve_refined(rhs);
    Vec dy_aff = step.segment(n, m);
    Vec ds_aff = -s - D.cwiseProduct(dy_aff);
    double ap = max_step(s, ds_aff);
    double ad = max_step(y, dy_aff);
    double mu_aff = (s + ap * ds_aff).dot(y + ad * dy_aff) / m;
    double sigma = std::pow(mu_aff / mu, 3);

    // Corrector.
    Vec r_c = Vec::Constant(m, sigma * mu) - y.cwiseProduct(s)
              - dy_aff.cwiseProduct(ds_aff);
    rhs.segment(n, m) = r_p - r_c.cwiseQuotient(y);
    step = solve_refined(rhs);
    Vec dx = step.head(n);
    Vec dy = step.segment(n, m);
    Vec dz = step.tail(p);
    Vec ds = r_c.cwiseQuotient(y) - D.cwiseProduct(dy);

    double tau = 0.995;
    ap = tau * max_step(s, ds);
    ad = tau * max_step(y, dy);
    ap = std::min(ap, 1.0);
    ad = std::min(ad, 1.0);
    x += ap * dx;
    s += ap * ds;
    y += ad * dy;
    z += ad * dz;
  }
  return out;
}

struct Assembled {
  Eigen::SparseMatrix<double> A;  // inequalities including bounds
  Eigen::VectorXd b;
  Eigen::SparseMatrix<double> E;
  Eigen::VectorXd f;
  Eigen::VectorXd c;
};

inline Assembled assemble(const StandardLP& lp) {
  Assembled out;
  const int n = lp.num_vars;
  int m = lp.num_inequalities();
  std::vector<Eigen::Triplet<double>> atrips = lp.ineq;
  std::vector<double> brhs = lp.ineq_rhs;
  for (int j = 0; j < n; ++j) {
    double lo = lp.lower[static_cast<size_t>(j)], hi = lp.upper[static_cast<size_t>(j)];
    if (hi != kInf) {
      atrips.emplace_back(m, j, 1.0);
      brhs.push_back(hi);
      ++m;
    }
    if (lo != -kInf) {
      atrips.emplace_back(m, j, -1.0);
      brhs.push_back(-lo);
      ++m;
    }
  }
  out.A.resize(m, n);
  out.A.setFromTriplets(atrips.begin(), atrips.end());
  out.A.makeCompressed();
  out.b = Eigen::Map<const Eigen::VectorXd>(brhs.data(), static_cast<Eigen::Index>(brhs.size()));
  const int peq = lp.num_equalities();
  out.E.resize(peq, n);
  out.E.setFromTriplets(lp.eq.begin(), lp.eq.end());
  out.E.makeCompressed();
  out.f = Eigen::Map<const Eigen::VectorXd>(lp.eq_rhs.data(), peq);
  out.c = Eigen::Map<const Eigen::VectorXd>(lp.cost.data(), n);
  return out;
}

inline double primal_infeasibility(const Assembled& q, const Eigen::VectorXd& x) {
  double r = (q.A * x - q.b).maxCoeff();
  if (q.E.rows() > 0)
    r = std::max(r, (q.E * x - q.f).lpNorm<Eigen::Infinity>());
  return std::max(r, 0.0);
}

// Phase-1 problem: min tau s.t. A x - tau <= b, |E x - f| <= tau, tau >= 0.
// Always feasible and bounded, so a converged solve certifies (in)feasibility
// of the original constraints.
inline IpmOutcome phase1(const Assembled& q, double tol, int max_iter) {
  using SpMat = Eigen::SparseMatrix<double>;
  const int n = static_cast<int>(q.c.size());
  const int m = static_cast<int>(q.A.rows());
  const int pe = static_cast<int>(q.E.rows());
  std::vector<Eigen::Triplet<double>> trips;
  std::vector<double> rhs;
  int row = 0;
  for (int k = 0; k < q.A.outerSize(); ++k)
    for (SpMat::InnerIterator it(q.A, k); it; ++it)
      trips.emplace_back(it.row(), it.col(), it.value());
  for (int i = 0; i < m; ++i) {
    trips.emplace_back(i, n, -1.0);
    rhs.push_back(q.b[i]);
  }
  row = m;
  for (int sgn = 0; sgn < 2; ++sgn) {
    double sg = sgn == 0 ? 1.0 : -1.0;
    for (int k = 0; k < q.E.outerSize(); ++k)
      for (SpMat::InnerIterator it(q.E, k); it; ++it)
        trips.emplace_back(row + it.row(), it.col(), sg * it.value());
    for (int i = 0; i < pe; ++i) {
      trips.emplace_back(row + i, n, -1.0);
      rhs.push_back(sg * q.f[i]);
    }
    row += pe;
  }
  trips.emplace_back(row, n, -1.0);
  rhs.push_back(0.0);
  ++row;

  Assembled ph;
  ph.A.resize(row, n + 1);
  ph.A.setFromTriplets(trips.begin(), trips.end());
  ph.A.makeCompressed();
  ph.b = Eigen::Map<const Eigen::VectorXd>(rhs.data(), row);
  ph.E.resize(0, n + 1);
  ph.f.resize(0);
  ph.c = Eigen::VectorXd::Zero(n + 1);
  ph.c[n] = 1.0;
  return ipm_solve(ph.A, ph.b, ph.E, ph.f, ph.c, tol, max_iter);
}

// Ray problem: min c'd s.t. A d <= 0, E d = 0, -1 <= d <= 1.  A negative
// optimum exhibits an unbounded ray of the original (feasible) problem.
inline IpmOutcome ray_problem(const Assembled& q, double tol, int max_iter) {
  const int n = static_cast<int>(q.c.size());
  const int m = static_cast<int>(q.A.rows());
  std::vector<Eigen::Triplet<double>> trips;
  for (int k = 0; k < q.A.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(q.A, k); it; ++it)
      trips.emplace_back(it.row(), it.col(), it.value());
  int row = m;
  std::vector<double> rhs(static_cast<size_t>(m), 0.0);
  for (int j = 0; j < n; ++j) {
    trips.emplace_back(row, j, 1.0);
    rhs.push_back(1.0);
    ++row;
    trips.emplace_back(row, j, -1.0);
    rhs.push_back(1.0);
    ++row;
  }
  Assembled r;
  r.A.resize(row, n);
  r.A.setFromTriplets(trips.begin(), trips.end());
  r.A.makeCompressed();
  r.b = Eigen::Map<const Eigen::VectorXd>(rhs.data(), row);
  r.E = q.E;
  r.f = Eigen::VectorXd::Zero(q.E.rows());
  r.c = q.c;
  return ipm_solve(r.A, r.b, r.E, r.f, r.c, tol, max_iter);
}

}  // namespace lp_detail

struct LPOptions {
  double tol = 1e-9;
  int max_iter = 200;
  // Looser thresholds at which a non-fully-converged iterate is still
  // accepted as optimal.
  double accept_feas = 1e-7;
  double accept_gap = 1e-6;
};

inline LPSolution solve_lp(const StandardLP& lp, const LPOptions& opts = {}) {
  lp.validate();
  using namespace lp_detail;
  Assembled q = assemble(lp);
  if (q.A.rows() == 0)
    throw std::invalid_argument("solve_lp: problem has no inequality constraints or bounds");

  IpmOutcome main = ipm_solve(q.A, q.b, q.E, q.f, q.c, opts.tol, opts.max_iter);
  LPSolution sol;
  sol.iterations = main.iterations;
  if (main.converged) {
    sol.status = LPStatus::optimal;
    sol.z = main.x;
    sol.objective_value = q.c.dot(main.x);
    sol.max_residual = primal_infeasibility(q, main.x);
    return sol;
  }

  IpmOutcome ph = phase1(q, opts.tol, opts.max_iter);
  if (!ph.converged)
    throw std::runtime_error("solve_lp: interior point method failed to converge");
  double tau = ph.x[q.c.size()];
  double feas_thresh = 1e-7 * (1.0 + q.b.lpNorm<Eigen::Infinity>() +
                               (q.f.size() > 0 ? q.f.lpNorm<Eigen::Infinity>() : 0.0));
  if (tau > feas_thresh) {
    sol.status = LPStatus::infeasible;
    sol.max_residual = tau;
    return sol;
  }

  IpmOutcome ray = ray_problem(q, opts.tol, opts.max_iter);
  if (ray.converged &&
      q.c.dot(ray.x) < -1e-7 * (1.0 + q.c.lpNorm<Eigen::Infinity>())) {
    sol.status = LPStatus::unbounded;
    return sol;
  }

  // Feasible and bounded but the main solve stalled; accept the best
  // iterate if it is good enough.
  if (main.rel_primal < opts.accept_feas && main.rel_gap < opts.accept_gap) {
    sol.status = LPStatus::optimal;
    sol.z = main.x;
    sol.objective_value = q.c.dot(main.x);
    sol.max_residual = primal_infeasibility(q, main.x);
    return sol;
  }
  throw std::runtime_error("solve_lp: interior point method stalled on a feasible problem");
}

}  // namespace zk
