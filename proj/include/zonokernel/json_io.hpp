#pragma once

#include <json.hpp>

#include <fstream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "control.hpp"
#include "kernel.hpp"

namespace zk {

using json = nlohmann::ordered_json;

// Dense matrices serialize as row lists; generator matrices (zonotopes,
// templates, free generators) serialize as lists of generator columns.

inline json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Eigen::MatrixXd matrix_from_json(const json& j, int expect_cols = -1) {
  if (!j.is_array()) throw std::invalid_argument("expected a matrix (list of rows)");
  const int rows = static_cast<int>(j.size());
  int cols = rows > 0 ? static_cast<int>(j.at(0).size()) : std::max(expect_cols, 0);
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    if (static_cast<int>(j.at(i).size()) != cols)
      throw std::invalid_argument("ragged matrix rows");
    for (int k = 0; k < cols; ++k) m(i, k) = j.at(i).at(k).get<double>();
  }
  return m;
}

inline json vector_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

inline Eigen::VectorXd vector_from_json(const json& j) {
  if (!j.is_array()) throw std::invalid_argument("expected a vector");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i)
    v[i] = j.at(static_cast<size_t>(i)).get<double>();
  return v;
}

inline json generators_to_json(const Eigen::MatrixXd& g) {
  json cols = json::array();
  for (Eigen::Index j = 0; j < g.cols(); ++j) cols.push_back(vector_to_json(g.col(j)));
  return cols;
}

inline Eigen::MatrixXd generators_from_json(const json& j, int dim) {
  if (!j.is_array()) throw std::invalid_argument("expected a generator list");
  Eigen::MatrixXd g(dim, static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index c = 0; c < g.cols(); ++c) {
    Eigen::VectorXd col = vector_from_json(j.at(static_cast<size_t>(c)));
    if (col.size() != dim) throw std::invalid_argument("generator dimension mismatch");
    g.col(c) = col;
  }
  return g;
}

inline json zonotope_to_json(const Zonotope& z) {
  return json{{"center", vector_to_json(z.center)},
              {"generators", generators_to_json(z.generators)}};
}

inline Zonotope zonotope_from_json(const json& j) {
  Eigen::VectorXd c = vector_from_json(j.at("center"));
  return Zonotope(c, generators_from_json(j.at("generators"), static_cast<int>(c.size())));
}

inline json system_to_json(const DiscreteAffineSystem& sys) {
  json j;
  j["A"] = matrix_to_json(sys.A);
  j["B"] = matrix_to_json(sys.B);
  j["C"] = matrix_to_json(sys.C);
  j["w"] = vector_to_json(sys.w);
  j["x_lo"] = vector_to_json(sys.X.lower);
  j["x_hi"] = vector_to_json(sys.X.upper);
  j["u_lo"] = vector_to_json(sys.U.lower);
  j["u_hi"] = vector_to_json(sys.U.upper);
  j["V"] = zonotope_to_json(sys.V);
  j["continuous"] = false;
  return j;
}

inline DiscreteAffineSystem system_from_json(const json& j) {
  const bool continuous = j.value("continuous", false);
  Eigen::MatrixXd A = matrix_from_json(j.at("A"));
  const int dx = static_cast<int>(A.rows());
  Eigen::MatrixXd B = j.contains("B") ? matrix_from_json(j.at("B"), 0)
                                      : Eigen::MatrixXd(dx, 0);
  Eigen::MatrixXd C = j.contains("C") ? matrix_from_json(j.at("C"), 0)
                                      : Eigen::MatrixXd(dx, 0);
  Eigen::VectorXd w = j.contains("w") ? vector_from_json(j.at("w"))
                                      : Eigen::VectorXd::Zero(dx).eval();
  if (B.rows() == 0) B.resize(dx, 0);
  if (C.rows() == 0) C.resize(dx, 0);

  DiscreteAffineSystem sys;
  if (continuous) {
    ContinuousAffineSystem c{A, B, C, w, j.at("dt").get<double>()};
    sys = discretize(c);
  } else {
    sys.A = A;
    sys.B = B;
    sys.C = C;
    sys.w = w;
  }
  sys.X = IntervalBox(vector_from_json(j.at("x_lo")), vector_from_json(j.at("x_hi")));
  if (j.contains("u_lo"))
    sys.U = IntervalBox(vector_from_json(j.at("u_lo")), vector_from_json(j.at("u_hi")));
  sys.V = j.contains("V")
              ? zonotope_from_json(j.at("V"))
              : Zonotope(Eigen::VectorXd::Zero(sys.disturbance_dim()),
                         Eigen::MatrixXd(sys.disturbance_dim(), 0));
  sys.validate();
  return sys;
}

inline const char* to_string(LPStatus s) {
  switch (s) {
    case LPStatus::optimal: return "optimal";
    case LPStatus::infeasible: return "infeasible";
    case LPStatus::unbounded: return "unbounded";
  }
  return "?";
}

inline KernelMode mode_from_string(const std::string& s) {
  for (KernelMode m : {KernelMode::invariant, KernelMode::invariant_disturbed,
                       KernelMode::viable, KernelMode::viable_no_free,
                       KernelMode::discriminating})
    if (s == to_string(m)) return m;
  throw std::invalid_argument("unknown kernel mode: " + s);
}

inline json result_to_json(const KernelResult& r) {
  json j;
  j["status"] = to_string(r.status);
  j["mode"] = to_string(r.mode);
  j["T"] = r.problem.T;
  j["eta"] = r.problem.eta;
  j["use_phi"] = r.problem.use_phi;
  j["objective"] = r.objective_value;
  j["alpha"] = vector_to_json(r.alpha);
  j["gamma"] = vector_to_json(r.gamma);
  j["template"] = generators_to_json(r.problem.template_generators);
  json beta = json::array(), phi = json::array(), psi = json::array(),
       gf = json::array();
  for (const auto& b : r.policy.beta) beta.push_back(vector_to_json(b));
  for (const auto& p : r.policy.Phi) phi.push_back(matrix_to_json(p));
  for (const auto& p : r.policy.psi) psi.push_back(vector_to_json(p));
  for (const auto& g : r.policy.free_generators) gf.push_back(generators_to_json(g));
  j["beta"] = std::move(beta);
  j["Phi"] = std::move(phi);
  j["psi"] = std::move(psi);
  j["free_generators"] = std::move(gf);
  return j;
}

/// Rebuilds a result (and its embedded problem) from result JSON plus the
/// system it was synthesized for.
inline KernelResult result_from_json(const json& j, const DiscreteAffineSystem& sys) {
  KernelResult r;
  const std::string status = j.at("status").get<std::string>();
  if (status == "optimal")
    r.status = LPStatus::optimal;
  else if (status == "infeasible")
    r.status = LPStatus::infeasible;
  else
    throw std::invalid_argument("unknown result status: " + status);
  r.mode = mode_from_string(j.at("mode").get<std::string>());
  r.problem.system = sys;
  r.problem.T = j.at("T").get<int>();
  r.problem.eta = j.at("eta").get<double>();
  r.problem.use_phi = j.value("use_phi", true);
  r.problem.template_generators =
      generators_from_json(j.at("template"), sys.state_dim());
  r.objective_value = j.value("objective", 0.0);
  if (r.status != LPStatus::optimal) return r;

  r.alpha = vector_from_json(j.at("alpha"));
  r.gamma = vector_from_json(j.at("gamma"));
  if (r.gamma.size() != r.problem.template_generators.cols())
    throw std::invalid_argument("gamma length does not match the template");
  for (const auto& b : j.at("beta")) r.policy.beta.push_back(vector_from_json(b));
  for (const auto& p : j.at("Phi"))
    r.policy.Phi.push_back(matrix_from_json(p, static_cast<int>(
                                                   r.problem.template_generators.cols())));
  for (const auto& p : j.at("psi")) r.policy.psi.push_back(vector_from_json(p));
  if (j.contains("free_generators"))
    for (const auto& g : j.at("free_generators"))
      r.policy.free_generators.push_back(generators_from_json(g, sys.input_dim()));
  r.problem.free_generators = r.policy.free_generators;
  auto check_len = [&](size_t n, const char* what) {
    if (n != 0 && n != static_cast<size_t>(r.problem.T))
      throw std::invalid_argument(std::string("policy length mismatch for ") + what);
  };
  check_len(r.policy.beta.size(), "beta");
  check_len(r.policy.Phi.size(), "Phi");
  check_len(r.policy.psi.size(), "psi");
  check_len(r.policy.free_generators.size(), "free_generators");
  return r;
}

inline json cert_to_json(const CertReport& c) {
  json j;
  j["pass"] = c.pass;
  j["max_violation"] = c.max_violation;
  j["per_time_violations"] = c.per_time_violations;
  return j;
}

inline json polygon_to_json(const std::vector<Eigen::Vector2d>& poly) {
  json j = json::array();
  for (const auto& p : poly) j.push_back(json::array({p.x(), p.y()}));
  return j;
}

inline void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << j.dump(2) << '\n';
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  return json::parse(in);
}

inline void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  const int dx = static_cast<int>(traj.states.cols());
  const int du = static_cast<int>(traj.inputs.cols());
  const int dv = static_cast<int>(traj.disturbances.cols());
  const int T = static_cast<int>(traj.inputs.rows());
  out << 't';
  for (int i = 1; i <= dx; ++i) out << ",x" << i;
  for (int i = 1; i <= du; ++i) out << ",u" << i;
  for (int i = 1; i <= dv; ++i) out << ",v" << i;
  out << ",in_X,in_U\n";
  char buf[32];
  auto emit = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << ',' << buf;
  };
  for (int t = 0; t <= T; ++t) {
    out << t;
    for (int i = 0; i < dx; ++i) emit(traj.states(t, i));
    for (int i = 0; i < du; ++i) emit(t < T ? traj.inputs(t, i) : 0.0);
    for (int i = 0; i < dv; ++i) emit(t < T ? traj.disturbances(t, i) : 0.0);
    out << ',' << (traj.in_X[static_cast<size_t>(t)] ? 1 : 0);
    out << ',' << (t < T ? (traj.in_U[static_cast<size_t>(t)] ? 1 : 0) : 1) << '\n';
  }
}

}  // namespace zk
