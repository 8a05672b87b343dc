// zkctl: synthesize, certify, simulate, and project scaled-zonotope kernels.

#include <CLI11.hpp>

#include <zonokernel/control.hpp>
#include <zonokernel/json_io.hpp>
#include <zonokernel/kernel.hpp>
#include <zonokernel/models.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace zk;

namespace {

struct KernelFlags {
  std::string mode;
  int horizon = -1;
  double eta = -1.0;
  int generators = -1;
  unsigned seed = 0;
  std::string out = "out";
  double prune_threshold = -1.0;
  bool no_phi = false;
  bool no_free = false;
};

void add_kernel_flags(CLI::App* cmd, KernelFlags& f) {
  cmd->add_option("--mode", f.mode, "kernel mode");
  cmd->add_option("--horizon", f.horizon, "time horizon T");
  cmd->add_option("--eta", f.eta, "free-input objective weight");
  cmd->add_option("--generators", f.generators, "template generator count");
  cmd->add_option("--seed", f.seed, "random seed");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--prune", f.prune_threshold, "prune generators with gamma below this");
  cmd->add_flag("--no-phi", f.no_phi, "disable the state-feedback columns Phi(t)");
  cmd->add_flag("--no-free", f.no_free, "disable the free input generators");
}

Eigen::MatrixXd template_from_config(const json& spec, int dx, unsigned seed) {
  if (spec.is_array()) return generators_from_json(spec, dx);
  const std::string basis = spec.at("basis").get<std::string>();
  if (basis == "axes") return models::axes_basis(dx);
  if (basis == "half_circle_fan") return models::half_circle_fan(spec.at("count").get<int>());
  if (basis == "random_unit")
    return models::random_unit_basis(dx, spec.at("count").get<int>(),
                                     spec.value("seed", seed));
  throw std::invalid_argument("unknown template basis: " + basis);
}

/// Runs synthesis and writes result.json, cert.json, and projections/.
/// Returns the process exit code.
int run_kernel(KernelProblem problem, KernelMode mode, const KernelFlags& flags) {
  if (flags.no_phi) problem.use_phi = false;
  if (flags.no_free) problem.free_generators.clear();
  if (flags.horizon > 0) problem.T = flags.horizon;
  if (flags.eta >= 0.0) problem.eta = flags.eta;
  if (!problem.free_generators.empty() &&
      static_cast<int>(problem.free_generators.size()) != problem.T)
    problem.free_generators.resize(static_cast<size_t>(problem.T),
                                   problem.free_generators.back());

  KernelResult result = solve_kernel(problem, mode);
  if (result.status != LPStatus::optimal) {
    std::cout << "no set found (status: " << to_string(result.status) << ")\n";
    return 2;
  }
  if (flags.prune_threshold >= 0.0) result = prune(result, flags.prune_threshold);
  CertReport cert = certify(result.problem, result);

  fs::create_directories(flags.out);
  write_json_file((fs::path(flags.out) / "result.json").string(), result_to_json(result));
  write_json_file((fs::path(flags.out) / "cert.json").string(), cert_to_json(cert));
  write_json_file((fs::path(flags.out) / "system.json").string(),
                  system_to_json(result.problem.system));

  Zonotope set = scale(result.problem.template_generators, result.gamma, result.alpha);
  fs::path proj_dir = fs::path(flags.out) / "projections";
  fs::create_directories(proj_dir);
  for (int i = 0; i < set.dim(); ++i)
    for (int j = i + 1; j < set.dim(); ++j) {
      std::string name = "proj_" + std::to_string(i + 1) + "_" + std::to_string(j + 1) + ".json";
      write_json_file((proj_dir / name).string(),
                      polygon_to_json(project_polygon(set, {i, j})));
    }

  std::cout << "status: optimal  objective: " << result.objective_value
            << "  certified: " << (cert.pass ? "yes" : "no")
            << "  max violation: " << cert.max_violation << "\n";
  return cert.pass ? 0 : 1;
}

KernelProblem problem_from_config(const json& cfg, const KernelFlags& flags,
                                  KernelMode& mode) {
  KernelProblem p;
  const json& sys = cfg.at("system");
  p.system = sys.is_string() ? system_from_json(read_json_file(sys.get<std::string>()))
                             : system_from_json(sys);
  p.T = cfg.value("T", 1);
  p.eta = cfg.value("eta", 1.0);
  p.use_phi = cfg.value("use_phi", true);
  p.template_generators =
      template_from_config(cfg.at("template"), p.system.state_dim(), flags.seed);
  if (cfg.contains("free_generators")) {
    const json& gf = cfg.at("free_generators");
    if (gf.is_object() && gf.value("identity", false)) {
      p.free_generators.assign(
          static_cast<size_t>(p.T),
          Eigen::MatrixXd::Identity(p.system.input_dim(), p.system.input_dim()));
    } else {
      for (const auto& g : gf)
        p.free_generators.push_back(generators_from_json(g, p.system.input_dim()));
    }
  }
  std::string mode_name = cfg.value("mode", std::string("invariant"));
  if (!flags.mode.empty()) mode_name = flags.mode;
  mode = mode_from_string(mode_name);
  return p;
}

int run_demo(const std::string& which, const KernelFlags& flags) {
  KernelProblem p;
  KernelMode mode;
  if (which == "rotation") {
    mode = flags.mode.empty() ? KernelMode::invariant : mode_from_string(flags.mode);
    p.system = models::rotation_system(mode == KernelMode::invariant_disturbed ||
                                       mode == KernelMode::discriminating);
    p.template_generators =
        models::half_circle_fan(flags.generators > 0 ? flags.generators : 9);
    p.T = 32;
  } else if (which == "di") {
    mode = flags.mode.empty() ? KernelMode::viable : mode_from_string(flags.mode);
    p.system = models::double_integrator_system();
    // Eight generators equally spaced strictly inside the north-west quadrant.
    p.template_generators =
        models::pair_fan(2, 0, 1, flags.generators > 0 ? flags.generators : 8);
    p.T = 30;
    if (mode != KernelMode::viable_no_free)
      p.free_generators.assign(30, Eigen::MatrixXd::Identity(1, 1));
  } else if (which == "quadrotor") {
    mode = flags.mode.empty() ? KernelMode::discriminating : mode_from_string(flags.mode);
    p.system = models::quadrotor_system();
    p.template_generators = models::quadrotor_template();
    p.T = 40;
  } else {
    throw std::invalid_argument("unknown demo: " + which);
  }
  return run_kernel(std::move(p), mode, flags);
}

int run_certify(const std::string& system_file, const std::string& result_file) {
  DiscreteAffineSystem sys = system_from_json(read_json_file(system_file));
  KernelResult result = result_from_json(read_json_file(result_file), sys);
  if (result.status != LPStatus::optimal) {
    std::cerr << "certify: result status is not optimal\n";
    return 1;
  }
  CertReport cert = certify(result.problem, result);
  std::cout << cert_to_json(cert).dump(2) << "\n";
  return cert.pass ? 0 : 1;
}

int run_project(const std::string& result_file, const std::string& out_dir) {
  json j = read_json_file(result_file);
  Eigen::VectorXd alpha = vector_from_json(j.at("alpha"));
  Eigen::VectorXd gamma = vector_from_json(j.at("gamma"));
  Eigen::MatrixXd tmpl =
      generators_from_json(j.at("template"), static_cast<int>(alpha.size()));
  Zonotope set = scale(tmpl, gamma, alpha);
  fs::create_directories(out_dir);
  for (int i = 0; i < set.dim(); ++i)
    for (int k = i + 1; k < set.dim(); ++k) {
      std::string name = "proj_" + std::to_string(i + 1) + "_" + std::to_string(k + 1) + ".json";
      write_json_file((fs::path(out_dir) / name).string(),
                      polygon_to_json(project_polygon(set, {i, k})));
    }
  return 0;
}

int run_simulate(const std::string& system_file, const std::string& result_file,
                 int rollouts, int horizon, unsigned seed, const std::string& out_dir,
                 const std::string& disturbance, const std::vector<double>& u_des_values,
                 const std::string& x0_mode) {
  DiscreteAffineSystem sys = system_from_json(read_json_file(system_file));
  KernelResult result = result_from_json(read_json_file(result_file), sys);
  if (result.status != LPStatus::optimal)
    throw std::invalid_argument("simulate: result status is not optimal");
  if (!certify(result.problem, result).pass)
    throw std::invalid_argument("simulate: result fails certification");

  DisturbanceSource src = DisturbanceSource::corner_of_v;
  if (disturbance == "none") src = DisturbanceSource::none;
  else if (disturbance == "random") src = DisturbanceSource::random_in_v;
  else if (disturbance != "corner")
    throw std::invalid_argument("unknown disturbance source: " + disturbance);

  const int T = horizon > 0 ? std::min(horizon, result.problem.T) : result.problem.T;
  const int du = sys.input_dim();
  Eigen::VectorXd u_des = Eigen::VectorXd::Zero(du);
  for (int i = 0; i < du && i < static_cast<int>(u_des_values.size()); ++i)
    u_des[i] = u_des_values[static_cast<size_t>(i)];
  auto u_des_signal = [&](int) { return u_des; };

  fs::create_directories(out_dir);
  Zonotope initial = scale(result.problem.template_generators, result.gamma, result.alpha);
  std::mt19937_64 rng(seed);
  auto coeff = [&](bool vertex) {
    double u = static_cast<double>(rng() >> 11) * 0x1.0p-53 * 2.0 - 1.0;
    return vertex ? (u >= 0 ? 1.0 : -1.0) : u;
  };

  int state_violations = 0, input_violations = 0;
  double worst_state = kInf, worst_input = kInf;
  for (int r = 0; r < rollouts; ++r) {
    Eigen::VectorXd lambda(initial.count());
    for (int k = 0; k < lambda.size(); ++k)
      lambda[k] = x0_mode == "center" ? 0.0 : coeff(x0_mode == "vertex");
    Eigen::VectorXd x0 = initial.center + initial.generators * lambda;
    auto traj = simulate(sys, result, x0, u_des_signal, src, T, seed + 1 + static_cast<unsigned>(r));
    auto rep = validate(traj, sys.X, sys.U);
    for (bool ok : rep.state_ok) state_violations += ok ? 0 : 1;
    for (bool ok : rep.input_ok) input_violations += ok ? 0 : 1;
    worst_state = std::min(worst_state, rep.worst_state_margin);
    worst_input = std::min(worst_input, rep.worst_input_margin);
    char name[32];
    std::snprintf(name, sizeof name, "traj_%03d.csv", r);
    std::ofstream csv(fs::path(out_dir) / name, std::ios::binary);
    write_trajectory_csv(csv, traj);
  }

  json summary;
  summary["rollouts"] = rollouts;
  summary["horizon"] = T;
  summary["seed"] = seed;
  summary["disturbance"] = disturbance;
  summary["state_violations"] = state_violations;
  summary["input_violations"] = input_violations;
  if (rollouts > 0) {
    summary["worst_state_margin"] = worst_state;
    summary["worst_input_margin"] = worst_input;
  }
  write_json_file((fs::path(out_dir) / "summary.json").string(), summary);
  std::cout << "rollouts: " << rollouts << "  state violations: " << state_violations
            << "  input violations: " << input_violations << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"scaled-zonotope kernel synthesis"};
  app.require_subcommand(1);

  KernelFlags kflags;
  std::string config_file;
  auto* kernel_cmd = app.add_subcommand("kernel", "synthesize a kernel from a config file");
  kernel_cmd->add_option("config", config_file, "run config JSON")->required();
  add_kernel_flags(kernel_cmd, kflags);

  KernelFlags dflags;
  std::string demo_name;
  auto* demo_cmd = app.add_subcommand("demo", "run a built-in model");
  demo_cmd->add_option("name", demo_name, "rotation | di | quadrotor")->required();
  add_kernel_flags(demo_cmd, dflags);

  std::string cert_system, cert_result;
  auto* cert_cmd = app.add_subcommand("certify", "re-certify a stored result");
  cert_cmd->add_option("system", cert_system, "system JSON")->required();
  cert_cmd->add_option("result", cert_result, "result JSON")->required();

  std::string sim_system, sim_result, sim_out = "sim_out", sim_disturbance = "corner";
  std::string sim_x0 = "vertex";
  int sim_rollouts = 0, sim_horizon = -1;
  unsigned sim_seed = 0;
  std::vector<double> sim_u_des;
  auto* sim_cmd = app.add_subcommand("simulate", "closed-loop rollouts from a certified result");
  sim_cmd->add_option("system", sim_system, "system JSON")->required();
  sim_cmd->add_option("result", sim_result, "result JSON")->required();
  sim_cmd->add_option("--rollouts", sim_rollouts, "number of rollouts");
  sim_cmd->add_option("--horizon", sim_horizon, "rollout length (default: full)");
  sim_cmd->add_option("--seed", sim_seed, "random seed");
  sim_cmd->add_option("--out", sim_out, "output directory");
  sim_cmd->add_option("--disturbance", sim_disturbance, "none | random | corner");
  sim_cmd->add_option("--u-des", sim_u_des, "constant desired input");
  sim_cmd->add_option("--x0", sim_x0, "initial state sampling: vertex | random | center");

  std::string proj_result, proj_out = "projections";
  auto* proj_cmd = app.add_subcommand("project", "emit 2-D projection polygons");
  proj_cmd->add_option("result", proj_result, "result JSON")->required();
  proj_cmd->add_option("--out", proj_out, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*kernel_cmd) {
      KernelMode mode;
      KernelProblem p = problem_from_config(read_json_file(config_file), kflags, mode);
      return run_kernel(std::move(p), mode, kflags);
    }
    if (*demo_cmd) return run_demo(demo_name, dflags);
    if (*cert_cmd) return run_certify(cert_system, cert_result);
    if (*sim_cmd)
      return run_simulate(sim_system, sim_result, sim_rollouts, sim_horizon, sim_seed,
                          sim_out, sim_disturbance, sim_u_des, sim_x0);
    if (*proj_cmd) return run_project(proj_result, proj_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
