// Command-line front end: solve, benchmark, validate.

#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>

#include "CLI11.hpp"

#include "drccmdp/benchmark.hpp"
#include "drccmdp/io.hpp"

namespace fs = std::filesystem;
using namespace drccmdp;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kConfig = 2, kSolver = 3, kAcceptance = 4 };

constexpr const char* kBuiltinName = "machine_replacement";
constexpr const char* kOutputEnv = "DRCCMDP_OUTPUT_DIR";

struct SolverFlags {
  double t_end = 2000.0;
  int samples = 2000;
  std::string integrator = "rosenbrock4";
  double rtol = 1e-8;
  double atol = 1e-10;
  double x_margin = 1e-3;
  double kappa = 1.0;
  double accuracy_tol = 1e-6;
  std::vector<double> h0;
  double gamma = 0.6;
  int n_max = 100;
  double stop_L = 1e-8;
  std::uint64_t seed = kDefaultSeed;
  std::string out;
};

void add_solver_flags(CLI::App* app, SolverFlags& f) {
  app->add_option("--t-end", f.t_end, "DNN integration horizon")->check(CLI::NonNegativeNumber);
  app->add_option("--samples", f.samples, "Trajectory sample intervals")->check(CLI::PositiveNumber);
  app->add_option("--integrator", f.integrator, "rosenbrock4 or rk45")
      ->check(CLI::IsMember({"rosenbrock4", "rk45"}));
  app->add_option("--rtol", f.rtol, "Relative tolerance")->check(CLI::PositiveNumber);
  app->add_option("--atol", f.atol, "Absolute tolerance")->check(CLI::PositiveNumber);
  app->add_option("--x-margin", f.x_margin, "Keep x <= -margin while integrating")
      ->check(CLI::PositiveNumber);
  app->add_option("--kappa", f.kappa, "DNN time scale")->check(CLI::PositiveNumber);
  app->add_option("--h0", f.h0, "SCA starting point")->delimiter(',');
  app->add_option("--gamma", f.gamma, "SCA step size")->check(CLI::Range(0.0, 1.0));
  app->add_option("--n-max", f.n_max, "SCA iteration limit")->check(CLI::PositiveNumber);
  app->add_option("--L", f.stop_L, "SCA stopping threshold")->check(CLI::PositiveNumber);
  app->add_option("--seed", f.seed, "Seed for out-of-sample groups");
  app->add_option("--out", f.out, "Output directory (default $DRCCMDP_OUTPUT_DIR or ./drccmdp_out)");
}

fs::path output_dir(const SolverFlags& f) {
  fs::path dir = f.out;
  if (dir.empty()) {
    const char* env = std::getenv(kOutputEnv);
    dir = env && *env ? fs::path(env) : fs::path("drccmdp_out");
  }
  fs::create_directories(dir);
  return dir;
}

ProblemFile load_problem(const std::string& name) {
  if (name == kBuiltinName) {
    ProblemFile f;
    f.problem = machine_replacement_problem();
    f.initial_state = machine_replacement_initial_state();
    f.sca = machine_replacement_sca_config();
    return f;
  }
  if (!fs::exists(name)) throw ConfigError("problem file not found: " + name);
  return load_problem_file(name);
}

IntegratorOptions integrator_options(const SolverFlags& f) {
  IntegratorOptions o;
  o.method = ode_method_from_string(f.integrator);
  o.rtol = f.rtol;
  o.atol = f.atol;
  return o;
}

ScaConfig sca_config(const SolverFlags& f, const ProblemFile& pf) {
  ScaConfig c = pf.sca.value_or(ScaConfig{});
  if (!f.h0.empty()) c.h0 = Eigen::Map<const VectorXd>(f.h0.data(), f.h0.size());
  if (c.h0.size() == 0)
    c.h0 = VectorXd::Constant(pf.problem.num_constraints(),
                              0.5 * (1.0 + std::pow(pf.problem.eps_hat,
                                                    1.0 / pf.problem.num_constraints())));
  c.gamma = f.gamma;
  c.n_max = f.n_max;
  c.stop_L = f.stop_L;
  return c;
}

void print_policy(const std::string& label, const StationaryPolicy& policy) {
  std::cout << label << " policy:\n";
  for (size_t s = 0; s < policy.size(); ++s) {
    std::cout << "  state " << s + 1 << ":";
    for (int a = 0; a < policy[s].size(); ++a)
      std::cout << " " << std::setprecision(9) << policy[s](a);
    std::cout << "\n";
  }
}

int cmd_validate(const std::string& name) {
  const ProblemFile pf = load_problem(name);
  const auto violations = problem_violations(pf.problem);
  if (!violations.empty()) {
    std::cerr << violations.size() << " violation(s):\n";
    for (const auto& v : violations) std::cerr << "  " << v << "\n";
    return kConfig;
  }
  const ConstraintCounts c = reformulate(pf.problem).counts();
  std::cout << "states " << c.omega << "\n"
            << "state-action pairs " << c.tau << "\n"
            << "constraints " << c.phi << "\n"
            << "z-dimension " << c.state_dimension() << "\n";
  return kOk;
}

int cmd_solve(const std::string& name, const std::string& solver,
              const SolverFlags& f) {
  const ProblemFile pf = load_problem(name);
  validate_problem(pf.problem);
  const ConstraintBundle bundle(pf.problem);
  const fs::path dir = output_dir(f);
  Json summary;
  summary["problem"] = name;
  bool ok = true;
  double v_dnn = 0.0, v_sca = 0.0;

  if (solver == "dnn" || solver == "both") {
    DnnOptions dopt;
    dopt.kappa = f.kappa;
    dopt.x_margin = f.x_margin;
    const DnnSystem sys(bundle, dopt);
    const DnnState z0 = pf.initial_state.value_or(default_initial_state(pf.problem));
    DnnRunOptions ropt;
    ropt.integrator = integrator_options(f);
    ropt.output_times = uniform_times(f.t_end, f.samples);
    const Trajectory tr = integrate(sys, sys.layout().pack(z0), f.t_end, ropt);
    const DnnState s = sys.layout().unpack(tr.z_final);
    SolutionRecord rec{"dnn", s.tau, s.x, s.multipliers, bundle.f(s.tau),
                       policy_from_occupation(s.tau, pf.problem.mdp)};
    save_solution((dir / "solution_dnn.json").string(), rec);
    write_csv((dir / "trajectory.csv").string(), trajectory_table(tr));
    const double eps = tr.accuracy.back();
    const KktReport kkt = kkt_residual(s.tau, s.x, s.multipliers, bundle);
    v_dnn = rec.objective;
    summary["dnn"] = {{"objective", rec.objective},
                      {"accuracy", eps},
                      {"kkt_residual", kkt.max},
                      {"t_final", tr.t_final},
                      {"accepted_steps", tr.stats.accepted},
                      {"rejected_steps", tr.stats.rejected},
                      {"active_set_events", tr.events.size()}};
    print_policy("dnn", rec.policy);
    std::cout << "dnn objective " << std::setprecision(10) << rec.objective
              << ", accuracy " << eps << "\n";
    if (!(eps <= f.accuracy_tol)) {
      std::cerr << "dnn: accuracy " << eps << " above " << f.accuracy_tol << "\n";
      ok = false;
    }
  }
  if (solver == "sca" || solver == "both") {
    const ScaResult r = run_sca(bundle, sca_config(f, pf));
    const VectorXd& tau = r.final_iterate.tau;
    SolutionRecord rec{"sca", tau, r.x, r.multipliers, r.final_iterate.V,
                       policy_from_occupation(tau, pf.problem.mdp)};
    save_solution((dir / "solution_sca.json").string(), rec);
    write_csv((dir / "sca_history.csv").string(), sca_history_table(r.history));
    v_sca = rec.objective;
    summary["sca"] = {{"objective", rec.objective},
                      {"iterations", r.history.size()},
                      {"converged", r.converged},
                      {"final_step", r.final_iterate.step_norm},
                      {"kkt_residual",
                       kkt_residual(tau, r.x, r.multipliers, bundle).max}};
    print_policy("sca", rec.policy);
    std::cout << "sca objective " << std::setprecision(10) << rec.objective
              << ", iterations " << r.history.size() << "\n";
    if (!r.converged) {
      std::cerr << "sca: no convergence within n_max\n";
      ok = false;
    }
  }
  if (solver == "both") {
    const double rel = std::abs(v_dnn - v_sca) / std::abs(v_sca);
    summary["relative_gap"] = rel;
    std::cout << "relative objective gap " << rel << "\n";
  }
  write_json((dir / "summary.json").string(), summary);
  return ok ? kOk : kSolver;
}

int cmd_benchmark(const SolverFlags& f) {
  BenchmarkOptions opt;
  opt.t_end = f.t_end;
  opt.sample_intervals = f.samples;
  opt.integrator = integrator_options(f);
  opt.dnn.kappa = f.kappa;
  opt.dnn.x_margin = f.x_margin;
  ProblemFile pf = load_problem(kBuiltinName);
  opt.sca = sca_config(f, pf);
  opt.seed = f.seed;
  const BenchmarkRun run =
      run_benchmark(pf.problem, *pf.initial_state, opt);
  const fs::path dir = output_dir(f);
  const ConstraintBundle bundle(pf.problem);

  save_solution((dir / "solution_dnn.json").string(),
                {"dnn", run.dnn_state.tau, run.dnn_state.x,
                 run.dnn_state.multipliers, run.dnn_value, run.dnn_policy});
  save_solution((dir / "solution_sca.json").string(),
                {"sca", run.sca.final_iterate.tau, run.sca.x, run.sca.multipliers,
                 run.sca_value, run.sca_policy});
  write_csv((dir / "trajectory.csv").string(), trajectory_table(run.trajectory));
  write_csv((dir / "sca_history.csv").string(), sca_history_table(run.sca.history));
  write_csv((dir / "oos_dnn.csv").string(), robustness_table(run.robustness, true));
  write_csv((dir / "oos_sca.csv").string(), robustness_table(run.robustness, false));

  const auto checks = benchmark_checks(run);
  Json summary;
  summary["seed"] = f.seed;
  summary["dnn"] = {{"objective", run.dnn_value},
                    {"accuracy", run.trajectory.accuracy.back()},
                    {"kkt_residual", run.dnn_kkt.max},
                    {"seconds", run.dnn_seconds},
                    {"accepted_steps", run.trajectory.stats.accepted},
                    {"rejected_steps", run.trajectory.stats.rejected}};
  summary["sca"] = {{"objective", run.sca_value},
                    {"iterations", run.sca.history.size()},
                    {"kkt_residual", run.sca_kkt.max},
                    {"injected_accuracy", run.sca_injected_accuracy},
                    {"seconds", run.sca_seconds}};
  bool all = true;
  Json crit = Json::array();
  print_policy("dnn", run.dnn_policy);
  print_policy("sca", run.sca_policy);
  for (const auto& c : checks) {
    std::cout << "[" << (c.pass ? "PASS" : "FAIL") << "] " << c.id << " "
              << c.name << ": " << c.detail << "\n";
    crit.push_back({{"id", c.id}, {"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
    all = all && c.pass;
  }
  summary["criteria"] = crit;
  write_json((dir / "summary.json").string(), summary);
  std::cout << "artifacts written to " << dir.string() << "\n";
  return all ? kOk : kAcceptance;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint distributionally robust chance-constrained MDP solvers"};
  app.require_subcommand(1);

  SolverFlags solve_flags, bench_flags;
  std::string problem = kBuiltinName, solver = "both", validate_target;

  auto* solve = app.add_subcommand("solve", "Solve a problem with the DNN and/or SCA solver");
  solve->add_option("--problem", problem, "Problem file or 'machine_replacement'");
  solve->add_option("--solver", solver, "dnn, sca or both")
      ->check(CLI::IsMember({"dnn", "sca", "both"}));
  solve->add_option("--accuracy-tol", solve_flags.accuracy_tol,
                    "DNN accuracy required for a zero exit status");
  add_solver_flags(solve, solve_flags);

  auto* bench = app.add_subcommand("benchmark", "Run the machine replacement study");
  add_solver_flags(bench, bench_flags);

  auto* validate = app.add_subcommand("validate", "Check a problem file");
  validate->add_option("problem", validate_target, "Problem file or 'machine_replacement'")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*solve) return cmd_solve(problem, solver, solve_flags);
    if (*bench) return cmd_benchmark(bench_flags);
    if (*validate) return cmd_validate(validate_target);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const ValidationError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return kSolver;
  }
  return kUsage;
}
