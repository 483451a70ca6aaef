#include "drccmdp/benchmark.hpp"

#include <chrono>
#include <limits>
#include <cmath>
#include <sstream>

namespace drccmdp {

namespace {

VectorXd vec(std::initializer_list<double> v) {
  VectorXd out(v.size());
  int i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

MomentAmbiguity ambiguity(const VectorXd& cost, const VectorXd& diag,
                          double rho1, double rho2) {
  MomentAmbiguity a;
  a.mu = -cost;
  a.sigma = diag.asDiagonal();
  a.rho1 = rho1;
  a.rho2 = rho2;
  return a;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

}  // namespace

DrccmdpProblem machine_replacement_problem() {
  MdpSpec m;
  m.num_states = 5;
  m.actions_per_state = {2, 2, 2, 2, 2};
  m.alpha = 0.6;
  m.q = VectorXd::Constant(5, 0.2);
  m.transition = MatrixXd::Zero(10, 5);
  m.transition(m.pair_index(0, 0), 0) = 1.0;
  for (int s = 1; s < 5; ++s) {
    m.transition(m.pair_index(s, 0), 0) = 0.8;
    m.transition(m.pair_index(s, 0), s) = 0.2;
  }
  for (int s = 0; s < 4; ++s) {
    m.transition(m.pair_index(s, 1), s + 1) = 0.9;
    m.transition(m.pair_index(s, 1), s) = 0.1;
  }
  m.transition(m.pair_index(4, 1), 4) = 1.0;

  DrccmdpProblem p;
  p.mdp = m;
  p.objective = ambiguity(vec({1, 0, 1, 0, 1, 0, 4, 30, 4, 70}),
                          vec({.3, .3, .3, .3, .3, .3, 5, 2, 8, 9}), 0.1, 0.0);
  p.constraints.push_back(ambiguity(vec({1.5, 8, 1.5, 8, 1.5, 8, 5, 100, 5, 200}),
                                    vec({.5, .5, .5, .5, .5, .5, 8, 9, 8, 9}),
                                    0.1, 0.1));
  p.constraints.push_back(ambiguity(vec({0, 5, 0, 5, 0, 8, 1.5, 30, 3, 50}),
                                    vec({.4, .4, .4, .4, .4, .4, 9, 8, 8.5, 10}),
                                    0.15, 0.15));
  p.xi = vec({-40, -40});
  p.eps_hat = 0.95;
  return p;
}

DnnState machine_replacement_initial_state() {
  DnnState s;
  s.tau = VectorXd::Constant(10, 1e-3);
  s.x = vec({-8, -60});
  s.multipliers.beta = VectorXd::Constant(2, 1e-4);
  s.multipliers.chi = VectorXd::Constant(2, 1e-4);
  s.multipliers.zeta = 1e-4;
  s.multipliers.theta1 = VectorXd::Constant(5, 1e-4);
  s.multipliers.theta2 = VectorXd::Constant(5, 1e-4);
  s.multipliers.varrho = VectorXd::Constant(10, 1e-4);
  return s;
}

ScaConfig machine_replacement_sca_config() {
  ScaConfig c;
  c.h0 = vec({0.83, 0.85});
  c.n_max = 100;
  c.gamma = 0.6;
  c.stop_L = 1e-8;
  return c;
}

bool matches_replacement_pattern(const StationaryPolicy& policy, double level) {
  if (policy.size() != 5) return false;
  for (int s = 0; s < 5; ++s) {
    if (policy[s].size() != 2) return false;
    const int expected = s < 2 ? 1 : 0;
    if (!(policy[s](expected) >= level)) return false;
  }
  return true;
}

BenchmarkRun run_benchmark(const DrccmdpProblem& problem, const DnnState& z0,
                           const BenchmarkOptions& options) {
  const ConstraintBundle bundle(problem);
  BenchmarkRun run;

  auto t0 = std::chrono::steady_clock::now();
  const DnnSystem system(bundle, options.dnn);
  DnnRunOptions dopt;
  dopt.integrator = options.integrator;
  dopt.output_times = uniform_times(options.t_end, options.sample_intervals);
  run.trajectory = integrate(system, system.layout().pack(z0), options.t_end, dopt);
  run.dnn_state = system.layout().unpack(run.trajectory.z_final);
  run.dnn_policy = policy_from_occupation(run.dnn_state.tau, problem.mdp);
  run.dnn_value = bundle.f(run.dnn_state.tau);
  run.dnn_kkt = kkt_residual(run.dnn_state.tau, run.dnn_state.x,
                             run.dnn_state.multipliers, bundle);
  run.dnn_seconds = seconds_since(t0);

  t0 = std::chrono::steady_clock::now();
  run.sca = run_sca(bundle, options.sca);
  const VectorXd& sca_tau = run.sca.final_iterate.tau;
  run.sca_policy = policy_from_occupation(sca_tau, problem.mdp);
  run.sca_value = run.sca.final_iterate.V;
  run.sca_kkt = kkt_residual(sca_tau, run.sca.x, run.sca.multipliers, bundle);
  DnnState injected{sca_tau, run.sca.x, run.sca.multipliers};
  run.sca_injected_accuracy =
      accuracy(system.layout().pack(injected), bundle);
  run.sca_seconds = seconds_since(t0);

  run.groups = generate_groups(problem, options.seed, {1.0, 2.0, 3.0, 3.5},
                               options.samples_per_group);
  run.robustness = compare_solvers(problem, run.dnn_state.tau, sca_tau, run.groups);
  return run;
}

std::vector<CriterionResult> benchmark_checks(const BenchmarkRun& run) {
  std::vector<CriterionResult> out;
  auto add = [&](int id, std::string name, bool pass, const std::ostringstream& os) {
    out.push_back({id, std::move(name), pass, os.str()});
  };
  {
    std::ostringstream os;
    const double total = run.dnn_seconds + run.sca_seconds;
    const bool dnn = matches_replacement_pattern(run.dnn_policy);
    const bool sca = matches_replacement_pattern(run.sca_policy);
    os << "dnn pattern " << (dnn ? "ok" : "mismatch") << ", sca pattern "
       << (sca ? "ok" : "mismatch") << ", runtime " << total << " s";
    add(1, "policy reproduction", dnn && sca && total <= 60.0, os);
  }
  {
    std::ostringstream os;
    const double eps = run.trajectory.accuracy.back();
    os << "accuracy at t=" << run.trajectory.t.back() << " is " << eps
       << " (expected within [1e-8, 1e-5])";
    add(2, "dnn accuracy", eps >= 1e-8 && eps <= 1e-5, os);
  }
  {
    std::ostringstream os;
    const double rel = std::abs(run.dnn_value - run.sca_value) / std::abs(run.sca_value);
    os << "V_dnn " << run.dnn_value << ", V_sca " << run.sca_value
       << ", relative gap " << rel;
    add(3, "cross-solver agreement", rel <= 1e-3, os);
  }
  {
    std::ostringstream os;
    os << "dnn kkt residual " << run.dnn_kkt.max
       << ", accuracy at injected sca point " << run.sca_injected_accuracy;
    add(4, "equilibrium and kkt", run.dnn_kkt.max <= 1e-6 &&
                                      run.sca_injected_accuracy <= 1e-4,
        os);
  }
  {
    std::ostringstream os;
    double worst = -std::numeric_limits<double>::infinity();
    const auto& V = run.trajectory.lyapunov;
    for (size_t i = 1; i < V.size(); ++i) worst = std::max(worst, V[i] - V[i - 1]);
    os << "largest increase " << worst << " over " << V.size() << " samples";
    add(5, "lyapunov descent", worst <= 1e-8, os);
  }
  {
    std::ostringstream os;
    const auto& h = run.sca.history;
    double worst = -std::numeric_limits<double>::infinity();
    for (size_t i = 1; i < h.size(); ++i) worst = std::max(worst, h[i].V - h[i - 1].V);
    const double step10 = h.size() > 10 ? h[10].step_norm : h.back().step_norm;
    const bool ok = run.sca.converged && run.sca.final_iterate.step_norm < 1e-8 &&
                    static_cast<int>(h.size()) - 1 < 100 && worst <= 1e-7 &&
                    step10 < 1e-3;
    os << "converged " << run.sca.converged << " after " << h.size()
       << " iterations, final step " << run.sca.final_iterate.step_norm
       << ", step at n=10 " << step10 << ", largest V increase "
       << (h.size() > 1 ? worst : 0.0);
    add(8, "sca convergence", ok, os);
  }
  {
    std::ostringstream os;
    const auto& g = run.robustness.groups;
    const bool g1 = !g.empty() && g.front().dnn_failures == 0 && g.front().sca_failures == 0;
    const bool g4 = g.size() >= 4 && g[3].dnn_failures <= g[3].sca_failures;
    os << "failures per group (dnn/sca):";
    for (const auto& gr : g) os << " " << gr.dnn_failures << "/" << gr.sca_failures;
    add(9, "out-of-sample robustness", g1 && g4, os);
  }
  return out;
}

}  // namespace drccmdp
