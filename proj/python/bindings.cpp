#include <optional>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "drccmdp/benchmark.hpp"
#include "drccmdp/io.hpp"

namespace py = pybind11;
using namespace drccmdp;

namespace {

py::dict multipliers_dict(const Multipliers& m) {
  py::dict d;
  d["beta"] = m.beta;
  d["chi"] = m.chi;
  d["zeta"] = m.zeta;
  d["theta1"] = m.theta1;
  d["theta2"] = m.theta2;
  d["varrho"] = m.varrho;
  return d;
}

py::dict kkt_dict(const KktReport& k) {
  py::dict d;
  d["stationarity_tau"] = k.stationarity_tau;
  d["stationarity_x"] = k.stationarity_x;
  d["complementarity"] = k.complementarity;
  d["dual_sign"] = k.dual_sign;
  d["primal"] = k.primal;
  d["max"] = k.max;
  return d;
}

py::dict solve_dnn(const DrccmdpProblem& problem, double t_end, int samples,
                   const std::string& method, double rtol, double atol, double kappa,
                   double x_margin,
                   const std::optional<DnnState>& initial_state) {
  const ConstraintBundle bundle(problem);
  DnnOptions dopt;
  dopt.kappa = kappa;
  dopt.x_margin = x_margin;
  const DnnSystem system(bundle, dopt);
  DnnRunOptions ropt;
  ropt.integrator.method = ode_method_from_string(method);
  ropt.integrator.rtol = rtol;
  ropt.integrator.atol = atol;
  ropt.output_times = uniform_times(t_end, samples);
  ropt.record_events = false;
  Trajectory tr;
  {
    py::gil_scoped_release release;
    const VectorXd start =
        system.layout().pack(initial_state ? *initial_state : default_initial_state(problem));
    tr = integrate(system, start, t_end, ropt);
  }
  const DnnState z = system.layout().unpack(tr.z_final);
  py::dict d;
  d["tau"] = z.tau;
  d["x"] = z.x;
  d["multipliers"] = multipliers_dict(z.multipliers);
  d["objective"] = bundle.f(z.tau);
  d["accuracy"] = tr.accuracy.back();
  d["kkt"] = kkt_dict(kkt_residual(z.tau, z.x, z.multipliers, bundle));
  d["policy"] = policy_from_occupation(z.tau, problem.mdp);
  d["t"] = tr.t;
  d["accuracy_history"] = tr.accuracy;
  d["objective_history"] = tr.objective;
  d["lyapunov_history"] = tr.lyapunov;
  return d;
}

py::dict solve_sca(const DrccmdpProblem& problem, const VectorXd& h0, int n_max,
                   double gamma, double stop_L) {
  const ConstraintBundle bundle(problem);
  ScaConfig cfg;
  cfg.h0 = h0;
  cfg.n_max = n_max;
  cfg.gamma = gamma;
  cfg.stop_L = stop_L;
  ScaResult r;
  {
    py::gil_scoped_release release;
    r = run_sca(bundle, cfg);
  }
  const ScaIterate& last = r.final_iterate;
  py::dict d;
  d["tau"] = last.tau;
  d["h"] = last.h;
  d["x"] = r.x;
  d["multipliers"] = multipliers_dict(r.multipliers);
  d["objective"] = bundle.f(last.tau);
  d["converged"] = r.converged;
  d["iterations"] = static_cast<int>(r.history.size());
  d["kkt"] = kkt_dict(kkt_residual(last.tau, r.x, r.multipliers, bundle));
  d["policy"] = policy_from_occupation(last.tau, problem.mdp);
  std::vector<double> V, step;
  for (const auto& it : r.history) {
    V.push_back(it.V);
    step.push_back(it.step_norm);
  }
  d["V_history"] = V;
  d["step_history"] = step;
  return d;
}

py::dict benchmark(std::uint64_t seed) {
  BenchmarkOptions opt;
  opt.seed = seed;
  BenchmarkRun run;
  {
    py::gil_scoped_release release;
    run = run_benchmark(machine_replacement_problem(), machine_replacement_initial_state(), opt);
  }
  py::list criteria;
  for (const auto& c : benchmark_checks(run)) {
    py::dict e;
    e["id"] = c.id;
    e["name"] = c.name;
    e["pass"] = c.pass;
    e["detail"] = c.detail;
    criteria.append(e);
  }
  py::dict d;
  d["dnn_objective"] = run.dnn_value;
  d["sca_objective"] = run.sca_value;
  d["dnn_policy"] = run.dnn_policy;
  d["sca_policy"] = run.sca_policy;
  d["dnn_accuracy"] = run.trajectory.accuracy.back();
  d["criteria"] = criteria;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Distributionally robust chance-constrained MDP solvers";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<SolverError>(m, "SolverError", PyExc_RuntimeError);

  py::class_<MdpSpec>(m, "MdpSpec")
      .def(py::init<>())
      .def_readwrite("num_states", &MdpSpec::num_states)
      .def_readwrite("actions_per_state", &MdpSpec::actions_per_state)
      .def_readwrite("transition", &MdpSpec::transition)
      .def_readwrite("q", &MdpSpec::q)
      .def_readwrite("alpha", &MdpSpec::alpha)
      .def_property_readonly("num_pairs", &MdpSpec::num_pairs)
      .def("pair_index", &MdpSpec::pair_index);

  py::class_<MomentAmbiguity>(m, "MomentAmbiguity")
      .def(py::init<>())
      .def_readwrite("mu", &MomentAmbiguity::mu)
      .def_readwrite("sigma", &MomentAmbiguity::sigma)
      .def_readwrite("rho1", &MomentAmbiguity::rho1)
      .def_readwrite("rho2", &MomentAmbiguity::rho2);

  py::class_<DrccmdpProblem>(m, "Problem")
      .def(py::init<>())
      .def_readwrite("mdp", &DrccmdpProblem::mdp)
      .def_readwrite("objective", &DrccmdpProblem::objective)
      .def_readwrite("constraints", &DrccmdpProblem::constraints)
      .def_readwrite("xi", &DrccmdpProblem::xi)
      .def_readwrite("eps_hat", &DrccmdpProblem::eps_hat);

  py::class_<Multipliers>(m, "Multipliers")
      .def(py::init<>())
      .def_readwrite("beta", &Multipliers::beta)
      .def_readwrite("chi", &Multipliers::chi)
      .def_readwrite("zeta", &Multipliers::zeta)
      .def_readwrite("theta1", &Multipliers::theta1)
      .def_readwrite("theta2", &Multipliers::theta2)
      .def_readwrite("varrho", &Multipliers::varrho);

  py::class_<DnnState>(m, "DnnState")
      .def(py::init<>())
      .def_readwrite("tau", &DnnState::tau)
      .def_readwrite("x", &DnnState::x)
      .def_readwrite("multipliers", &DnnState::multipliers);

  m.def("machine_replacement_problem", &machine_replacement_problem);
  m.def("machine_replacement_initial_state", &machine_replacement_initial_state);
  m.def("default_initial_state", &default_initial_state, py::arg("problem"));
  m.def("load_problem", [](const std::string& path) { return load_problem_file(path).problem; },
        py::arg("path"));
  m.def("validate_mdp", [](const MdpSpec& s) { return mdp_violations(s); });

  m.def("occupation_from_policy", &occupation_from_policy, py::arg("policy"), py::arg("mdp"));
  m.def("policy_from_occupation", &policy_from_occupation, py::arg("tau"), py::arg("mdp"));
  m.def("occupation_residual", &occupation_residual, py::arg("tau"), py::arg("mdp"));

  m.def("standard_normal_cdf", &standard_normal_cdf);
  m.def("joint_satisfaction_probability", &joint_satisfaction_probability, py::arg("tau"),
        py::arg("means"), py::arg("covariances"), py::arg("xi"));

  m.def("solve_dnn", &solve_dnn, py::arg("problem"), py::arg("t_end") = 2000.0,
        py::arg("samples") = 2000, py::arg("method") = "rosenbrock4", py::arg("rtol") = 1e-8,
        py::arg("atol") = 1e-10, py::arg("kappa") = 1.0, py::arg("x_margin") = 1e-3,
        py::arg("initial_state") = std::nullopt);
  m.def("solve_sca", &solve_sca, py::arg("problem"), py::arg("h0"), py::arg("n_max") = 100,
        py::arg("gamma") = 0.6, py::arg("L") = 1e-8);
  m.def("run_benchmark", &benchmark, py::arg("seed") = kDefaultSeed);
}
