#include "drccmdp/sca_solver.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace drccmdp {

void validate_sca_config(const ScaConfig& c, const DrccmdpProblem& problem) {
  const int K = problem.num_constraints();
  if (c.h0.size() != K)
    throw ValidationError("h0 has length " + std::to_string(c.h0.size()) +
                          ", expected " + std::to_string(K));
  if (c.h0.minCoeff() <= 0.0 || c.h0.maxCoeff() >= 1.0)
    throw ValidationError("h0 must lie strictly inside (0, 1)");
  if (c.n_max < 1) throw ValidationError("n_max must be positive");
  if (!(c.gamma > 0.0 && c.gamma < 1.0))
    throw ValidationError("gamma must lie in (0, 1)");
  if (!(c.stop_L > 0.0)) throw ValidationError("L must be positive");
}

TauSubproblemResult solve_tau_subproblem(const VectorXd& h,
                                         const ConstraintBundle& bundle,
                                         const KernelOptions& options) {
  const int K = bundle.num_constraints();
  const int L = bundle.num_pairs();
  if (h.size() != K) throw ValidationError("h has wrong length");
  if (h.minCoeff() <= 0.0 || h.maxCoeff() >= 1.0)
    throw ValidationError("h must lie strictly inside (0, 1)");
  const VectorXd x = h.array().log();

  ConvexProgram p;
  p.n = L;
  p.objective.value = [&](const VectorXd& t) { return bundle.f(t); };
  p.objective.gradient = [&](const VectorXd& t) { return bundle.grad_f(t); };
  p.objective.hessian = [&](const VectorXd& t) { return bundle.hess_f(t); };
  for (int k = 0; k < K; ++k) {
    const double xk = x(k);
    const MomentAmbiguity& amb = bundle.problem().constraints[k];
    ConvexFunction c;
    c.value = [&bundle, k, xk](const VectorXd& t) { return bundle.phi(k, t, xk); };
    c.gradient = [&bundle, k, xk](const VectorXd& t) {
      return bundle.grad_phi(k, t, xk).d_tau;
    };
    c.hessian = [&amb, xk](const VectorXd& t) {
      return hess_phi_k_tau(t, xk, amb);
    };
    p.inequalities.push_back(std::move(c));
  }
  for (int i = 0; i < L; ++i)
    p.inequalities.push_back(affine_function(-VectorXd::Unit(L, i), 0.0));
  p.A = bundle.M();
  p.b = bundle.b();

  const VectorXd start =
      occupation_from_policy(uniform_policy(bundle.mdp()), bundle.mdp());
  TauSubproblemResult r;
  try {
    r.kernel = convex_kernel(p, start, options);
  } catch (const SolverError& e) {
    std::ostringstream os;
    os << "tau-subproblem failed at h = (" << h.transpose() << "): " << e.what();
    VectorXd phi(K);
    for (int k = 0; k < K; ++k) phi(k) = bundle.phi(k, start, x(k));
    Eigen::Index worst;
    phi.maxCoeff(&worst);
    os << "; most violated robust constraint at the start: phi[" << worst
       << "] = " << phi(worst);
    throw InfeasibleError(os.str());
  }
  r.tau = r.kernel.x;
  r.theta = r.kernel.lambda.head(K);
  r.nonneg_duals = r.kernel.lambda.tail(L);
  r.equality_duals = r.kernel.nu;
  r.value = r.kernel.value;
  return r;
}

VectorXd h_caps(const VectorXd& A) {
  VectorXd caps(A.size());
  for (int k = 0; k < A.size(); ++k)
    caps(k) = A(k) > 0.0 ? A(k) * A(k) / (1.0 + A(k) * A(k)) : 0.0;
  return caps;
}

VectorXd solve_h_subproblem(const VectorXd& A, const VectorXd& psi,
                            double eps_hat, const KernelOptions& options) {
  const int K = static_cast<int>(A.size());
  if (psi.size() != K) throw ValidationError("psi has wrong length");
  const VectorXd caps = h_caps(A).cwiseMin(1.0);
  const double log_eps = std::log(eps_hat);
  const double slack = caps.array().log().sum() - log_eps;
  if (!(caps.minCoeff() > 0.0) || !(slack > 0.0)) {
    std::ostringstream os;
    os << "h-subproblem infeasible: caps (" << caps.transpose()
       << ") cannot support eps_hat = " << eps_hat;
    throw InfeasibleError(os.str());
  }

  ConvexProgram p;
  p.n = K;
  p.objective = affine_function(psi, 0.0);
  for (int k = 0; k < K; ++k)
    p.inequalities.push_back(affine_function(VectorXd::Unit(K, k), -caps(k)));
  for (int k = 0; k < K; ++k)
    p.inequalities.push_back(affine_function(-VectorXd::Unit(K, k), 0.0));
  for (int k = 0; k < K; ++k)
    p.inequalities.push_back(affine_function(VectorXd::Unit(K, k), -1.0));
  ConvexFunction logc;
  logc.value = [log_eps](const VectorXd& h) {
    if (h.minCoeff() <= 0.0) return std::numeric_limits<double>::infinity();
    return log_eps - h.array().log().sum();
  };
  logc.gradient = [](const VectorXd& h) {
    return VectorXd(-h.cwiseInverse());
  };
  logc.hessian = [](const VectorXd& h) {
    return MatrixXd(h.array().square().inverse().matrix().asDiagonal());
  };
  p.inequalities.push_back(std::move(logc));
  p.A.resize(0, K);
  p.b.resize(0);

  // Scale the caps down halfway (in log space) to the joint-level boundary.
  const VectorXd start = caps * std::exp(-0.5 * slack / K);
  return convex_kernel(p, start, options).x;
}

SearchDirection searching_direction(const VectorXd& tau, const VectorXd& theta,
                                    const VectorXd& h,
                                    const ConstraintBundle& bundle) {
  const int K = bundle.num_constraints();
  if (theta.size() != K || h.size() != K)
    throw ValidationError("theta and h need one entry per constraint");
  SearchDirection d;
  d.A.resize(K);
  d.psi.resize(K);
  for (int k = 0; k < K; ++k) {
    const MomentAmbiguity& amb = bundle.problem().constraints[k];
    const double n = sigma_norm(amb.sigma, tau);
    if (!(amb.rho2 > 0.0))
      throw ValidationError("searching direction needs rho2 > 0 (constraint " +
                            std::to_string(k) + ")");
    if (!(h(k) > 0.0 && h(k) < 1.0))
      throw ValidationError("searching direction needs 0 < h < 1");
    if (!(n > 0.0)) throw ValidationError("searching direction needs a nonzero norm");
    const double sr2 = std::sqrt(amb.rho2);
    d.A(k) = (tau.dot(amb.mu) - bundle.problem().xi(k)) / (n * sr2) -
             std::sqrt(amb.rho1 / amb.rho2);
    d.psi(k) = theta(k) * n / (2.0 * (1.0 - h(k))) *
               std::sqrt(amb.rho2 / (h(k) * (1.0 - h(k))));
  }
  return d;
}

Multipliers sca_multipliers(const TauSubproblemResult& sub, const VectorXd& h,
                            const ConstraintBundle& bundle, double active_tol) {
  const int K = bundle.num_constraints();
  const VectorXd x = h.array().log();
  Multipliers m;
  m.beta = sub.theta.cwiseMax(0.0);
  m.theta1 = sub.equality_duals.cwiseMax(0.0);
  m.theta2 = (-sub.equality_duals).cwiseMax(0.0);
  m.varrho = sub.nonneg_duals.cwiseMax(0.0);
  // g = x < 0 is strictly inactive for h < 1, so chi = 0; zeta fits the
  // x-stationarity in least squares when the joint level is binding.
  m.chi = VectorXd::Zero(K);
  m.zeta = 0.0;
  if (std::abs(bundle.coupling(x).h) <= active_tol) {
    double s = 0.0;
    for (int k = 0; k < K; ++k)
      s += m.beta(k) * bundle.grad_phi(k, sub.tau, x(k)).d_x;
    m.zeta = std::max(0.0, s / K);
  }
  return m;
}

ScaResult run_sca(const ConstraintBundle& bundle, const ScaConfig& config) {
  validate_sca_config(config, bundle.problem());
  ScaResult out;
  VectorXd h = config.h0;
  VectorXd h_prev_base, h_tilde_prev;
  double gamma = config.gamma;
  int halvings = 0;
  int n = 0;
  while (n <= config.n_max) {
    TauSubproblemResult sub;
    try {
      sub = solve_tau_subproblem(h, bundle, config.kernel);
    } catch (const SolverError& e) {
      throw SolverError("iteration " + std::to_string(n) + ": " + e.what());
    }
    const SearchDirection dir = searching_direction(sub.tau, sub.theta, h, bundle);
    VectorXd h_tilde;
    try {
      h_tilde = solve_h_subproblem(dir.A, dir.psi, bundle.problem().eps_hat,
                                   config.kernel);
    } catch (const InfeasibleError& e) {
      if (n == 0 || halvings >= config.max_gamma_halvings)
        throw SolverError("iteration " + std::to_string(n) + ": " + e.what());
      ++halvings;
      gamma *= 0.5;
      h = h_prev_base + gamma * (h_tilde_prev - h_prev_base);
      out.history.back().step_norm = (h - h_prev_base).norm();
      out.history.back().gamma = gamma;
      continue;
    }

    const VectorXd h_next = h + gamma * (h_tilde - h);
    ScaIterate it;
    it.n = n;
    it.tau = sub.tau;
    it.theta = sub.theta;
    it.V = sub.value;
    it.h = h;
    it.step_norm = (h_next - h).norm();
    it.gamma = gamma;
    out.history.push_back(it);
    out.final_iterate = it;
    out.final_subproblem = sub;
    if (it.step_norm < config.stop_L) {
      out.converged = true;
      break;
    }
    h_prev_base = h;
    h_tilde_prev = h_tilde;
    h = h_next;
    ++n;
  }
  out.x = out.final_iterate.h.array().log();
  out.multipliers =
      sca_multipliers(out.final_subproblem, out.final_iterate.h, bundle);
  return out;
}

}  // namespace drccmdp
