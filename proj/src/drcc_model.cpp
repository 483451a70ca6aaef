#include "drccmdp/drcc_model.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace drccmdp {

namespace {

void check_domain(double x) {
  if (!(x < kXDomainGuard)) {
    std::ostringstream os;
    os << "x = " << x << " outside the domain x < " << kXDomainGuard;
    throw std::domain_error(os.str());
  }
}

// e^x / (1 - e^x) and 1 - e^x without cancellation.
struct Odds {
  double e, one_minus_e, s;
};

Odds odds(double x) {
  Odds o;
  o.e = std::exp(x);
  o.one_minus_e = -std::expm1(x);
  o.s = o.e / o.one_minus_e;
  return o;
}

}  // namespace

std::vector<std::string> ambiguity_violations(const MomentAmbiguity& amb,
                                              int num_pairs,
                                              const std::string& name) {
  std::vector<std::string> out;
  if (amb.mu.size() != num_pairs)
    out.push_back(name + ": mu has length " + std::to_string(amb.mu.size()) +
                  ", expected " + std::to_string(num_pairs));
  if (amb.sigma.rows() != num_pairs || amb.sigma.cols() != num_pairs) {
    out.push_back(name + ": sigma is not " + std::to_string(num_pairs) + "x" +
                  std::to_string(num_pairs));
  } else if (!amb.sigma.allFinite()) {
    out.push_back(name + ": sigma is not finite");
  } else {
    const double asym = (amb.sigma - amb.sigma.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-12 * std::max(1.0, amb.sigma.cwiseAbs().maxCoeff())) {
      out.push_back(name + ": sigma is not symmetric");
    } else {
      Eigen::SelfAdjointEigenSolver<MatrixXd> es(amb.sigma,
                                                 Eigen::EigenvaluesOnly);
      if (es.eigenvalues().minCoeff() < -1e-10) {
        std::ostringstream os;
        os << name << ": sigma has eigenvalue " << es.eigenvalues().minCoeff();
        out.push_back(os.str());
      }
    }
  }
  if (!(amb.rho1 >= 0.0)) out.push_back(name + ": rho1 is negative");
  if (!(amb.rho2 >= 0.0)) out.push_back(name + ": rho2 is negative");
  return out;
}

std::vector<std::string> problem_violations(const DrccmdpProblem& problem) {
  std::vector<std::string> out = mdp_violations(problem.mdp);
  if (!out.empty()) return out;
  const int L = problem.mdp.num_pairs();
  auto append = [&](std::vector<std::string> v) {
    out.insert(out.end(), v.begin(), v.end());
  };
  append(ambiguity_violations(problem.objective, L, "objective"));
  const int K = problem.num_constraints();
  if (K < 1) out.push_back("at least one constraint is required");
  for (int k = 0; k < K; ++k)
    append(ambiguity_violations(problem.constraints[k], L,
                                "constraint " + std::to_string(k)));
  if (problem.xi.size() != K)
    out.push_back("xi has length " + std::to_string(problem.xi.size()) +
                  ", expected " + std::to_string(K));
  if (!(problem.eps_hat > 0.0 && problem.eps_hat < 1.0)) {
    std::ostringstream os;
    os << "eps_hat " << problem.eps_hat << " outside (0, 1)";
    out.push_back(os.str());
  }
  return out;
}

const DrccmdpProblem& validate_problem(const DrccmdpProblem& problem) {
  const auto v = problem_violations(problem);
  if (!v.empty()) throw ValidationError(v.front());
  return problem;
}

double sigma_norm(const MatrixXd& sigma, const VectorXd& tau) {
  return std::sqrt(std::max(0.0, tau.dot(sigma * tau)));
}

double smoothed_sigma_norm(const MatrixXd& sigma, const VectorXd& tau) {
  return std::sqrt(std::max(0.0, tau.dot(sigma * tau)) +
                   kNormSmoothing * kNormSmoothing);
}

double objective_f(const VectorXd& tau, const MomentAmbiguity& amb0,
                   double alpha) {
  return (-tau.dot(amb0.mu) + std::sqrt(amb0.rho1) * sigma_norm(amb0.sigma, tau)) /
         (1.0 - alpha);
}

VectorXd grad_objective_f(const VectorXd& tau, const MomentAmbiguity& amb0,
                          double alpha) {
  const double n = smoothed_sigma_norm(amb0.sigma, tau);
  return (-amb0.mu + std::sqrt(amb0.rho1) * (amb0.sigma * tau) / n) /
         (1.0 - alpha);
}

MatrixXd hess_objective_f(const VectorXd& tau, const MomentAmbiguity& amb0,
                          double alpha) {
  const double n = smoothed_sigma_norm(amb0.sigma, tau);
  const VectorXd st = amb0.sigma * tau;
  return std::sqrt(amb0.rho1) / (1.0 - alpha) *
         (amb0.sigma / n - st * st.transpose() / (n * n * n));
}

double risk_coefficient(double x, const MomentAmbiguity& amb) {
  check_domain(x);
  return std::sqrt(odds(x).s) * std::sqrt(amb.rho2) + std::sqrt(amb.rho1);
}

double risk_coefficient_dx(double x, const MomentAmbiguity& amb) {
  check_domain(x);
  const Odds o = odds(x);
  return std::sqrt(amb.rho2) * o.e /
         (2.0 * std::sqrt(o.s) * o.one_minus_e * o.one_minus_e);
}

double risk_coefficient_dxx(double x, const MomentAmbiguity& amb) {
  check_domain(x);
  const Odds o = odds(x);
  return std::sqrt(amb.rho2) * o.e * (2.0 * o.e + 1.0) /
         (4.0 * std::sqrt(o.s) * o.one_minus_e * o.one_minus_e * o.one_minus_e);
}

double phi_k(const VectorXd& tau, double x_k, const MomentAmbiguity& amb,
             double xi_k) {
  return risk_coefficient(x_k, amb) * sigma_norm(amb.sigma, tau) -
         tau.dot(amb.mu) + xi_k;
}

PhiGradient grad_phi_k(const VectorXd& tau, double x_k,
                       const MomentAmbiguity& amb) {
  PhiGradient g;
  const double c = risk_coefficient(x_k, amb);
  g.d_tau = c * (amb.sigma * tau) / smoothed_sigma_norm(amb.sigma, tau) - amb.mu;
  g.d_x = risk_coefficient_dx(x_k, amb) * sigma_norm(amb.sigma, tau);
  return g;
}

double phi_k_dxx(const VectorXd& tau, double x_k, const MomentAmbiguity& amb) {
  return risk_coefficient_dxx(x_k, amb) * sigma_norm(amb.sigma, tau);
}

MatrixXd hess_phi_k_tau(const VectorXd& tau, double x_k,
                        const MomentAmbiguity& amb) {
  const double c = risk_coefficient(x_k, amb);
  const double n = smoothed_sigma_norm(amb.sigma, tau);
  const VectorXd st = amb.sigma * tau;
  return c * (amb.sigma / n - st * st.transpose() / (n * n * n));
}

CouplingValues coupling_constraints(const VectorXd& x, double eps_hat) {
  return {x, std::log(eps_hat) - x.sum()};
}

ConstraintBundle::ConstraintBundle(DrccmdpProblem problem)
    : problem_(std::move(problem)) {
  validate_problem(problem_);
  L_ = problem_.mdp.num_pairs();
  S_ = problem_.mdp.num_states;
  K_ = problem_.num_constraints();
  M_ = occupation_matrix(problem_.mdp);
  b_ = occupation_rhs(problem_.mdp);
  log_eps_hat_ = std::log(problem_.eps_hat);
}

ConstraintCounts ConstraintBundle::counts() const {
  ConstraintCounts c;
  c.tau = L_;
  c.x = K_;
  c.phi = K_;
  c.g = K_;
  c.h = 1;
  c.omega = S_;
  c.nu = L_;
  return c;
}

double ConstraintBundle::f(const VectorXd& tau) const {
  return objective_f(tau, problem_.objective, problem_.mdp.alpha);
}

VectorXd ConstraintBundle::grad_f(const VectorXd& tau) const {
  return grad_objective_f(tau, problem_.objective, problem_.mdp.alpha);
}

MatrixXd ConstraintBundle::hess_f(const VectorXd& tau) const {
  return hess_objective_f(tau, problem_.objective, problem_.mdp.alpha);
}

double ConstraintBundle::phi(int k, const VectorXd& tau, double x_k) const {
  return phi_k(tau, x_k, problem_.constraints[k], problem_.xi(k));
}

VectorXd ConstraintBundle::phi_all(const VectorXd& tau, const VectorXd& x) const {
  VectorXd out(K_);
  for (int k = 0; k < K_; ++k) out(k) = phi(k, tau, x(k));
  return out;
}

PhiGradient ConstraintBundle::grad_phi(int k, const VectorXd& tau,
                                       double x_k) const {
  return grad_phi_k(tau, x_k, problem_.constraints[k]);
}

CouplingValues ConstraintBundle::coupling(const VectorXd& x) const {
  return coupling_constraints(x, problem_.eps_hat);
}

VectorXd ConstraintBundle::omega(const VectorXd& tau) const {
  return M_ * tau - b_;
}

ConstraintBundle reformulate(const DrccmdpProblem& problem) {
  return ConstraintBundle(problem);
}

FeasibilityReport feasibility_check(const VectorXd& tau, const VectorXd& x,
                                    const ConstraintBundle& bundle,
                                    double tol) {
  FeasibilityReport r;
  const int K = bundle.num_constraints();
  r.phi.resize(K);
  double worst = -std::numeric_limits<double>::infinity();
  auto consider = [&](double violation, const std::string& name) {
    if (violation > worst) {
      worst = violation;
      r.worst = name;
    }
  };
  for (int k = 0; k < K; ++k) {
    r.phi(k) = x(k) < kXDomainGuard ? bundle.phi(k, tau, x(k))
                                    : std::numeric_limits<double>::infinity();
    consider(r.phi(k), "phi[" + std::to_string(k) + "]");
  }
  const CouplingValues c = bundle.coupling(x);
  r.g = c.g;
  r.h = c.h;
  for (int k = 0; k < K; ++k) consider(r.g(k), "g[" + std::to_string(k) + "]");
  consider(r.h, "h");
  r.omega = bundle.omega(tau);
  for (int s = 0; s < r.omega.size(); ++s)
    consider(std::abs(r.omega(s)), "omega[" + std::to_string(s) + "]");
  r.nu = bundle.nu(tau);
  for (int i = 0; i < r.nu.size(); ++i)
    consider(r.nu(i), "nu[" + std::to_string(i) + "]");
  r.max_violation = std::max(0.0, worst);
  r.feasible = r.max_violation <= tol;
  return r;
}

}  // namespace drccmdp
