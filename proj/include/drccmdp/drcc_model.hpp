#pragma once

#include <string>
#include <vector>

#include "drccmdp/mdp_core.hpp"

namespace drccmdp {

/// Moment ambiguity set of one reward vector: mean within a Mahalanobis
/// ellipsoid of radius rho1 around `mu`, covariance bounded by rho2 * sigma.
struct MomentAmbiguity {
  VectorXd mu;
  MatrixXd sigma;
  double rho1 = 0.0;
  double rho2 = 0.0;
};

struct DrccmdpProblem {
  MdpSpec mdp;
  MomentAmbiguity objective;
  std::vector<MomentAmbiguity> constraints;
  VectorXd xi;
  double eps_hat = 0.0;

  int num_constraints() const { return static_cast<int>(constraints.size()); }
};

/// Domain guard of the risk coefficient: x_k must stay below this value.
inline constexpr double kXDomainGuard = -1e-12;
/// Smoothing used inside norm gradients only.
inline constexpr double kNormSmoothing = 1e-12;

std::vector<std::string> ambiguity_violations(const MomentAmbiguity& amb,
                                              int num_pairs,
                                              const std::string& name);
std::vector<std::string> problem_violations(const DrccmdpProblem& problem);
const DrccmdpProblem& validate_problem(const DrccmdpProblem& problem);

/// sqrt(tau^T sigma tau), clamped at zero against round-off.
double sigma_norm(const MatrixXd& sigma, const VectorXd& tau);
double smoothed_sigma_norm(const MatrixXd& sigma, const VectorXd& tau);

double objective_f(const VectorXd& tau, const MomentAmbiguity& amb0,
                   double alpha);
VectorXd grad_objective_f(const VectorXd& tau, const MomentAmbiguity& amb0,
                          double alpha);
MatrixXd hess_objective_f(const VectorXd& tau, const MomentAmbiguity& amb0,
                          double alpha);

/// c(x) = sqrt(e^x / (1 - e^x)) sqrt(rho2) + sqrt(rho1) and its derivatives.
double risk_coefficient(double x, const MomentAmbiguity& amb);
double risk_coefficient_dx(double x, const MomentAmbiguity& amb);
double risk_coefficient_dxx(double x, const MomentAmbiguity& amb);

double phi_k(const VectorXd& tau, double x_k, const MomentAmbiguity& amb,
             double xi_k);

struct PhiGradient {
  VectorXd d_tau;
  double d_x = 0.0;
};

PhiGradient grad_phi_k(const VectorXd& tau, double x_k,
                       const MomentAmbiguity& amb);
/// Second derivative in x_k.
double phi_k_dxx(const VectorXd& tau, double x_k, const MomentAmbiguity& amb);
/// Hessian in tau.
MatrixXd hess_phi_k_tau(const VectorXd& tau, double x_k,
                        const MomentAmbiguity& amb);

struct CouplingValues {
  VectorXd g;
  double h = 0.0;
};

/// g_k = x_k and h = log(eps_hat) - sum x. Gradients: e_k and -1.
CouplingValues coupling_constraints(const VectorXd& x, double eps_hat);

struct ConstraintCounts {
  int tau = 0;
  int x = 0;
  int phi = 0;
  int g = 0;
  int h = 0;
  int omega = 0;
  int nu = 0;
  /// Length of the DNN state.
  int state_dimension() const { return tau + x + phi + g + h + 2 * omega + nu; }
};

/// Shared constraint system over (tau, x) used by both solvers.
class ConstraintBundle {
 public:
  explicit ConstraintBundle(DrccmdpProblem problem);

  const DrccmdpProblem& problem() const { return problem_; }
  const MdpSpec& mdp() const { return problem_.mdp; }
  int num_pairs() const { return L_; }
  int num_states() const { return S_; }
  int num_constraints() const { return K_; }
  ConstraintCounts counts() const;

  double f(const VectorXd& tau) const;
  VectorXd grad_f(const VectorXd& tau) const;
  MatrixXd hess_f(const VectorXd& tau) const;

  double phi(int k, const VectorXd& tau, double x_k) const;
  VectorXd phi_all(const VectorXd& tau, const VectorXd& x) const;
  PhiGradient grad_phi(int k, const VectorXd& tau, double x_k) const;

  CouplingValues coupling(const VectorXd& x) const;
  double log_eps_hat() const { return log_eps_hat_; }

  VectorXd omega(const VectorXd& tau) const;
  /// Jacobian of omega in tau.
  const MatrixXd& M() const { return M_; }
  const VectorXd& b() const { return b_; }

  VectorXd nu(const VectorXd& tau) const { return -tau; }

 private:
  DrccmdpProblem problem_;
  int L_, S_, K_;
  MatrixXd M_;
  VectorXd b_;
  double log_eps_hat_;
};

ConstraintBundle reformulate(const DrccmdpProblem& problem);

struct FeasibilityReport {
  VectorXd phi;
  VectorXd g;
  double h = 0.0;
  VectorXd omega;
  VectorXd nu;
  double max_violation = 0.0;
  std::string worst;
  bool feasible = false;
};

/// Evaluates every constraint; violation of omega counts in absolute value.
FeasibilityReport feasibility_check(const VectorXd& tau, const VectorXd& x,
                                    const ConstraintBundle& bundle,
                                    double tol = 1e-6);

}  // namespace drccmdp
