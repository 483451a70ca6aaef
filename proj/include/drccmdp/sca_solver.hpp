#pragma once

#include <vector>

#include "drccmdp/convex_kernel.hpp"
#include "drccmdp/dnn_solver.hpp"
#include "drccmdp/drcc_model.hpp"

namespace drccmdp {

/// Raised when a subproblem has no feasible point.
class InfeasibleError : public SolverError {
 public:
  using SolverError::SolverError;
};

struct ScaConfig {
  VectorXd h0;
  int n_max = 100;
  double gamma = 0.6;
  double stop_L = 1e-8;
  /// Number of step-halving retries when the h-subproblem is infeasible.
  int max_gamma_halvings = 5;
  KernelOptions kernel;
};

void validate_sca_config(const ScaConfig& config, const DrccmdpProblem& problem);

struct TauSubproblemResult {
  VectorXd tau;
  /// Duals of the K robust constraints.
  VectorXd theta;
  /// Duals of tau >= 0.
  VectorXd nonneg_duals;
  /// Duals of M tau = (1 - alpha) q.
  VectorXd equality_duals;
  double value = 0.0;
  KernelResult kernel;
};

TauSubproblemResult solve_tau_subproblem(const VectorXd& h,
                                         const ConstraintBundle& bundle,
                                         const KernelOptions& options = {});

/// A^2 / (1 + A^2) for A > 0, otherwise 0.
VectorXd h_caps(const VectorXd& A);

/// min psi^T h s.t. h <= caps(A), 0 <= h <= 1, sum log h >= log eps_hat.
VectorXd solve_h_subproblem(const VectorXd& A, const VectorXd& psi,
                            double eps_hat, const KernelOptions& options = {});

struct SearchDirection {
  VectorXd A;
  VectorXd psi;
};

SearchDirection searching_direction(const VectorXd& tau, const VectorXd& theta,
                                    const VectorXd& h,
                                    const ConstraintBundle& bundle);

struct ScaIterate {
  int n = 0;
  VectorXd tau;
  VectorXd theta;
  double V = 0.0;
  VectorXd h;
  /// ||h^{n+1} - h^n||.
  double step_norm = 0.0;
  double gamma = 0.0;
};

struct ScaResult {
  ScaIterate final_iterate;
  std::vector<ScaIterate> history;
  bool converged = false;
  /// log h of the final iterate.
  VectorXd x;
  Multipliers multipliers;
  TauSubproblemResult final_subproblem;
};

/// DNN-compatible multipliers for (tau, log h) from the tau-subproblem duals.
Multipliers sca_multipliers(const TauSubproblemResult& sub, const VectorXd& h,
                            const ConstraintBundle& bundle,
                            double active_tol = 1e-9);

ScaResult run_sca(const ConstraintBundle& bundle, const ScaConfig& config);

}  // namespace drccmdp
