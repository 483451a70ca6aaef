#pragma once

#include <functional>
#include <vector>

#include "drccmdp/mdp_core.hpp"

namespace drccmdp {

/// A twice-differentiable convex function. An empty `hessian` means zero.
struct ConvexFunction {
  std::function<double(const VectorXd&)> value;
  std::function<VectorXd(const VectorXd&)> gradient;
  std::function<MatrixXd(const VectorXd&)> hessian;
};

/// a^T x + c.
ConvexFunction affine_function(VectorXd a, double c);

/// min objective(x) s.t. inequalities[i](x) <= 0, A x = b.
struct ConvexProgram {
  int n = 0;
  ConvexFunction objective;
  std::vector<ConvexFunction> inequalities;
  MatrixXd A;
  VectorXd b;
};

struct KernelOptions {
  double gap_tol = 1e-10;
  double feas_tol = 1e-9;
  double mu = 10.0;
  int max_iterations = 300;
};

struct KernelResult {
  VectorXd x;
  /// Inequality multipliers.
  VectorXd lambda;
  /// Equality multipliers, Lagrangian f + lambda^T c + nu^T (A x - b).
  VectorXd nu;
  double value = 0.0;
  int iterations = 0;
  int phase1_iterations = 0;
  double surrogate_gap = 0.0;
  /// max of stationarity, primal infeasibility and |lambda_i c_i|.
  double kkt_residual = 0.0;
};

/// Primal-dual interior-point method on the log barrier. A phase-1 problem
/// runs first when `start` is not strictly feasible for the inequalities.
KernelResult convex_kernel(const ConvexProgram& program, const VectorXd& start,
                           const KernelOptions& options = {});

}  // namespace drccmdp
