#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "drccmdp/mdp_core.hpp"

namespace drccmdp {

/// Autonomous system dx/dt = f(x).
struct OdeSystem {
  std::function<VectorXd(const VectorXd&)> f;
  /// Required by the Rosenbrock method only.
  std::function<MatrixXd(const VectorXd&)> jacobian;
  /// Applied to every accepted state and every dense-output sample.
  std::function<void(VectorXd&)> project;
};

enum class OdeMethod { kDormandPrince45, kRosenbrock4 };

std::string to_string(OdeMethod method);
OdeMethod ode_method_from_string(const std::string& name);

struct IntegratorOptions {
  OdeMethod method = OdeMethod::kRosenbrock4;
  double rtol = 1e-8;
  double atol = 1e-10;
  double initial_step = 1e-3;
  double max_step = 0.0;  // 0 means unbounded
  long max_steps = 10'000'000;
};

struct IntegratorStats {
  long accepted = 0;
  long rejected = 0;
  long f_evals = 0;
  long jacobian_evals = 0;
  double last_step = 0.0;
};

/// Called after each accepted step with (t, x); returning false stops.
using StepObserver = std::function<bool(double, const VectorXd&)>;

struct OdeSolution {
  std::vector<double> t;
  std::vector<VectorXd> x;
  double t_final = 0.0;
  VectorXd x_final;
  bool stopped_early = false;
  IntegratorStats stats;
};

class IntegrationError : public SolverError {
 public:
  IntegrationError(const std::string& what, double t, double error_norm)
      : SolverError(what), t_(t), error_norm_(error_norm) {}
  double t() const { return t_; }
  double error_norm() const { return error_norm_; }

 private:
  double t_;
  double error_norm_;
};

/// Adaptive integration from t = 0 to t_end. Samples are taken by dense
/// output at `output_times` (sorted, within [0, t_end]).
OdeSolution integrate_ode(const OdeSystem& system, const VectorXd& x0,
                          double t_end, const std::vector<double>& output_times,
                          const IntegratorOptions& options,
                          const StepObserver& observer = nullptr);

}  // namespace drccmdp
