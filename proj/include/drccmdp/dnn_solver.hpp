#pragma once

#include <array>
#include <string>
#include <vector>

#include "drccmdp/drcc_model.hpp"
#include "drccmdp/integrator.hpp"

namespace drccmdp {

/// Multipliers of phi, g, h, omega <= 0, -omega <= 0 and nu.
struct Multipliers {
  VectorXd beta;
  VectorXd chi;
  double zeta = 0.0;
  VectorXd theta1;
  VectorXd theta2;
  VectorXd varrho;
};

struct DnnState {
  VectorXd tau;
  VectorXd x;
  Multipliers multipliers;
};

/// Block layout of z = (tau, x, beta, chi, zeta, theta1, theta2, varrho).
class DnnLayout {
 public:
  enum Block { kTau, kX, kBeta, kChi, kZeta, kTheta1, kTheta2, kVarrho };
  static constexpr int kNumBlocks = 8;
  static const std::array<const char*, kNumBlocks> kBlockNames;

  DnnLayout() = default;
  explicit DnnLayout(const ConstraintCounts& counts);

  int dimension() const { return dim_; }
  int offset(Block b) const { return offset_[b]; }
  int size(Block b) const { return size_[b]; }

  VectorXd pack(const DnnState& state) const;
  DnnState unpack(const VectorXd& z) const;

 private:
  std::array<int, kNumBlocks> offset_{};
  std::array<int, kNumBlocks> size_{};
  int dim_ = 0;
};

/// tau = 1e-3, x_k = log(eps_hat) / K, every multiplier 1e-4.
DnnState default_initial_state(const DrccmdpProblem& problem);

struct DnnOptions {
  double kappa = 1.0;
  /// x is kept at or below -x_margin while integrating.
  double x_margin = 1e-3;
};

class DnnSystem {
 public:
  explicit DnnSystem(ConstraintBundle bundle, DnnOptions options = {});

  const ConstraintBundle& bundle() const { return bundle_; }
  const DnnLayout& layout() const { return layout_; }
  const DnnOptions& options() const { return options_; }

  /// kappa times the projection dynamics. Requires x < kXDomainGuard.
  VectorXd raw_field(const VectorXd& z) const;
  /// Analytic Jacobian of raw_field away from active-set boundaries.
  MatrixXd raw_jacobian(const VectorXd& z) const;

  /// z with x clipped to x <= -x_margin.
  VectorXd clamp(const VectorXd& z) const;
  void clamp_in_place(VectorXd& z) const;
  /// Right-hand side integrated: raw_field at clamp(z).
  VectorXd integration_field(const VectorXd& z) const;
  MatrixXd integration_jacobian(const VectorXd& z) const;
  /// integration_field with outward x components removed on the margin.
  VectorXd field(const VectorXd& z) const;

  /// Arguments of every (.)^+ term, in block order beta..varrho.
  VectorXd plus_arguments(const VectorXd& z) const;

  double objective(const VectorXd& z) const;

 private:
  ConstraintBundle bundle_;
  DnnOptions options_;
  DnnLayout layout_;
};

VectorXd vector_field(const VectorXd& z, const ConstraintBundle& bundle,
                      double kappa = 1.0);

/// Euclidean norm of each block of dz.
std::array<double, DnnLayout::kNumBlocks> block_norms(const VectorXd& dz,
                                                      const DnnLayout& layout);
/// Largest block norm of the derivative.
double accuracy_of(const VectorXd& dz, const DnnLayout& layout);
/// Accuracy from the (projected) field of `system`.
double accuracy(const VectorXd& z, const DnnSystem& system);
/// Accuracy from the raw vector field.
double accuracy(const VectorXd& z, const ConstraintBundle& bundle);

struct KktReport {
  double stationarity_tau = 0.0;
  double stationarity_x = 0.0;
  double complementarity = 0.0;
  double dual_sign = 0.0;
  double primal = 0.0;
  double max = 0.0;
};

KktReport kkt_residual(const VectorXd& tau, const VectorXd& x,
                       const Multipliers& multipliers,
                       const ConstraintBundle& bundle);

struct JacobianCertificate {
  MatrixXd analytic;
  MatrixXd finite_difference;
  /// Largest eigenvalue of the symmetric part of the finite-difference Jacobian.
  double max_symmetric_eigenvalue = 0.0;
  double analytic_max_symmetric_eigenvalue = 0.0;
  /// Max entry of |analytic - finite_difference| / max(1, |analytic|).
  double mismatch = 0.0;
  /// Smallest |argument| of a (.)^+ term at z.
  double kink_distance = 0.0;
  bool indeterminate = false;
  bool negative_semidefinite = false;
  std::string status;
};

JacobianCertificate jacobian(const VectorXd& z, const ConstraintBundle& bundle,
                             double tol = 1e-7, double step = 1e-6);

/// ||F(z)||^2 + 0.5 ||z - z_star||^2 with F the projected field of `system`.
double lyapunov_value(const VectorXd& z, const VectorXd& z_star,
                      const DnnSystem& system);
/// Same with the raw vector field.
double lyapunov_value(const VectorXd& z, const VectorXd& z_star,
                      const ConstraintBundle& bundle);

struct ActiveSetEvent {
  double t = 0.0;
  std::string constraint;
  int index = 0;
  bool active = false;
};

struct DnnRunOptions {
  IntegratorOptions integrator;
  std::vector<double> output_times;
  /// Stop once accuracy stays below this for stop_window accepted steps.
  double stop_accuracy = 0.0;
  int stop_window = 10;
  bool record_events = true;
};

struct Trajectory {
  std::vector<double> t;
  std::vector<VectorXd> z;
  std::vector<double> accuracy;
  std::vector<double> lyapunov;
  std::vector<double> objective;
  std::vector<ActiveSetEvent> events;
  IntegratorStats stats;
  double t_final = 0.0;
  VectorXd z_final;
  bool reached_equilibrium = false;
};

/// Uniform sample grid 0, t_end/n, ..., t_end.
std::vector<double> uniform_times(double t_end, int intervals);

/// Integrates from z0 and fills accuracy and objective for every sample and
/// the Lyapunov value against the final state.
Trajectory integrate(const DnnSystem& system, const VectorXd& z0, double t_end,
                     const DnnRunOptions& options = {});

}  // namespace drccmdp
