#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace drccmdp {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Raised when an input violates a documented invariant.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a numerical routine cannot produce a result.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Finite discounted MDP.
///
/// State-action pairs are ordered lexicographically: (s0,a0), (s0,a1), ...,
/// so pair (s, a) sits at pair_offset(s) + a. Row i of `transition` is the
/// next-state distribution of pair i.
struct MdpSpec {
  int num_states = 0;
  std::vector<int> actions_per_state;
  MatrixXd transition;  // |Lambda| x |S|
  VectorXd q;           // initial distribution
  double alpha = 0.0;

  int num_pairs() const;
  int pair_offset(int s) const;
  int pair_index(int s, int a) const;
  /// State owning each pair.
  std::vector<int> pair_states() const;
};

/// mu[s] is the action distribution at state s.
using StationaryPolicy = std::vector<VectorXd>;

inline constexpr double kSimplexTol = 1e-12;
inline constexpr double kFeasibilityTol = 1e-8;

/// All invariant violations, in index order. Empty means valid.
std::vector<std::string> mdp_violations(const MdpSpec& spec);

/// Returns `spec` unchanged or throws ValidationError naming the first
/// violated invariant.
const MdpSpec& validate_mdp(const MdpSpec& spec);

void validate_policy(const StationaryPolicy& policy, const MdpSpec& spec);

/// M with M(s, i) = delta(s, s_i) - alpha p(s | i); Delta = {M tau = (1-alpha) q, tau >= 0}.
MatrixXd occupation_matrix(const MdpSpec& spec);

VectorXd occupation_rhs(const MdpSpec& spec);

/// omega(tau) = M tau - (1-alpha) q.
VectorXd occupation_residual(const VectorXd& tau, const MdpSpec& spec);

bool is_occupation_measure(const VectorXd& tau, const MdpSpec& spec,
                           double tol = kFeasibilityTol);

/// Discounted state distribution of a stationary policy.
VectorXd state_occupation(const StationaryPolicy& policy, const MdpSpec& spec);

VectorXd occupation_from_policy(const StationaryPolicy& policy,
                                const MdpSpec& spec);

/// mu(a|s) = tau(s,a) / sum_a' tau(s,a'). Throws on a zero-mass state.
StationaryPolicy policy_from_occupation(const VectorXd& tau,
                                        const MdpSpec& spec);

/// (1/(1-alpha)) tau^T reward.
double discounted_value(const VectorXd& tau, const VectorXd& reward,
                        double alpha);

/// Every deterministic policy, in mixed-radix order over states.
std::vector<StationaryPolicy> deterministic_policies(const MdpSpec& spec);

StationaryPolicy uniform_policy(const MdpSpec& spec);

}  // namespace drccmdp
