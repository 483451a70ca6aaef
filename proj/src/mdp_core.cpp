#include "drccmdp/mdp_core.hpp"

#include <cmath>
#include <sstream>

namespace drccmdp {

int MdpSpec::num_pairs() const {
  int n = 0;
  for (int a : actions_per_state) n += a;
  return n;
}

int MdpSpec::pair_offset(int s) const {
  int n = 0;
  for (int i = 0; i < s; ++i) n += actions_per_state[i];
  return n;
}

int MdpSpec::pair_index(int s, int a) const { return pair_offset(s) + a; }

std::vector<int> MdpSpec::pair_states() const {
  std::vector<int> owner;
  owner.reserve(num_pairs());
  for (int s = 0; s < num_states; ++s)
    for (int a = 0; a < actions_per_state[s]; ++a) owner.push_back(s);
  return owner;
}

std::vector<std::string> mdp_violations(const MdpSpec& spec) {
  std::vector<std::string> out;
  auto fail = [&](const std::string& msg) { out.push_back(msg); };
  if (spec.num_states <= 0) {
    fail("num_states must be positive");
    return out;
  }
  if (static_cast<int>(spec.actions_per_state.size()) != spec.num_states) {
    fail("actions_per_state has " +
         std::to_string(spec.actions_per_state.size()) + " entries, expected " +
         std::to_string(spec.num_states));
    return out;
  }
  for (int s = 0; s < spec.num_states; ++s)
    if (spec.actions_per_state[s] <= 0)
      fail("state " + std::to_string(s) + " has no actions");
  if (!out.empty()) return out;

  const int L = spec.num_pairs();
  if (spec.transition.rows() != L || spec.transition.cols() != spec.num_states) {
    std::ostringstream os;
    os << "transition is " << spec.transition.rows() << "x"
       << spec.transition.cols() << ", expected " << L << "x" << spec.num_states;
    fail(os.str());
  } else {
    for (int s = 0; s < spec.num_states; ++s) {
      for (int a = 0; a < spec.actions_per_state[s]; ++a) {
        const auto row = spec.transition.row(spec.pair_index(s, a));
        std::ostringstream os;
        if (!row.allFinite()) {
          os << "transition row (" << s << "," << a << ") is not finite";
          fail(os.str());
          continue;
        }
        if (row.minCoeff() < 0.0) {
          os << "transition row (" << s << "," << a << ") has a negative entry "
             << row.minCoeff();
          fail(os.str());
          continue;
        }
        const double sum = row.sum();
        if (std::abs(sum - 1.0) > kSimplexTol) {
          os.precision(15);
          os << "transition row (" << s << "," << a << ") sums to " << sum;
          fail(os.str());
        }
      }
    }
  }

  if (spec.q.size() != spec.num_states) {
    fail("initial distribution has length " + std::to_string(spec.q.size()) +
         ", expected " + std::to_string(spec.num_states));
  } else if (!spec.q.allFinite() || spec.q.minCoeff() < 0.0) {
    fail("initial distribution has a negative or non-finite entry");
  } else if (std::abs(spec.q.sum() - 1.0) > kSimplexTol) {
    std::ostringstream os;
    os.precision(15);
    os << "initial distribution sums to " << spec.q.sum();
    fail(os.str());
  }

  if (!(spec.alpha >= 0.0 && spec.alpha < 1.0)) {
    std::ostringstream os;
    os << "discount " << spec.alpha << " outside [0, 1)";
    fail(os.str());
  }
  return out;
}

const MdpSpec& validate_mdp(const MdpSpec& spec) {
  const auto v = mdp_violations(spec);
  if (!v.empty()) throw ValidationError(v.front());
  return spec;
}

void validate_policy(const StationaryPolicy& policy, const MdpSpec& spec) {
  if (static_cast<int>(policy.size()) != spec.num_states)
    throw ValidationError("policy has " + std::to_string(policy.size()) +
                          " states, expected " +
                          std::to_string(spec.num_states));
  for (int s = 0; s < spec.num_states; ++s) {
    const VectorXd& mu = policy[s];
    if (mu.size() != spec.actions_per_state[s])
      throw ValidationError("policy row " + std::to_string(s) +
                            " has wrong length");
    if (!mu.allFinite() || mu.minCoeff() < 0.0 ||
        std::abs(mu.sum() - 1.0) > kSimplexTol)
      throw ValidationError("policy row " + std::to_string(s) +
                            " is not a probability vector");
  }
}

MatrixXd occupation_matrix(const MdpSpec& spec) {
  const int S = spec.num_states;
  MatrixXd M = -spec.alpha * spec.transition.transpose();
  int i = 0;
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < spec.actions_per_state[s]; ++a, ++i) M(s, i) += 1.0;
  return M;
}

VectorXd occupation_rhs(const MdpSpec& spec) {
  return (1.0 - spec.alpha) * spec.q;
}

VectorXd occupation_residual(const VectorXd& tau, const MdpSpec& spec) {
  if (tau.size() != spec.num_pairs())
    throw ValidationError("tau has length " + std::to_string(tau.size()) +
                          ", expected " + std::to_string(spec.num_pairs()));
  return occupation_matrix(spec) * tau - occupation_rhs(spec);
}

bool is_occupation_measure(const VectorXd& tau, const MdpSpec& spec,
                           double tol) {
  if (tau.size() != spec.num_pairs()) return false;
  if (tau.minCoeff() < -tol) return false;
  return occupation_residual(tau, spec).cwiseAbs().maxCoeff() <= tol;
}

VectorXd state_occupation(const StationaryPolicy& policy,
                          const MdpSpec& spec) {
  validate_policy(policy, spec);
  const int S = spec.num_states;
  MatrixXd P = MatrixXd::Zero(S, S);
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < spec.actions_per_state[s]; ++a)
      P.row(s) += policy[s](a) * spec.transition.row(spec.pair_index(s, a));
  const MatrixXd A =
      MatrixXd::Identity(S, S) - spec.alpha * P.transpose();
  Eigen::PartialPivLU<MatrixXd> lu(A);
  if (!std::isfinite(lu.rcond()) || lu.rcond() < 1e-14)
    throw SolverError("singular occupation system (rcond " +
                      std::to_string(lu.rcond()) + ")");
  return lu.solve(occupation_rhs(spec));
}

VectorXd occupation_from_policy(const StationaryPolicy& policy,
                                const MdpSpec& spec) {
  const VectorXd d = state_occupation(policy, spec);
  VectorXd tau(spec.num_pairs());
  for (int s = 0; s < spec.num_states; ++s)
    for (int a = 0; a < spec.actions_per_state[s]; ++a)
      tau(spec.pair_index(s, a)) = d(s) * policy[s](a);
  return tau;
}

StationaryPolicy policy_from_occupation(const VectorXd& tau,
                                        const MdpSpec& spec) {
  if (tau.size() != spec.num_pairs())
    throw ValidationError("tau has length " + std::to_string(tau.size()) +
                          ", expected " + std::to_string(spec.num_pairs()));
  StationaryPolicy policy(spec.num_states);
  for (int s = 0; s < spec.num_states; ++s) {
    const int n = spec.actions_per_state[s];
    VectorXd mass = tau.segment(spec.pair_offset(s), n).cwiseMax(0.0);
    const double total = mass.sum();
    if (!(total > 0.0))
      throw ValidationError("state " + std::to_string(s) +
                            " has zero occupation mass");
    policy[s] = mass / total;
  }
  return policy;
}

double discounted_value(const VectorXd& tau, const VectorXd& reward,
                        double alpha) {
  if (tau.size() != reward.size())
    throw ValidationError("reward length does not match tau");
  return tau.dot(reward) / (1.0 - alpha);
}

std::vector<StationaryPolicy> deterministic_policies(const MdpSpec& spec) {
  std::vector<StationaryPolicy> out;
  std::vector<int> choice(spec.num_states, 0);
  while (true) {
    StationaryPolicy p(spec.num_states);
    for (int s = 0; s < spec.num_states; ++s) {
      p[s] = VectorXd::Zero(spec.actions_per_state[s]);
      p[s](choice[s]) = 1.0;
    }
    out.push_back(std::move(p));
    int s = spec.num_states - 1;
    while (s >= 0 && ++choice[s] == spec.actions_per_state[s]) choice[s--] = 0;
    if (s < 0) break;
  }
  return out;
}

StationaryPolicy uniform_policy(const MdpSpec& spec) {
  StationaryPolicy p(spec.num_states);
  for (int s = 0; s < spec.num_states; ++s)
    p[s] = VectorXd::Constant(spec.actions_per_state[s],
                              1.0 / spec.actions_per_state[s]);
  return p;
}

}  // namespace drccmdp
