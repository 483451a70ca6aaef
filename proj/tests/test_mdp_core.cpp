#include <gtest/gtest.h>

#include "drccmdp/benchmark.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace drccmdp;

namespace {

StationaryPolicy random_policy(const MdpSpec& m, std::mt19937_64& rng) {
  StationaryPolicy pi;
  for (int s = 0; s < m.num_states; ++s) {
    VectorXd p = testutil::uniform_vector(m.actions_per_state[s], 0.01, 1.0, rng);
    pi.push_back(p / p.sum());
  }
  return pi;
}

MdpSpec single_state() {
  MdpSpec m;
  m.num_states = 1;
  m.actions_per_state = {1};
  m.transition = MatrixXd::Ones(1, 1);
  m.q = VectorXd::Ones(1);
  m.alpha = 0.5;
  return m;
}

}  // namespace

TEST(MdpCore, BenchmarkSpecIsValid) {
  const MdpSpec m = machine_replacement_problem().mdp;
  EXPECT_NO_THROW(validate_mdp(m));
  EXPECT_EQ(m.num_pairs(), 10);
  EXPECT_EQ(m.pair_index(3, 1), 7);
}

TEST(MdpCore, RejectsBadRow) {
  MdpSpec m = machine_replacement_problem().mdp;
  m.transition.row(3) *= 0.5;
  EXPECT_THROW(validate_mdp(m), ValidationError);
  try {
    validate_mdp(m);
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("(1,1)"), std::string::npos) << e.what();
  }
}

TEST(MdpCore, RejectsBadDiscountAndInitial) {
  MdpSpec m = single_state();
  m.alpha = 1.0;
  EXPECT_THROW(validate_mdp(m), ValidationError);
  m = single_state();
  m.q(0) = 0.9;
  EXPECT_THROW(validate_mdp(m), ValidationError);
  m = single_state();
  m.transition(0, 0) = -1.0;
  EXPECT_FALSE(mdp_violations(m).empty());
}

TEST(MdpCore, SingleStateChain) {
  const MdpSpec m = single_state();
  EXPECT_NO_THROW(validate_mdp(m));
  const VectorXd tau = occupation_from_policy(uniform_policy(m), m);
  ASSERT_EQ(tau.size(), 1);
  EXPECT_NEAR(tau(0), 1.0, 1e-15);
}

TEST(MdpCore, ResidualOfZeroIsMinusScaledQ) {
  const MdpSpec m = machine_replacement_problem().mdp;
  const VectorXd w = occupation_residual(VectorXd::Zero(10), m);
  EXPECT_LT((w + (1 - m.alpha) * m.q).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(MdpCore, AlwaysRepairResidual) {
  const MdpSpec m = machine_replacement_problem().mdp;
  StationaryPolicy pi(5, VectorXd::Unit(2, 0));
  const VectorXd tau = oracles::occupation(pi, m);
  EXPECT_LE(occupation_residual(tau, m).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_TRUE(is_occupation_measure(tau, m));
}

TEST(MdpCore, ColumnSumsOfConstraintMatrix) {
  std::mt19937_64 rng(3);
  const MdpSpec m = testutil::random_mdp(4, 3, 0.7, rng);
  const VectorXd sums = occupation_matrix(m).colwise().sum();
  EXPECT_LT((sums.array() - (1 - m.alpha)).abs().maxCoeff(), 1e-14);
}

TEST(MdpCore, ReplacementPolicySupport) {
  const MdpSpec m = machine_replacement_problem().mdp;
  StationaryPolicy pi;
  for (int s = 0; s < 5; ++s) pi.push_back(VectorXd::Unit(2, s < 2 ? 1 : 0));
  const VectorXd tau = occupation_from_policy(pi, m);
  for (int s = 0; s < 5; ++s) {
    const int on = s < 2 ? 1 : 0;
    EXPECT_GT(tau(m.pair_index(s, on)), 0.0);
    EXPECT_EQ(tau(m.pair_index(s, 1 - on)), 0.0);
  }
  EXPECT_LT((tau - oracles::occupation(pi, m)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(MdpCore, SymmetricChainIsUniform) {
  MdpSpec m;
  m.num_states = 2;
  m.actions_per_state = {2, 2};
  m.transition = MatrixXd::Constant(4, 2, 0.5);
  m.q = VectorXd::Constant(2, 0.5);
  m.alpha = 0.9;
  const VectorXd tau = occupation_from_policy(uniform_policy(m), m);
  EXPECT_LT((tau.array() - 0.25).abs().maxCoeff(), 1e-14);
}

TEST(MdpCore, PolicyFromEqualMass) {
  MdpSpec m;
  m.num_states = 1;
  m.actions_per_state = {2};
  m.transition = MatrixXd::Ones(2, 1);
  m.q = VectorXd::Ones(1);
  m.alpha = 0.3;
  VectorXd tau(2);
  tau << 0.2, 0.2;
  const auto pi = policy_from_occupation(tau, m);
  EXPECT_DOUBLE_EQ(pi[0](0), 0.5);
  EXPECT_DOUBLE_EQ(pi[0](1), 0.5);
}

TEST(MdpCore, ZeroMassStateNamed) {
  const MdpSpec m = machine_replacement_problem().mdp;
  VectorXd tau = VectorXd::Constant(10, 0.1);
  tau(m.pair_index(2, 0)) = 0.0;
  tau(m.pair_index(2, 1)) = 0.0;
  try {
    policy_from_occupation(tau, m);
    FAIL() << "expected an error";
  } catch (const std::exception& e) {
    EXPECT_NE(std::string(e.what()).find('2'), std::string::npos) << e.what();
  }
}

TEST(MdpCore, DiscountedValue) {
  const MdpSpec m = machine_replacement_problem().mdp;
  const VectorXd tau = occupation_from_policy(uniform_policy(m), m);
  EXPECT_NEAR(discounted_value(tau, VectorXd::Ones(10), 0.6), 2.5, 1e-12);
  EXPECT_EQ(discounted_value(tau, VectorXd::Zero(10), 0.6), 0.0);
}

TEST(MdpCoreProperty, RandomPoliciesRoundTrip) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const int S = 2 + trial % 5, A = 1 + trial % 3;
    const MdpSpec m = testutil::random_mdp(S, A, 0.95 * (trial % 10) / 10.0, rng);
    const StationaryPolicy pi = random_policy(m, rng);
    const VectorXd tau = occupation_from_policy(pi, m);
    EXPECT_LE((tau - oracles::occupation(pi, m)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE(occupation_residual(tau, m).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_NEAR(tau.sum(), 1.0, 1e-9);
    const auto back = policy_from_occupation(tau, m);
    for (int s = 0; s < S; ++s)
      EXPECT_LE((back[s] - pi[s]).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(MdpCoreProperty, ResidualIsAffine) {
  std::mt19937_64 rng(5);
  const MdpSpec m = testutil::random_mdp(3, 2, 0.6, rng);
  for (int trial = 0; trial < 50; ++trial) {
    const VectorXd a = testutil::uniform_vector(6, -1, 1, rng);
    const VectorXd b = testutil::uniform_vector(6, -1, 1, rng);
    const double l = std::uniform_real_distribution<double>(-2, 2)(rng);
    const VectorXd lhs = occupation_residual(l * a + (1 - l) * b, m);
    const VectorXd rhs = l * occupation_residual(a, m) + (1 - l) * occupation_residual(b, m);
    EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-13);
  }
}

TEST(MdpCore, DeterministicPolicyCount) {
  const MdpSpec m = machine_replacement_problem().mdp;
  EXPECT_EQ(deterministic_policies(m).size(), 32u);
}
