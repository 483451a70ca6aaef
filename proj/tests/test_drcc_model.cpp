#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include "drccmdp/benchmark.hpp"
#include "test_util.hpp"

using namespace drccmdp;
using testutil::central_gradient;
using testutil::relative_error;

namespace {

MomentAmbiguity iso(int n, double rho1, double rho2, std::mt19937_64& rng) {
  MomentAmbiguity a;
  a.mu = testutil::uniform_vector(n, -5, 5, rng);
  a.sigma = testutil::random_psd(n, rng);
  a.rho1 = rho1;
  a.rho2 = rho2;
  return a;
}

// Direct transcription of the second derivative from the convexity proof.
double phi_dxx_oracle(double x, double norm, double rho2) {
  const double e = std::exp(x);
  return e * (2 * e + 1) / (4 * std::sqrt(e / (1 - e)) * std::pow(1 - e, 3)) *
         std::sqrt(rho2) * norm;
}

}  // namespace

TEST(DrccModel, SigmaNormMatchesEigendecomposition) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + trial % 10;
    const MatrixXd S = testutil::random_psd(n, rng, trial % 2 ? 0.0 : 0.1);
    const VectorXd tau = testutil::uniform_vector(n, -1, 1, rng);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(S);
    const MatrixXd root = es.eigenvectors() *
                          es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                          es.eigenvectors().transpose();
    EXPECT_NEAR(sigma_norm(S, tau), (root * tau).norm(), 1e-10);
  }
}

TEST(DrccModel, ObjectiveSpecialCases) {
  std::mt19937_64 rng(2);
  MomentAmbiguity a = iso(6, 0.0, 0.0, rng);
  const VectorXd tau = testutil::uniform_vector(6, 0, 1, rng);
  EXPECT_NEAR(objective_f(tau, a, 0.6), -tau.dot(a.mu) / 0.4, 1e-12);
  EXPECT_LT((grad_objective_f(tau, a, 0.6) + a.mu / 0.4).norm(), 1e-12);
  a.rho1 = 0.3;
  EXPECT_EQ(objective_f(VectorXd::Zero(6), a, 0.6), 0.0);
}

TEST(DrccModel, ObjectiveGradientUnitCase) {
  MomentAmbiguity a;
  a.mu = VectorXd::LinSpaced(4, -1, 2);
  a.sigma = MatrixXd::Identity(4, 4);
  a.rho1 = 1.0;
  const VectorXd e1 = VectorXd::Unit(4, 0);
  EXPECT_LT((grad_objective_f(e1, a, 0.0) - (-a.mu + e1)).norm(), 1e-12);
}

TEST(DrccModel, PhiSpecialCases) {
  std::mt19937_64 rng(3);
  MomentAmbiguity a = iso(5, 0.0, 0.0, rng);
  const VectorXd tau = testutil::uniform_vector(5, 0, 1, rng);
  EXPECT_NEAR(phi_k(tau, -0.3, a, 2.0), 2.0 - tau.dot(a.mu), 1e-12);
  a.rho1 = 0.2;
  a.rho2 = 0.7;
  const double n = sigma_norm(a.sigma, tau);
  EXPECT_NEAR(phi_k(tau, std::log(0.5), a, 1.0),
              (std::sqrt(0.7) + std::sqrt(0.2)) * n - tau.dot(a.mu) + 1.0, 1e-12);
  EXPECT_NEAR(phi_k(tau, -200.0, a, 1.0),
              std::sqrt(0.2) * n - tau.dot(a.mu) + 1.0, 1e-12);
  EXPECT_THROW(phi_k(tau, 0.0, a, 1.0), std::domain_error);
  EXPECT_THROW(phi_k(tau, 1e-3, a, 1.0), std::domain_error);
  a.rho2 = 0.0;
  EXPECT_EQ(grad_phi_k(tau, -0.5, a).d_x, 0.0);
}

TEST(DrccModel, PhiSecondDerivativeNonnegativeOnGrid) {
  std::mt19937_64 rng(4);
  const MomentAmbiguity a = iso(6, 0.1, 0.15, rng);
  const VectorXd tau = testutil::uniform_vector(6, 0, 1, rng);
  const double n = sigma_norm(a.sigma, tau);
  for (double x = -20.0; x < -1e-6; x += 0.01) {
    const double v = phi_k_dxx(tau, x, a);
    EXPECT_GE(v, 0.0) << x;
    EXPECT_LE(relative_error(v, phi_dxx_oracle(x, n, a.rho2)), 1e-9) << x;
  }
}

TEST(DrccModelProperty, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const DrccmdpProblem p = testutil::random_problem(3, 2, 2, rng);
    const ConstraintBundle b(p);
    const VectorXd tau = testutil::uniform_vector(6, 0.01, 1.0, rng);
    const VectorXd x = testutil::uniform_vector(2, -5.0, -0.05, rng);

    auto f = [&](const VectorXd& t) { return b.f(t); };
    EXPECT_LE(relative_error(b.grad_f(tau), central_gradient(f, tau)), 1e-5);

    for (int k = 0; k < 2; ++k) {
      auto pt = [&](const VectorXd& t) { return b.phi(k, t, x(k)); };
      const PhiGradient g = b.grad_phi(k, tau, x(k));
      EXPECT_LE(relative_error(g.d_tau, central_gradient(pt, tau)), 1e-5);
      auto px = [&](const VectorXd& v) { return b.phi(k, tau, v(0)); };
      const VectorXd xk = VectorXd::Constant(1, x(k));
      EXPECT_LE(relative_error(g.d_x, central_gradient(px, xk, 1e-7)(0)), 1e-5);
      auto dx = [&](const VectorXd& v) { return b.grad_phi(k, tau, v(0)).d_x; };
      EXPECT_LE(relative_error(phi_k_dxx(tau, x(k), p.constraints[k]),
                               central_gradient(dx, xk, 1e-7)(0)),
                1e-5);
    }

    for (int s = 0; s < 3; ++s) {
      auto w = [&](const VectorXd& t) { return b.omega(t)(s); };
      EXPECT_LE(relative_error(VectorXd(b.M().row(s).transpose()),
                               central_gradient(w, tau)),
                1e-8);
    }
    for (int i = 0; i < 6; ++i) {
      auto nu = [&](const VectorXd& t) { return b.nu(t)(i); };
      EXPECT_LE(relative_error(central_gradient(nu, tau), -VectorXd::Unit(6, i)), 1e-8);
    }
    auto hfun = [&](const VectorXd& v) { return b.coupling(v).h; };
    EXPECT_LE(relative_error(central_gradient(hfun, x), -VectorXd::Ones(2)), 1e-8);
    for (int k = 0; k < 2; ++k) {
      auto gk = [&](const VectorXd& v) { return b.coupling(v).g(k); };
      EXPECT_LE(relative_error(central_gradient(gk, x), VectorXd::Unit(2, k)), 1e-8);
    }
  }
}

TEST(DrccModelProperty, PhiConvexInTau) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const MomentAmbiguity a = iso(6, 0.1, 0.2, rng);
    const VectorXd tau = testutil::uniform_vector(6, 0.01, 1.0, rng);
    const double x = -std::uniform_real_distribution<double>(0.01, 5)(rng);
    MatrixXd H(6, 6);
    for (int i = 0; i < 6; ++i) {
      auto gi = [&](const VectorXd& t) { return grad_phi_k(t, x, a).d_tau(i); };
      H.row(i) = central_gradient(gi, tau).transpose();
    }
    H = 0.5 * (H + H.transpose());
    EXPECT_GE(Eigen::SelfAdjointEigenSolver<MatrixXd>(H).eigenvalues().minCoeff(), -1e-6);
    EXPECT_LE((H - hess_phi_k_tau(tau, x, a)).cwiseAbs().maxCoeff(), 1e-5);
  }
}

TEST(DrccModel, CouplingExamples) {
  VectorXd x(2);
  x << std::log(0.97), std::log(0.99);
  CouplingValues c = coupling_constraints(x, 0.95);
  EXPECT_NEAR(c.h, std::log(0.95) - std::log(0.9603), 1e-14);
  EXPECT_LT(c.h, 0.0);
  c = coupling_constraints(VectorXd::Zero(2), 0.95);
  EXPECT_EQ(c.g, VectorXd::Zero(2));
  EXPECT_NEAR(c.h, std::log(0.95), 1e-15);
  x << -8, -60;
  EXPECT_NEAR(coupling_constraints(x, 0.95).h, std::log(0.95) + 68, 1e-12);
}

TEST(DrccModel, BenchmarkCounts) {
  const ConstraintCounts c = reformulate(machine_replacement_problem()).counts();
  EXPECT_EQ(c.tau, 10);
  EXPECT_EQ(c.x, 2);
  EXPECT_EQ(c.phi, 2);
  EXPECT_EQ(c.g, 2);
  EXPECT_EQ(c.h, 1);
  EXPECT_EQ(c.omega, 5);
  EXPECT_EQ(c.nu, 10);
  EXPECT_EQ(c.state_dimension(), 37);
}

TEST(DrccModel, SingleConstraintBounds) {
  std::mt19937_64 rng(7);
  const ConstraintBundle b(testutil::random_problem(2, 2, 1, rng));
  const VectorXd tau = occupation_from_policy(uniform_policy(b.mdp()), b.mdp());
  const double le = b.log_eps_hat();
  EXPECT_TRUE(feasibility_check(tau, VectorXd::Constant(1, 0.5 * le), b).feasible);
  EXPECT_FALSE(feasibility_check(tau, VectorXd::Constant(1, 2 * le), b).feasible);
  EXPECT_FALSE(feasibility_check(tau, VectorXd::Constant(1, 0.1), b).feasible);
}

TEST(DrccModel, FeasibilityReports) {
  const ConstraintBundle b(machine_replacement_problem());
  StationaryPolicy pi(5, VectorXd::Unit(2, 0));
  const VectorXd tau = occupation_from_policy(pi, b.mdp());
  VectorXd x(2);
  x << std::log(0.97), std::log(0.98);
  FeasibilityReport r = feasibility_check(tau, x, b);
  EXPECT_EQ(r.phi.size(), 2);
  EXPECT_EQ(r.omega.size(), 5);
  EXPECT_NEAR(r.h, std::log(0.95) - x.sum(), 1e-14);

  VectorXd neg = tau;
  neg(1) = -0.2;
  r = feasibility_check(neg, x, b);
  EXPECT_FALSE(r.feasible);
  EXPECT_GE(r.max_violation, 0.2);

  x << std::log(0.9), std::log(0.9);
  r = feasibility_check(tau, x, b);
  EXPECT_FALSE(r.feasible);
  EXPECT_NEAR(r.h, std::log(0.95) - x.sum(), 1e-14);
  EXPECT_GE(r.max_violation, std::log(0.95) - x.sum() - 1e-14);
}

TEST(DrccModel, ReformulateDeterministic) {
  const ConstraintBundle a(machine_replacement_problem());
  const ConstraintBundle b(machine_replacement_problem());
  EXPECT_EQ(a.M(), b.M());
  EXPECT_EQ(a.b(), b.b());
  const VectorXd tau = VectorXd::Constant(10, 0.1);
  const VectorXd x = VectorXd::Constant(2, -0.1);
  EXPECT_EQ(a.phi_all(tau, x), b.phi_all(tau, x));
}

TEST(DrccModel, ValidationRejectsBadProblems) {
  DrccmdpProblem p = machine_replacement_problem();
  p.eps_hat = 1.0;
  EXPECT_THROW(validate_problem(p), ValidationError);
  p = machine_replacement_problem();
  p.constraints[0].rho2 = -1.0;
  EXPECT_FALSE(problem_violations(p).empty());
  p = machine_replacement_problem();
  p.constraints[1].sigma(0, 0) = -5.0;
  EXPECT_FALSE(problem_violations(p).empty());
  p = machine_replacement_problem();
  p.xi.resize(3);
  EXPECT_FALSE(problem_violations(p).empty());
  p = machine_replacement_problem();
  p.constraints.clear();
  p.xi.resize(0);
  EXPECT_FALSE(problem_violations(p).empty());
}
