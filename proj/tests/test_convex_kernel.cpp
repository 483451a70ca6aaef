#include <gtest/gtest.h>

#include <limits>

#include "drccmdp/convex_kernel.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace drccmdp;

namespace {

// Best vertex of min c^T x, G x <= h by choosing n active rows.
double enumerate_inequality_form(const VectorXd& c, const MatrixXd& G,
                                 const VectorXd& h) {
  const int m = G.rows(), n = G.cols();
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> idx(n);
  std::function<void(int, int)> rec = [&](int start, int depth) {
    if (depth == n) {
      MatrixXd B(n, n);
      VectorXd r(n);
      for (int j = 0; j < n; ++j) {
        B.row(j) = G.row(idx[j]);
        r(j) = h(idx[j]);
      }
      Eigen::FullPivLU<MatrixXd> lu(B);
      if (lu.rank() < n) return;
      const VectorXd x = lu.solve(r);
      if ((G * x - h).maxCoeff() > 1e-10) return;
      best = std::min(best, c.dot(x));
      return;
    }
    for (int i = start; i < m; ++i) {
      idx[depth] = i;
      rec(i + 1, depth + 1);
    }
  };
  rec(0, 0);
  return best;
}

ConvexProgram linear_program(const VectorXd& c) {
  ConvexProgram p;
  p.n = c.size();
  p.objective = affine_function(c, 0.0);
  return p;
}

}  // namespace

TEST(ConvexKernel, OneDimensionalBound) {
  ConvexProgram p = linear_program(VectorXd::Ones(1));
  p.inequalities.push_back(affine_function(-VectorXd::Ones(1), 1.0));
  const KernelResult r = convex_kernel(p, VectorXd::Constant(1, 3.0));
  EXPECT_NEAR(r.x(0), 1.0, 1e-9);
  EXPECT_NEAR(r.lambda(0), 1.0, 1e-9);
  EXPECT_LE(r.kkt_residual, 1e-9);
}

TEST(ConvexKernel, PhaseOneFromInfeasibleStart) {
  ConvexProgram p = linear_program(VectorXd::Ones(1));
  p.inequalities.push_back(affine_function(-VectorXd::Ones(1), 1.0));
  const KernelResult r = convex_kernel(p, VectorXd::Constant(1, -4.0));
  EXPECT_GT(r.phase1_iterations, 0);
  EXPECT_NEAR(r.x(0), 1.0, 1e-9);
}

TEST(ConvexKernel, InfeasibleProgramThrows) {
  ConvexProgram p = linear_program(VectorXd::Ones(1));
  p.inequalities.push_back(affine_function(-VectorXd::Ones(1), 1.0));
  p.inequalities.push_back(affine_function(VectorXd::Ones(1), 1.0));
  EXPECT_THROW(convex_kernel(p, VectorXd::Zero(1)), SolverError);
}

TEST(ConvexKernel, MinimumNormOnHyperplane) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const VectorXd a = testutil::uniform_vector(4, -2, 2, rng);
    ConvexProgram p;
    p.n = 5;
    // Epigraph form: min t s.t. ||x|| <= t, a^T x = 1.
    p.objective = affine_function(VectorXd::Unit(5, 4), 0.0);
    ConvexFunction cone;
    cone.value = [](const VectorXd& z) {
      return std::sqrt(z.head(4).squaredNorm() + 1e-24) - z(4);
    };
    cone.gradient = [](const VectorXd& z) {
      VectorXd g = VectorXd::Zero(5);
      g.head(4) = z.head(4) / std::sqrt(z.head(4).squaredNorm() + 1e-24);
      g(4) = -1;
      return g;
    };
    cone.hessian = [](const VectorXd& z) {
      const double n = std::sqrt(z.head(4).squaredNorm() + 1e-24);
      MatrixXd H = MatrixXd::Zero(5, 5);
      H.topLeftCorner(4, 4) =
          (MatrixXd::Identity(4, 4) - z.head(4) * z.head(4).transpose() / (n * n)) / n;
      return H;
    };
    p.inequalities.push_back(cone);
    p.A = MatrixXd::Zero(1, 5);
    p.A.leftCols(4) = a.transpose();
    p.b = VectorXd::Ones(1);
    VectorXd start = VectorXd::Zero(5);
    start.head(4) = a / a.squaredNorm() + 0.1 * VectorXd::Ones(4);
    start.head(4) -= a * (a.dot(start.head(4)) - 1) / a.squaredNorm();
    start(4) = start.head(4).norm() + 1.0;
    const KernelResult r = convex_kernel(p, start);
    EXPECT_NEAR(r.value, 1.0 / a.norm(), 1e-7);
    EXPECT_LE((r.x.head(4) - a / a.squaredNorm()).norm(), 1e-6);
  }
}

TEST(ConvexKernelOracle, StandardFormLpsMatchVertexEnumeration) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 4 + trial % 9, m = 1 + trial % 3;
    MatrixXd A(m + 1, n);
    A.topRows(m) = MatrixXd::NullaryExpr(m, n, [&]() {
      return std::uniform_real_distribution<double>(0, 1)(rng);
    });
    A.row(m).setOnes();
    // b from a strictly positive point keeps the interior nonempty.
    const VectorXd x0 = testutil::uniform_vector(n, 0.1, 1.0, rng);
    const VectorXd b = A * (x0 / x0.sum());
    const VectorXd c = testutil::uniform_vector(n, -1, 1, rng);

    VectorXd x_oracle;
    const double oracle = oracles::enumerate_standard_form(c, A, b, x_oracle);
    ConvexProgram p = linear_program(c);
    for (int i = 0; i < n; ++i)
      p.inequalities.push_back(affine_function(-VectorXd::Unit(n, i), 0.0));
    p.A = A;
    p.b = b;
    const KernelResult r = convex_kernel(p, VectorXd::Constant(n, 1.0 / n));
    EXPECT_NEAR(r.value, oracle, 1e-7) << "trial " << trial;
    EXPECT_LE((r.x - x_oracle).cwiseAbs().maxCoeff(), 1e-6) << "trial " << trial;
    EXPECT_LE(r.kkt_residual, 1e-9);
    EXPECT_GE(r.lambda.minCoeff(), 0.0);
  }
}

TEST(ConvexKernelOracle, InequalityFormLpsMatchVertexEnumeration) {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 2 + trial % 3, m = 2 * n + 2 + trial % 4;
    MatrixXd G(m, n);
    VectorXd h(m);
    for (int i = 0; i < n; ++i) {
      G.row(2 * i) = VectorXd::Unit(n, i).transpose();
      G.row(2 * i + 1) = -VectorXd::Unit(n, i).transpose();
      h(2 * i) = h(2 * i + 1) = 2.0;
    }
    for (int i = 2 * n; i < m; ++i) {
      G.row(i) = testutil::uniform_vector(n, -1, 1, rng).transpose();
      h(i) = std::uniform_real_distribution<double>(0.2, 1.0)(rng);
    }
    const VectorXd c = testutil::uniform_vector(n, -1, 1, rng);
    ConvexProgram p = linear_program(c);
    for (int i = 0; i < m; ++i)
      p.inequalities.push_back(affine_function(G.row(i).transpose(), -h(i)));
    const KernelResult r = convex_kernel(p, VectorXd::Zero(n));
    EXPECT_NEAR(r.value, enumerate_inequality_form(c, G, h), 1e-7) << "trial " << trial;
    // Complementary slackness.
    for (int i = 0; i < m; ++i)
      EXPECT_LE(std::abs(r.lambda(i) * (G.row(i).dot(r.x) - h(i))), 1e-8);
  }
}

TEST(ConvexKernel, ComplementarySlacknessOnInactiveConstraint) {
  ConvexProgram p;
  p.n = 2;
  p.objective.value = [](const VectorXd& x) { return (x - VectorXd::Constant(2, 0.3)).squaredNorm(); };
  p.objective.gradient = [](const VectorXd& x) { return VectorXd(2 * (x - VectorXd::Constant(2, 0.3))); };
  p.objective.hessian = [](const VectorXd&) { return MatrixXd(2 * MatrixXd::Identity(2, 2)); };
  p.inequalities.push_back(affine_function(VectorXd::Ones(2), -5.0));
  p.inequalities.push_back(affine_function(-VectorXd::Unit(2, 0), -1.0));
  const KernelResult r = convex_kernel(p, VectorXd::Zero(2));
  EXPECT_LE((r.x - VectorXd::Constant(2, 0.3)).norm(), 1e-8);
  EXPECT_LE(r.lambda.cwiseAbs().maxCoeff(), 1e-8);
}
