#include "drccmdp/evaluation.hpp"

#include <cmath>
#include <random>

namespace drccmdp {

double standard_normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

std::vector<OutOfSampleGroup> generate_groups(const DrccmdpProblem& problem,
                                              std::uint64_t seed,
                                              const std::vector<double>& scales,
                                              int samples_per_group) {
  if (samples_per_group < 1)
    throw ValidationError("samples_per_group must be positive");
  const int K = problem.num_constraints();
  std::vector<OutOfSampleGroup> groups;
  for (size_t g = 0; g < scales.size(); ++g) {
    OutOfSampleGroup grp;
    grp.scale = scales[g];
    grp.rng_seed = seed;
    grp.means.resize(samples_per_group);
    for (int j = 0; j < samples_per_group; ++j) {
      grp.means[j].resize(K);
      for (int k = 0; k < K; ++k) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed),
                          static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(g),
                          static_cast<std::uint32_t>(j),
                          static_cast<std::uint32_t>(k)};
        std::mt19937_64 rng(seq);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        const VectorXd& mu = problem.constraints[k].mu;
        VectorXd m(mu.size());
        for (int i = 0; i < mu.size(); ++i) m(i) = mu(i) - grp.scale * u(rng);
        grp.means[j][k] = std::move(m);
      }
    }
    groups.push_back(std::move(grp));
  }
  return groups;
}

double joint_satisfaction_probability(const VectorXd& tau,
                                      const std::vector<VectorXd>& means,
                                      const std::vector<MatrixXd>& covs,
                                      const VectorXd& xi) {
  const size_t K = means.size();
  if (covs.size() != K || static_cast<size_t>(xi.size()) != K)
    throw ValidationError("means, covariances and thresholds must agree in K");
  double p = 1.0;
  for (size_t k = 0; k < K; ++k) {
    const double var = tau.dot(covs[k] * tau);
    if (!(var > 0.0))
      throw ValidationError("degenerate variance tau^T Sigma tau = " +
                            std::to_string(var));
    const double z = (xi(k) - tau.dot(means[k])) / std::sqrt(var);
    p *= 1.0 - standard_normal_cdf(z);
  }
  return p;
}

RobustnessReport compare_solvers(const DrccmdpProblem& problem,
                                 const VectorXd& dnn_tau,
                                 const VectorXd& sca_tau,
                                 const std::vector<OutOfSampleGroup>& groups) {
  std::vector<MatrixXd> covs;
  for (const auto& c : problem.constraints) covs.push_back(c.sigma);
  RobustnessReport r;
  r.threshold = problem.eps_hat;
  for (const auto& grp : groups) {
    GroupReport g;
    g.scale = grp.scale;
    for (const auto& means : grp.means) {
      const double pd = joint_satisfaction_probability(dnn_tau, means, covs, problem.xi);
      const double ps = joint_satisfaction_probability(sca_tau, means, covs, problem.xi);
      g.dnn_probability.push_back(pd);
      g.sca_probability.push_back(ps);
      g.dnn_failures += pd < r.threshold;
      g.sca_failures += ps < r.threshold;
    }
    r.groups.push_back(std::move(g));
  }
  return r;
}

}  // namespace drccmdp
