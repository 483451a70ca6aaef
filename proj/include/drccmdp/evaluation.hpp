#pragma once

#include <cstdint>
#include <vector>

#include "drccmdp/drcc_model.hpp"

namespace drccmdp {

inline constexpr std::uint64_t kDefaultSeed = 20240517;

double standard_normal_cdf(double x);

/// Perturbed reward means: means[j][k] = mu_k - scale * u, u ~ U[0,1]^|Lambda|.
struct OutOfSampleGroup {
  double scale = 0.0;
  std::vector<std::vector<VectorXd>> means;
  std::uint64_t rng_seed = 0;
};

/// Draws u for (group, j, k) from its own mt19937_64 stream seeded with
/// seed_seq{seed, group, j, k}.
std::vector<OutOfSampleGroup> generate_groups(
    const DrccmdpProblem& problem, std::uint64_t seed,
    const std::vector<double>& scales = {1.0, 2.0, 3.0, 3.5},
    int samples_per_group = 100);

/// prod_k (1 - Phi((xi_k - tau^T mean_k) / sqrt(tau^T cov_k tau))).
double joint_satisfaction_probability(const VectorXd& tau,
                                      const std::vector<VectorXd>& means,
                                      const std::vector<MatrixXd>& covs,
                                      const VectorXd& xi);

struct GroupReport {
  double scale = 0.0;
  std::vector<double> dnn_probability;
  std::vector<double> sca_probability;
  int dnn_failures = 0;
  int sca_failures = 0;
};

struct RobustnessReport {
  double threshold = 0.0;
  std::vector<GroupReport> groups;
};

/// Counts samples whose joint probability falls below eps_hat.
RobustnessReport compare_solvers(const DrccmdpProblem& problem,
                                 const VectorXd& dnn_tau,
                                 const VectorXd& sca_tau,
                                 const std::vector<OutOfSampleGroup>& groups);

}  // namespace drccmdp
