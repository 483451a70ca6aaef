#pragma once

#include <functional>
#include <random>

#include "drccmdp/benchmark.hpp"

namespace testutil {

using drccmdp::MatrixXd;
using drccmdp::VectorXd;

inline VectorXd uniform_vector(int n, double lo, double hi, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(lo, hi);
  VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = u(rng);
  return v;
}

inline MatrixXd random_psd(int n, std::mt19937_64& rng, double ridge = 0.1) {
  std::normal_distribution<double> g;
  MatrixXd B(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) B(i, j) = g(rng);
  return B * B.transpose() / n + ridge * MatrixXd::Identity(n, n);
}

/// Random MDP with strictly positive q and dense rows.
inline drccmdp::MdpSpec random_mdp(int states, int actions, double alpha,
                                   std::mt19937_64& rng) {
  drccmdp::MdpSpec m;
  m.num_states = states;
  m.actions_per_state.assign(states, actions);
  m.alpha = alpha;
  m.transition = MatrixXd(states * actions, states);
  for (int i = 0; i < m.transition.rows(); ++i) {
    VectorXd r = uniform_vector(states, 0.05, 1.0, rng);
    m.transition.row(i) = r.transpose() / r.sum();
  }
  m.q = uniform_vector(states, 0.2, 1.0, rng);
  m.q /= m.q.sum();
  return m;
}

/// Random problem whose thresholds leave the uniform policy strictly
/// feasible at h = (0.99, ...).
inline drccmdp::DrccmdpProblem random_problem(int states, int actions, int K,
                                              std::mt19937_64& rng) {
  drccmdp::DrccmdpProblem p;
  p.mdp = random_mdp(states, actions, 0.6, rng);
  const int L = states * actions;
  auto amb = [&]() {
    drccmdp::MomentAmbiguity a;
    a.mu = -uniform_vector(L, 0.0, 10.0, rng);
    a.sigma = random_psd(L, rng);
    a.rho1 = std::uniform_real_distribution<double>(0.05, 0.2)(rng);
    a.rho2 = std::uniform_real_distribution<double>(0.05, 0.2)(rng);
    return a;
  };
  p.objective = amb();
  const VectorXd tau =
      drccmdp::occupation_from_policy(drccmdp::uniform_policy(p.mdp), p.mdp);
  p.xi.resize(K);
  for (int k = 0; k < K; ++k) {
    p.constraints.push_back(amb());
    p.xi(k) = -drccmdp::phi_k(tau, std::log(0.99), p.constraints[k], 0.0) - 5.0;
  }
  p.eps_hat = 0.9;
  return p;
}

inline VectorXd central_gradient(const std::function<double(const VectorXd&)>& f,
                                 const VectorXd& x, double step = 1e-6) {
  VectorXd g(x.size());
  for (int i = 0; i < x.size(); ++i) {
    const double h = step * std::max(1.0, std::abs(x(i)));
    VectorXd xp = x, xm = x;
    xp(i) += h;
    xm(i) -= h;
    g(i) = (f(xp) - f(xm)) / (2 * h);
  }
  return g;
}

inline double relative_error(const VectorXd& a, const VectorXd& b) {
  return (a - b).norm() / std::max(1.0, b.norm());
}

inline double relative_error(double a, double b) {
  return std::abs(a - b) / std::max(1.0, std::abs(b));
}

}  // namespace testutil
