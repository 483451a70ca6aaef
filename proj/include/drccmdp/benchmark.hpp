#pragma once

#include <string>
#include <vector>

#include "drccmdp/dnn_solver.hpp"
#include "drccmdp/evaluation.hpp"
#include "drccmdp/sca_solver.hpp"

namespace drccmdp {

/// Five-state machine replacement instance. Action 0 repairs, action 1 does
/// not. Rewards are negated costs.
DrccmdpProblem machine_replacement_problem();

/// tau = 1e-3, x = (-8, -60), every multiplier 1e-4.
DnnState machine_replacement_initial_state();

/// h0 = (0.83, 0.85), n_max = 100, gamma = 0.6, L = 1e-8.
ScaConfig machine_replacement_sca_config();

/// True when states 0-1 keep running and states 2-4 repair with
/// probability at least `level`.
bool matches_replacement_pattern(const StationaryPolicy& policy,
                                 double level = 0.999);

struct BenchmarkOptions {
  double t_end = 2000.0;
  int sample_intervals = 2000;
  IntegratorOptions integrator;
  DnnOptions dnn;
  ScaConfig sca = machine_replacement_sca_config();
  std::uint64_t seed = kDefaultSeed;
  int samples_per_group = 100;
};

struct BenchmarkRun {
  Trajectory trajectory;
  DnnState dnn_state;
  StationaryPolicy dnn_policy;
  double dnn_value = 0.0;
  KktReport dnn_kkt;
  double dnn_seconds = 0.0;

  ScaResult sca;
  StationaryPolicy sca_policy;
  double sca_value = 0.0;
  KktReport sca_kkt;
  /// Accuracy of the DNN field at the SCA point with its duals.
  double sca_injected_accuracy = 0.0;
  double sca_seconds = 0.0;

  std::vector<OutOfSampleGroup> groups;
  RobustnessReport robustness;
};

BenchmarkRun run_benchmark(const DrccmdpProblem& problem, const DnnState& z0,
                           const BenchmarkOptions& options);

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
};

/// Checks computable from a single benchmark run.
std::vector<CriterionResult> benchmark_checks(const BenchmarkRun& run);

}  // namespace drccmdp
