#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "drccmdp/dnn_solver.hpp"
#include "drccmdp/drcc_model.hpp"
#include "drccmdp/evaluation.hpp"
#include "drccmdp/sca_solver.hpp"

namespace drccmdp {

using Json = nlohmann::json;

/// Raised for unreadable or malformed input files.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Json mdp_to_json(const MdpSpec& spec);
MdpSpec mdp_from_json(const Json& j);

Json problem_to_json(const DrccmdpProblem& problem);
/// Accepts an inline "mdp" object or an "mdp_file" path relative to base_dir.
DrccmdpProblem problem_from_json(const Json& j, const std::string& base_dir = ".");

/// Problem file plus optional solver settings stored next to it.
struct ProblemFile {
  DrccmdpProblem problem;
  std::optional<DnnState> initial_state;
  std::optional<ScaConfig> sca;
};

ProblemFile load_problem_file(const std::string& path);
void save_problem_file(const std::string& path, const ProblemFile& file);

struct SolutionRecord {
  std::string solver;
  VectorXd tau;
  VectorXd x;
  Multipliers multipliers;
  double objective = 0.0;
  StationaryPolicy policy;
};

Json solution_to_json(const SolutionRecord& s);
SolutionRecord solution_from_json(const Json& j);
void save_solution(const std::string& path, const SolutionRecord& s);
SolutionRecord load_solution(const std::string& path);

void write_json(const std::string& path, const Json& j);
Json read_json(const std::string& path);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

void write_csv(const std::string& path, const CsvTable& table);
CsvTable read_csv(const std::string& path);

/// Columns t, z1..zN, accuracy, lyapunov, objective.
CsvTable trajectory_table(const Trajectory& trajectory);
/// Columns n, V, h1..hK, step_norm.
CsvTable sca_history_table(const std::vector<ScaIterate>& history);
/// Columns group, scale, j, probability, pass for one solver.
CsvTable robustness_table(const RobustnessReport& report, bool dnn);

}  // namespace drccmdp
