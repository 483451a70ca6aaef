#include "drccmdp/io.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace drccmdp {

namespace {

Json vec_to_json(const VectorXd& v) {
  return Json(std::vector<double>(v.data(), v.data() + v.size()));
}

VectorXd vec_from_json(const Json& j, const std::string& what) {
  if (!j.is_array()) throw ConfigError(what + " must be an array of numbers");
  VectorXd v(j.size());
  for (size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ConfigError(what + " must contain numbers");
    v(i) = j[i].get<double>();
  }
  return v;
}

MatrixXd mat_from_json(const Json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) throw ConfigError(what + " must be a nested array");
  const size_t rows = j.size();
  const size_t cols = j[0].size();
  MatrixXd m(rows, cols);
  for (size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols)
      throw ConfigError(what + " has ragged rows");
    for (size_t c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

Json mat_to_json(const MatrixXd& m) {
  Json rows = Json::array();
  for (int r = 0; r < m.rows(); ++r) rows.push_back(vec_to_json(m.row(r).transpose()));
  return rows;
}

template <typename T>
T require(const Json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError(where + ": missing key '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw ConfigError(where + ": bad value for '" + key + "': " + e.what());
  }
}

const Json& require_node(const Json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError(where + ": missing key '" + key + "'");
  return j.at(key);
}

Json ambiguity_to_json(const MomentAmbiguity& a) {
  Json j;
  j["mu"] = vec_to_json(a.mu);
  const MatrixXd off = a.sigma - MatrixXd(a.sigma.diagonal().asDiagonal());
  if (off.cwiseAbs().maxCoeff() == 0.0)
    j["sigma_diagonal"] = vec_to_json(a.sigma.diagonal());
  else
    j["sigma"] = mat_to_json(a.sigma);
  j["rho1"] = a.rho1;
  j["rho2"] = a.rho2;
  return j;
}

MomentAmbiguity ambiguity_from_json(const Json& j, const std::string& where) {
  MomentAmbiguity a;
  a.mu = vec_from_json(require_node(j, "mu", where), where + ".mu");
  if (j.contains("sigma"))
    a.sigma = mat_from_json(j.at("sigma"), where + ".sigma");
  else if (j.contains("sigma_diagonal"))
    a.sigma = vec_from_json(j.at("sigma_diagonal"), where + ".sigma_diagonal")
                  .asDiagonal();
  else
    throw ConfigError(where + ": needs 'sigma' or 'sigma_diagonal'");
  a.rho1 = j.value("rho1", 0.0);
  a.rho2 = j.value("rho2", 0.0);
  return a;
}

Json multipliers_to_json(const Multipliers& m) {
  Json j;
  j["beta"] = vec_to_json(m.beta);
  j["chi"] = vec_to_json(m.chi);
  j["zeta"] = m.zeta;
  j["theta1"] = vec_to_json(m.theta1);
  j["theta2"] = vec_to_json(m.theta2);
  j["varrho"] = vec_to_json(m.varrho);
  return j;
}

Multipliers multipliers_from_json(const Json& j, const std::string& where) {
  Multipliers m;
  m.beta = vec_from_json(require_node(j, "beta", where), where + ".beta");
  m.chi = vec_from_json(require_node(j, "chi", where), where + ".chi");
  m.zeta = require<double>(j, "zeta", where);
  m.theta1 = vec_from_json(require_node(j, "theta1", where), where + ".theta1");
  m.theta2 = vec_from_json(require_node(j, "theta2", where), where + ".theta2");
  m.varrho = vec_from_json(require_node(j, "varrho", where), where + ".varrho");
  return m;
}

std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
  return os.str();
}

}  // namespace

Json mdp_to_json(const MdpSpec& spec) {
  Json j;
  j["num_states"] = spec.num_states;
  j["actions_per_state"] = spec.actions_per_state;
  j["discount"] = spec.alpha;
  j["initial_distribution"] = vec_to_json(spec.q);
  Json trans = Json::array();
  for (int s = 0; s < spec.num_states; ++s)
    for (int a = 0; a < spec.actions_per_state[s]; ++a)
      for (int t = 0; t < spec.num_states; ++t) {
        const double p = spec.transition(spec.pair_index(s, a), t);
        if (p != 0.0) trans.push_back({s, a, t, p});
      }
  j["transitions"] = trans;
  return j;
}

MdpSpec mdp_from_json(const Json& j) {
  const std::string where = "mdp";
  MdpSpec spec;
  spec.num_states = require<int>(j, "num_states", where);
  spec.actions_per_state = require<std::vector<int>>(j, "actions_per_state", where);
  spec.alpha = require<double>(j, "discount", where);
  spec.q = vec_from_json(require_node(j, "initial_distribution", where),
                         where + ".initial_distribution");
  if (spec.num_states <= 0 ||
      static_cast<int>(spec.actions_per_state.size()) != spec.num_states)
    throw ConfigError(where + ": actions_per_state must list every state");
  for (int a : spec.actions_per_state)
    if (a <= 0) throw ConfigError(where + ": every state needs an action");
  spec.transition = MatrixXd::Zero(spec.num_pairs(), spec.num_states);
  const Json& trans = require_node(j, "transitions", where);
  if (!trans.is_array()) throw ConfigError(where + ".transitions must be an array");
  for (size_t i = 0; i < trans.size(); ++i) {
    const Json& t = trans[i];
    const std::string tw = where + ".transitions[" + std::to_string(i) + "]";
    if (!t.is_array() || t.size() != 4)
      throw ConfigError(tw + " must be [state, action, next_state, probability]");
    const int s = t[0].get<int>(), a = t[1].get<int>(), n = t[2].get<int>();
    if (s < 0 || s >= spec.num_states || n < 0 || n >= spec.num_states ||
        a < 0 || a >= spec.actions_per_state[s])
      throw ConfigError(tw + " references an unknown state or action");
    spec.transition(spec.pair_index(s, a), n) += t[3].get<double>();
  }
  return spec;
}

Json problem_to_json(const DrccmdpProblem& p) {
  Json j;
  j["pair_order"] = "lexicographic: (state 0, action 0), (state 0, action 1), ...";
  j["mdp"] = mdp_to_json(p.mdp);
  j["objective"] = ambiguity_to_json(p.objective);
  Json cons = Json::array();
  for (const auto& c : p.constraints) cons.push_back(ambiguity_to_json(c));
  j["constraints"] = cons;
  j["xi"] = vec_to_json(p.xi);
  j["eps_hat"] = p.eps_hat;
  return j;
}

DrccmdpProblem problem_from_json(const Json& j, const std::string& base_dir) {
  DrccmdpProblem p;
  if (j.contains("mdp")) {
    p.mdp = mdp_from_json(j.at("mdp"));
  } else if (j.contains("mdp_file")) {
    const std::filesystem::path path =
        std::filesystem::path(base_dir) / j.at("mdp_file").get<std::string>();
    p.mdp = mdp_from_json(read_json(path.string()));
  } else {
    throw ConfigError("problem: needs 'mdp' or 'mdp_file'");
  }
  p.objective = ambiguity_from_json(require_node(j, "objective", "problem"),
                                    "objective");
  const Json& cons = require_node(j, "constraints", "problem");
  if (!cons.is_array()) throw ConfigError("problem.constraints must be an array");
  for (size_t k = 0; k < cons.size(); ++k)
    p.constraints.push_back(
        ambiguity_from_json(cons[k], "constraints[" + std::to_string(k) + "]"));
  p.xi = vec_from_json(require_node(j, "xi", "problem"), "xi");
  p.eps_hat = require<double>(j, "eps_hat", "problem");
  return p;
}

ProblemFile load_problem_file(const std::string& path) {
  const Json j = read_json(path);
  ProblemFile f;
  const std::string base = std::filesystem::path(path).parent_path().string();
  f.problem = problem_from_json(j, base.empty() ? "." : base);
  if (j.contains("dnn") && j.at("dnn").contains("initial_state")) {
    const Json& s = j.at("dnn").at("initial_state");
    DnnState st;
    st.tau = vec_from_json(require_node(s, "tau", "dnn.initial_state"), "tau");
    st.x = vec_from_json(require_node(s, "x", "dnn.initial_state"), "x");
    st.multipliers = multipliers_from_json(s, "dnn.initial_state");
    f.initial_state = st;
  }
  if (j.contains("sca")) {
    const Json& s = j.at("sca");
    ScaConfig c;
    c.h0 = vec_from_json(require_node(s, "h0", "sca"), "sca.h0");
    c.n_max = s.value("n_max", c.n_max);
    c.gamma = s.value("gamma", c.gamma);
    c.stop_L = s.value("L", c.stop_L);
    f.sca = c;
  }
  return f;
}

void save_problem_file(const std::string& path, const ProblemFile& f) {
  Json j = problem_to_json(f.problem);
  if (f.initial_state) {
    Json s = multipliers_to_json(f.initial_state->multipliers);
    s["tau"] = vec_to_json(f.initial_state->tau);
    s["x"] = vec_to_json(f.initial_state->x);
    j["dnn"]["initial_state"] = s;
  }
  if (f.sca) {
    j["sca"]["h0"] = vec_to_json(f.sca->h0);
    j["sca"]["n_max"] = f.sca->n_max;
    j["sca"]["gamma"] = f.sca->gamma;
    j["sca"]["L"] = f.sca->stop_L;
  }
  write_json(path, j);
}

Json solution_to_json(const SolutionRecord& s) {
  Json j;
  j["solver"] = s.solver;
  j["tau"] = vec_to_json(s.tau);
  j["x"] = vec_to_json(s.x);
  j["h"] = vec_to_json(s.x.array().exp().matrix());
  j["multipliers"] = multipliers_to_json(s.multipliers);
  j["objective"] = s.objective;
  Json pol = Json::array();
  for (const auto& row : s.policy) pol.push_back(vec_to_json(row));
  j["policy"] = pol;
  return j;
}

SolutionRecord solution_from_json(const Json& j) {
  SolutionRecord s;
  s.solver = require<std::string>(j, "solver", "solution");
  s.tau = vec_from_json(require_node(j, "tau", "solution"), "tau");
  s.x = vec_from_json(require_node(j, "x", "solution"), "x");
  s.multipliers = multipliers_from_json(require_node(j, "multipliers", "solution"),
                                        "multipliers");
  s.objective = require<double>(j, "objective", "solution");
  for (const auto& row : require_node(j, "policy", "solution"))
    s.policy.push_back(vec_from_json(row, "policy"));
  return s;
}

void save_solution(const std::string& path, const SolutionRecord& s) {
  write_json(path, solution_to_json(s));
}

SolutionRecord load_solution(const std::string& path) {
  return solution_from_json(read_json(path));
}

void write_json(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << j.dump(2) << "\n";
}

Json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void write_csv(const std::string& path, const CsvTable& table) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  for (size_t i = 0; i < table.header.size(); ++i)
    out << (i ? "," : "") << table.header[i];
  out << "\n";
  for (const auto& row : table.rows) {
    for (size_t i = 0; i < row.size(); ++i)
      out << (i ? "," : "") << format_double(row[i]);
    out << "\n";
  }
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(path + ": empty file");
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) t.header.push_back(cell);
  }
  size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ConfigError(path + ":" + std::to_string(lineno) + ": bad number '" +
                          cell + "'");
      }
    }
    if (row.size() != t.header.size())
      throw ConfigError(path + ":" + std::to_string(lineno) + ": wrong column count");
    t.rows.push_back(std::move(row));
  }
  return t;
}

CsvTable trajectory_table(const Trajectory& tr) {
  CsvTable t;
  t.header.push_back("t");
  const int n = tr.z.empty() ? 0 : static_cast<int>(tr.z.front().size());
  for (int i = 1; i <= n; ++i) t.header.push_back("z" + std::to_string(i));
  t.header.insert(t.header.end(), {"accuracy", "lyapunov", "objective"});
  for (size_t i = 0; i < tr.t.size(); ++i) {
    std::vector<double> row{tr.t[i]};
    row.insert(row.end(), tr.z[i].data(), tr.z[i].data() + n);
    row.push_back(tr.accuracy[i]);
    row.push_back(tr.lyapunov[i]);
    row.push_back(tr.objective[i]);
    t.rows.push_back(std::move(row));
  }
  return t;
}

CsvTable sca_history_table(const std::vector<ScaIterate>& history) {
  CsvTable t;
  t.header = {"n", "V"};
  const int K = history.empty() ? 0 : static_cast<int>(history.front().h.size());
  for (int k = 1; k <= K; ++k) t.header.push_back("h" + std::to_string(k));
  t.header.push_back("step_norm");
  for (const auto& it : history) {
    std::vector<double> row{static_cast<double>(it.n), it.V};
    row.insert(row.end(), it.h.data(), it.h.data() + K);
    row.push_back(it.step_norm);
    t.rows.push_back(std::move(row));
  }
  return t;
}

CsvTable robustness_table(const RobustnessReport& report, bool dnn) {
  CsvTable t;
  t.header = {"group", "scale", "j", "probability", "pass"};
  for (size_t g = 0; g < report.groups.size(); ++g) {
    const GroupReport& gr = report.groups[g];
    const auto& probs = dnn ? gr.dnn_probability : gr.sca_probability;
    for (size_t j = 0; j < probs.size(); ++j)
      t.rows.push_back({static_cast<double>(g + 1), gr.scale,
                        static_cast<double>(j), probs[j],
                        probs[j] >= report.threshold ? 1.0 : 0.0});
  }
  return t;
}

}  // namespace drccmdp
