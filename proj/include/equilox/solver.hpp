#ifndef EQUILOX_SOLVER_HPP_
#define EQUILOX_SOLVER_HPP_

// Solves a ModelIR with HiGHS, either linked in-process or through an
// external HiGHS-compatible executable fed with free MPS. Every accepted
// solution is re-checked against the model by verify_feasibility.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Highs.h>
#include <json.hpp>

#include "equilox/model_ir.hpp"

namespace equilox {

struct SolveParams {
  double time_limit_s = 3600.0;
  double rel_gap = 1e-5;
  double abs_gap = 1e-6;
  int threads = 0;  // 0: solver default
  int seed = 0;
  bool lp_relaxation = false;
  std::string solver_path;  // empty: in-process HiGHS

  std::string describe() const {
    std::ostringstream os;
    os.precision(17);
    os << "time_limit=" << time_limit_s << ";rel_gap=" << rel_gap << ";abs_gap=" << abs_gap
       << ";threads=" << threads
       << ";seed=" << seed << ";lp_relaxation=" << lp_relaxation;
    return os.str();
  }
};

enum class SolveStatus { kOptimal, kFeasibleLimit, kInfeasible, kUnbounded, kError };

inline std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kOptimal: return "optimal";
    case SolveStatus::kFeasibleLimit: return "feasible_limit";
    case SolveStatus::kInfeasible: return "infeasible";
    case SolveStatus::kUnbounded: return "unbounded";
    case SolveStatus::kError: return "error";
  }
  return "error";
}

inline std::optional<SolveStatus> parse_status(std::string_view s) {
  for (auto st : {SolveStatus::kOptimal, SolveStatus::kFeasibleLimit, SolveStatus::kInfeasible,
                  SolveStatus::kUnbounded, SolveStatus::kError}) {
    if (to_string(st) == s) return st;
  }
  return std::nullopt;
}

struct Solution {
  SolveStatus status = SolveStatus::kError;
  std::unordered_map<std::string, double> values;
  double objective = std::numeric_limits<double>::quiet_NaN();
  double best_bound = std::numeric_limits<double>::quiet_NaN();
  double gap = std::numeric_limits<double>::quiet_NaN();
  double wall_time_s = 0.0;
  std::string message;
  bool from_cache = false;

  bool has_values() const {
    return status == SolveStatus::kOptimal || status == SolveStatus::kFeasibleLimit;
  }
};

inline constexpr double kFeasibilityTolerance = 1e-6;
inline constexpr double kGapEpsilon = 1e-10;

inline double relative_gap(double objective, double bound) {
  if (std::isnan(objective) || std::isnan(bound)) return std::numeric_limits<double>::quiet_NaN();
  return std::fabs(objective - bound) / std::max(std::fabs(objective), kGapEpsilon);
}

/// Every bound, integrality or row violation beyond `tol`; row tolerances
/// scale with max(1, |rhs|). Missing values are violations too.
inline std::vector<std::string> verify_feasibility(
    const ModelIR& model, const std::unordered_map<std::string, double>& values,
    double tol = kFeasibilityTolerance) {
  std::vector<std::string> out;
  std::vector<double> x(model.variables().size(), 0.0);
  std::vector<bool> present(x.size(), true);
  for (std::size_t j = 0; j < x.size(); ++j) {
    const Variable& v = model.variables()[j];
    auto it = values.find(v.name);
    if (it == values.end()) {
      out.push_back("missing value for variable " + v.name);
      present[j] = false;
      continue;
    }
    x[j] = it->second;
    if (x[j] < v.lower - tol || x[j] > v.upper + tol) {
      std::ostringstream os;
      os << "bound violated: " << v.name << " = " << x[j] << " outside [" << v.lower << ", "
         << v.upper << "]";
      out.push_back(os.str());
    }
    if (v.kind == VarKind::kBinary && std::fabs(x[j] - std::round(x[j])) > tol) {
      std::ostringstream os;
      os << "integrality violated: " << v.name << " = " << x[j];
      out.push_back(os.str());
    }
  }
  for (const Constraint& c : model.constraints()) {
    double lhs = 0.0;
    bool complete = true;
    for (const Term& t : c.terms) {
      if (!present[t.var]) complete = false;
      lhs += t.coef * x[t.var];
    }
    if (!complete) continue;
    const double slack_tol = tol * std::max(1.0, std::fabs(c.rhs));
    bool bad = false;
    switch (c.sense) {
      case RowSense::kLessEqual: bad = lhs > c.rhs + slack_tol; break;
      case RowSense::kGreaterEqual: bad = lhs < c.rhs - slack_tol; break;
      case RowSense::kEqual: bad = std::fabs(lhs - c.rhs) > slack_tol; break;
    }
    if (bad) {
      std::ostringstream os;
      os.precision(12);
      os << "constraint violated: " << c.name << " (lhs " << lhs << ", rhs " << c.rhs << ")";
      out.push_back(os.str());
    }
  }
  return out;
}

inline double evaluate_objective(const ModelIR& model,
                                 const std::unordered_map<std::string, double>& values) {
  double v = model.objective().constant;
  for (const Term& t : model.objective().terms) {
    auto it = values.find(model.variables()[t.var].name);
    if (it != values.end()) v += t.coef * it->second;
  }
  return v;
}

namespace detail {

inline Solution solve_in_process(const ModelIR& model, const SolveParams& params) {
  const auto& vars = model.variables();
  const auto& rows = model.constraints();
  HighsLp lp;
  lp.num_col_ = static_cast<HighsInt>(vars.size());
  lp.num_row_ = static_cast<HighsInt>(rows.size());
  lp.sense_ = model.objective().sense == ObjectiveSense::kMaximize ? ::ObjSense::kMaximize
                                                             : ::ObjSense::kMinimize;
  lp.offset_ = model.objective().constant;
  lp.col_cost_.assign(vars.size(), 0.0);
  for (const Term& t : model.objective().terms) lp.col_cost_[t.var] = t.coef;
  bool any_integer = false;
  lp.integrality_.assign(vars.size(), HighsVarType::kContinuous);
  for (std::size_t j = 0; j < vars.size(); ++j) {
    lp.col_lower_.push_back(std::isinf(vars[j].lower) ? -kHighsInf : vars[j].lower);
    lp.col_upper_.push_back(std::isinf(vars[j].upper) ? kHighsInf : vars[j].upper);
    if (vars[j].kind == VarKind::kBinary && !params.lp_relaxation) {
      lp.integrality_[j] = HighsVarType::kInteger;
      any_integer = true;
    }
  }
  if (!any_integer) lp.integrality_.clear();
  // Column-wise copy of the row-major model.
  std::vector<HighsInt> count(vars.size() + 1, 0);
  for (const Constraint& c : rows) {
    for (const Term& t : c.terms) ++count[t.var + 1];
  }
  for (std::size_t j = 0; j < vars.size(); ++j) count[j + 1] += count[j];
  lp.a_matrix_.format_ = MatrixFormat::kColwise;
  lp.a_matrix_.num_col_ = lp.num_col_;
  lp.a_matrix_.num_row_ = lp.num_row_;
  lp.a_matrix_.start_ = count;
  lp.a_matrix_.index_.resize(static_cast<std::size_t>(count.back()));
  lp.a_matrix_.value_.resize(static_cast<std::size_t>(count.back()));
  std::vector<HighsInt> next(count.begin(), count.end() - 1);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Constraint& c = rows[i];
    for (const Term& t : c.terms) {
      const auto slot = static_cast<std::size_t>(next[t.var]++);
      lp.a_matrix_.index_[slot] = static_cast<HighsInt>(i);
      lp.a_matrix_.value_[slot] = t.coef;
    }
    switch (c.sense) {
      case RowSense::kLessEqual:
        lp.row_lower_.push_back(-kHighsInf);
        lp.row_upper_.push_back(c.rhs);
        break;
      case RowSense::kGreaterEqual:
        lp.row_lower_.push_back(c.rhs);
        lp.row_upper_.push_back(kHighsInf);
        break;
      case RowSense::kEqual:
        lp.row_lower_.push_back(c.rhs);
        lp.row_upper_.push_back(c.rhs);
        break;
    }
  }

  Highs highs;
  highs.setOptionValue("output_flag", false);
  highs.setOptionValue("time_limit", params.time_limit_s);
  highs.setOptionValue("mip_rel_gap", params.rel_gap);
  highs.setOptionValue("mip_abs_gap", params.abs_gap);
  highs.setOptionValue("random_seed", params.seed);
  if (params.threads > 0) highs.setOptionValue("threads", params.threads);

  Solution sol;
  if (highs.passModel(std::move(lp)) == HighsStatus::kError) {
    sol.message = "HiGHS rejected the model";
    return sol;
  }
  const HighsStatus run = highs.run();
  const HighsModelStatus ms = highs.getModelStatus();
  const HighsInfo& info = highs.getInfo();
  sol.message = highs.modelStatusToString(ms);
  const bool have_primal = info.primal_solution_status == kSolutionStatusFeasible;

  switch (ms) {
    case HighsModelStatus::kOptimal:
      sol.status = SolveStatus::kOptimal;
      break;
    case HighsModelStatus::kInfeasible:
      sol.status = SolveStatus::kInfeasible;
      break;
    case HighsModelStatus::kUnbounded:
    case HighsModelStatus::kUnboundedOrInfeasible:
      sol.status = SolveStatus::kUnbounded;
      break;
    case HighsModelStatus::kTimeLimit:
    case HighsModelStatus::kIterationLimit:
    case HighsModelStatus::kSolutionLimit:
    case HighsModelStatus::kInterrupt:
    case HighsModelStatus::kMemoryLimit:
    case HighsModelStatus::kObjectiveBound:
    case HighsModelStatus::kObjectiveTarget:
      sol.status = have_primal ? SolveStatus::kFeasibleLimit : SolveStatus::kError;
      if (!have_primal) sol.message += " without an incumbent";
      break;
    default:
      sol.status = SolveStatus::kError;
      break;
  }
  if (run == HighsStatus::kError && sol.status != SolveStatus::kInfeasible) {
    sol.status = SolveStatus::kError;
  }
  if (sol.has_values()) {
    const HighsSolution& hs = highs.getSolution();
    sol.values.reserve(vars.size());
    for (std::size_t j = 0; j < vars.size(); ++j) sol.values.emplace(vars[j].name, hs.col_value[j]);
    sol.objective = info.objective_function_value;
    sol.best_bound = any_integer ? info.mip_dual_bound : sol.objective;
    if (!any_integer && sol.status == SolveStatus::kOptimal) sol.gap = 0.0;
  }
  return sol;
}

inline std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out += "'\\''";
    else out += c;
  }
  return out + "'";
}

inline std::string tail_of(const std::string& path, std::size_t max_bytes = 4000) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return {};
  std::ostringstream os;
  os << in.rdbuf();
  std::string s = os.str();
  if (s.size() > max_bytes) s = s.substr(s.size() - max_bytes);
  return s;
}

/// Reads a raw-style HiGHS solution file.
inline Solution parse_highs_solution(std::istream& in) {
  Solution sol;
  std::string line;
  std::string status_text;
  while (std::getline(in, line)) {
    if (line == "Model status") {
      std::getline(in, status_text);
      break;
    }
  }
  if (status_text.empty()) {
    sol.message = "solution file has no model status";
    return sol;
  }
  sol.message = status_text;
  if (status_text == "Optimal") sol.status = SolveStatus::kOptimal;
  else if (status_text == "Infeasible") sol.status = SolveStatus::kInfeasible;
  else if (status_text == "Unbounded" || status_text == "Primal infeasible or unbounded")
    sol.status = SolveStatus::kUnbounded;
  else if (status_text.find("limit") != std::string::npos ||
           status_text.find("Interrupted") != std::string::npos)
    sol.status = SolveStatus::kFeasibleLimit;
  else sol.status = SolveStatus::kError;

  bool feasible = false;
  while (std::getline(in, line)) {
    if (line == "# Primal solution values") {
      std::getline(in, line);
      feasible = line == "Feasible";
      continue;
    }
    if (line.rfind("Objective ", 0) == 0) {
      sol.objective = std::stod(line.substr(10));
      continue;
    }
    if (line.rfind("# Columns ", 0) == 0) {
      const long count = std::stol(line.substr(10));
      for (long i = 0; i < count && std::getline(in, line); ++i) {
        std::istringstream ls(line);
        std::string name, value;
        ls >> name >> value;
        sol.values[name] = std::stod(value);
      }
      break;
    }
  }
  if (sol.status == SolveStatus::kFeasibleLimit && !feasible) {
    sol.status = SolveStatus::kError;
    sol.message += " without an incumbent";
  }
  if (!sol.has_values()) {
    sol.values.clear();
  } else if (sol.status == SolveStatus::kOptimal) {
    sol.best_bound = sol.objective;
  }
  return sol;
}

inline Solution solve_subprocess(const ModelIR& model, const SolveParams& params) {
  namespace fs = std::filesystem;
  Solution sol;
  if (!fs::exists(params.solver_path)) {
    sol.message = "solver executable not found: " + params.solver_path;
    return sol;
  }
  std::random_device rd;
  const fs::path dir =
      fs::temp_directory_path() / ("equilox-" + hex64(fnv1a(params.describe(), rd())));
  fs::create_directories(dir);
  const ModelIR to_write = params.lp_relaxation ? model.relaxed() : model;
  const fs::path mps = dir / "model.mps";
  const fs::path sol_file = dir / "model.sol";
  const fs::path opts = dir / "options.txt";
  const fs::path log = dir / "solver.log";
  write_text_file(mps.string(), to_mps(to_write, MpsFormat::kFree));
  {
    std::ostringstream os;
    os.precision(17);
    os << "time_limit = " << params.time_limit_s << "\nmip_rel_gap = " << params.rel_gap
       << "\nmip_abs_gap = " << params.abs_gap
       << "\nrandom_seed = " << params.seed << '\n';
    if (params.threads > 0) os << "threads = " << params.threads << '\n';
    write_text_file(opts.string(), os.str());
  }
  const std::string cmd = shell_quote(params.solver_path) + " --model_file " +
                          shell_quote(mps.string()) + " --solution_file " +
                          shell_quote(sol_file.string()) + " --options_file " +
                          shell_quote(opts.string()) + " > " + shell_quote(log.string()) +
                          " 2>&1";
  const int rc = std::system(cmd.c_str());
  std::ifstream in(sol_file);
  if (rc != 0 || !in) {
    sol.message = "solver exited with code " + std::to_string(rc) + "\n" + tail_of(log.string());
    std::error_code ec;
    fs::remove_all(dir, ec);
    return sol;
  }
  sol = parse_highs_solution(in);
  in.close();
  std::error_code ec;
  fs::remove_all(dir, ec);
  return sol;
}

}  // namespace detail

/// Solves and independently verifies the returned point. A point that
/// fails verification turns the status into kError with the violations
/// listed in `message`.
inline Solution solve(const ModelIR& model, const SolveParams& params) {
  const auto start = std::chrono::steady_clock::now();
  Solution sol;
  try {
    sol = params.solver_path.empty() ? detail::solve_in_process(model, params)
                                     : detail::solve_subprocess(model, params);
  } catch (const std::exception& e) {
    sol = Solution{};
    sol.message = std::string("solver bridge failure: ") + e.what();
  }
  sol.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (sol.has_values()) {
    const ModelIR& checked = params.lp_relaxation ? model.relaxed() : model;
    auto violations = verify_feasibility(checked, sol.values);
    if (!violations.empty()) {
      sol.status = SolveStatus::kError;
      sol.message = "solver returned an infeasible point:";
      for (std::size_t i = 0; i < violations.size() && i < 20; ++i) {
        sol.message += "\n  " + violations[i];
      }
    }
    if (std::isnan(sol.objective)) sol.objective = evaluate_objective(model, sol.values);
    if (sol.status == SolveStatus::kOptimal && std::isnan(sol.best_bound)) {
      sol.best_bound = sol.objective;
    }
    sol.gap = relative_gap(sol.objective, sol.best_bound);
  }
  return sol;
}

// ---------------------------------------------------------------------------
// Disk cache keyed by (model, params).

inline nlohmann::json to_json(const Solution& s) {
  auto num = [](double v) -> nlohmann::json {
    if (std::isnan(v)) return nullptr;
    return v;
  };
  nlohmann::json j;
  j["status"] = to_string(s.status);
  j["objective"] = num(s.objective);
  j["best_bound"] = num(s.best_bound);
  j["gap"] = num(s.gap);
  j["wall_time_s"] = s.wall_time_s;
  j["message"] = s.message;
  // Sorted for byte-stable files.
  std::map<std::string, double> sorted(s.values.begin(), s.values.end());
  j["values"] = sorted;
  return j;
}

inline Solution solution_from_json(const nlohmann::json& j) {
  auto num = [](const nlohmann::json& v) {
    return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
  };
  Solution s;
  s.status = parse_status(j.at("status").get<std::string>()).value_or(SolveStatus::kError);
  s.objective = num(j.at("objective"));
  s.best_bound = num(j.at("best_bound"));
  s.gap = num(j.at("gap"));
  s.wall_time_s = j.value("wall_time_s", 0.0);
  s.message = j.value("message", "");
  for (const auto& [k, v] : j.at("values").items()) s.values.emplace(k, v.get<double>());
  return s;
}

inline std::string cache_key(const ModelIR& model, const SolveParams& params) {
  std::uint64_t h = fnv1a(to_mps(model, MpsFormat::kFree));
  h = fnv1a(params.describe(), h);
  return hex64(h);
}

/// solve() behind a content-addressed cache at <dir>/<key>.json. Error
/// results are never cached. Writes go through a temp file and rename, so
/// concurrent writers of the same key are safe.
inline Solution solve_cached(const ModelIR& model, const SolveParams& params,
                             const std::string& cache_dir) {
  namespace fs = std::filesystem;
  if (cache_dir.empty()) return solve(model, params);
  const std::string key = cache_key(model, params);
  const fs::path file = fs::path(cache_dir) / (key + ".json");
  if (fs::exists(file)) {
    try {
      std::ifstream in(file);
      Solution s = solution_from_json(nlohmann::json::parse(in));
      s.from_cache = true;
      return s;
    } catch (const std::exception&) {
      // Unreadable entry: fall through and recompute.
    }
  }
  Solution s = solve(model, params);
  if (s.status != SolveStatus::kError) {
    fs::create_directories(cache_dir);
    std::random_device rd;
    const fs::path tmp = fs::path(cache_dir) / (key + ".tmp" + std::to_string(rd()));
    write_text_file(tmp.string(), to_json(s).dump());
    fs::rename(tmp, file);
  }
  return s;
}

}  // namespace equilox

#endif  // EQUILOX_SOLVER_HPP_
