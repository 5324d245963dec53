#include <gtest/gtest.h>

#include <filesystem>
#include <random>
#include <sstream>

#include "equilox/models.hpp"
#include "equilox/solver.hpp"
#include "support.hpp"

using namespace equilox;
using equilox::testing::data_path;
using equilox::testing::random_instance;
using equilox::testing::temp_dir;
using equilox::testing::tight_params;

namespace {

// max x + y  s.t.  x <= 5, x + 2y <= 8, y binary
ModelIR toy() {
  ModelIR m("toy");
  VarId x = m.add_variable("x", VarKind::kContinuous, 0.0, kInf);
  VarId y = m.add_variable("y", VarKind::kBinary, 0.0, 1.0);
  LinearExpr a;
  a.add(x, 1.0);
  m.add_constraint("cap", a, RowSense::kLessEqual, 5.0);
  LinearExpr b;
  b.add(x, 1.0).add(y, 2.0);
  m.add_constraint("mix", b, RowSense::kLessEqual, 8.0);
  LinearExpr o;
  o.add(x, 1.0).add(y, 1.0);
  m.set_objective(ObjectiveSense::kMaximize, o);
  return m;
}

bool mentions(const std::vector<std::string>& v, const std::string& what) {
  for (const auto& s : v) {
    if (s.find(what) != std::string::npos) return true;
  }
  return false;
}

}  // namespace

TEST(Solver, ToyOptimum) {
  const Solution s = solve(toy(), tight_params());
  ASSERT_EQ(s.status, SolveStatus::kOptimal) << s.message;
  EXPECT_NEAR(s.objective, 6.0, 1e-9);
  EXPECT_NEAR(s.values.at("x"), 5.0, 1e-9);
  EXPECT_NEAR(s.values.at("y"), 1.0, 1e-9);
  EXPECT_LE(s.gap, 1e-9);
}

TEST(Solver, InfeasibleModel) {
  ModelIR m = toy();
  LinearExpr e;
  e.add(m.variable_id("x"), 1.0);
  m.add_constraint("impossible", e, RowSense::kGreaterEqual, 9.0);
  const Solution s = solve(m, tight_params());
  EXPECT_EQ(s.status, SolveStatus::kInfeasible);
  EXPECT_FALSE(s.has_values());
}

TEST(Solver, LpRelaxationBoundsMip) {
  std::mt19937_64 rng(41);
  for (int t = 0; t < 4; ++t) {
    const Instance inst = random_instance(rng, {4, 2, 2, false});
    const DemandTable d = derive_demands(inst);
    const ModelIR m = build_gini(inst, d);
    SolveParams lp = tight_params();
    lp.lp_relaxation = true;
    const Solution r = solve(m, lp);
    const Solution i = solve(m, tight_params());
    ASSERT_EQ(r.status, SolveStatus::kOptimal) << r.message;
    ASSERT_EQ(i.status, SolveStatus::kOptimal) << i.message;
    EXPECT_GE(r.objective, i.objective - 1e-7);
  }
}

TEST(Solver, StatusNamesRoundTrip) {
  for (auto st : {SolveStatus::kOptimal, SolveStatus::kFeasibleLimit, SolveStatus::kInfeasible,
                  SolveStatus::kUnbounded, SolveStatus::kError}) {
    EXPECT_EQ(parse_status(to_string(st)), st);
  }
  EXPECT_FALSE(parse_status("solved").has_value());
}

TEST(Verify, PerturbedAllocationFlagsTheStockRow) {
  // Generous budgets and capacities; P fixed below total demand so every
  // stock row binds at the optimum.
  std::mt19937_64 rng(42);
  const Instance inst = random_instance(rng, {3, 1, 1, true});
  const DemandTable d = derive_demands(inst);
  ModelIR m = build_sp(inst, d);
  FirstStage fs = empty_first_stage(inst);
  for (auto& [key, v] : fs.Y) v = key.first == "small" ? 1 : 0;
  for (auto& [key, v] : fs.P) v = 1.0;
  m = fix_first_stage(m, inst, fs);
  const Solution s = solve(m, tight_params());
  ASSERT_EQ(s.status, SolveStatus::kOptimal) << s.message;
  ASSERT_TRUE(verify_feasibility(m, s.values).empty());

  // Push the largest X at location a1 up: its stock row breaks, and at most
  // that cell's own bound or cover row besides.
  const std::string loc = inst.locations[0];
  const std::string item = inst.relief_items[0].id;
  std::string target;
  for (const auto& a : inst.areas) {
    const std::string name = names::X(item, a.id, loc, d.scenario_id(0));
    if (target.empty() || s.values.at(name) > s.values.at(target)) target = name;
  }
  ASSERT_GT(s.values.at(target), 1e-6);
  auto bumped = s.values;
  bumped[target] = std::min(1.0, bumped[target] + 0.5);
  if (bumped[target] - s.values.at(target) < 1e-3) bumped[target] = s.values.at(target) * 1.5;
  const auto viol = verify_feasibility(m, bumped);
  ASSERT_FALSE(viol.empty());
  for (const auto& v : viol) {
    const bool stock = v.find("stock") != std::string::npos;
    const bool bound = v.find("bound violated: " + target) != std::string::npos;
    const bool cover = v.find("cover") != std::string::npos;
    EXPECT_TRUE(stock || bound || cover) << v;
  }
  EXPECT_TRUE(mentions(viol, "constraint violated: stock"));
}

TEST(Verify, FractionalBinaryAndMissingValue) {
  ModelIR m = toy();
  auto v = std::unordered_map<std::string, double>{{"x", 1.0}, {"y", 0.5}};
  const auto a = verify_feasibility(m, v);
  ASSERT_EQ(a.size(), 1u);
  EXPECT_TRUE(mentions(a, "integrality violated: y"));
  v.erase("x");
  EXPECT_TRUE(mentions(verify_feasibility(m, v), "missing value for variable x"));
}

TEST(Verify, ToleranceScalesWithRhs) {
  ModelIR m("scale");
  VarId x = m.add_variable("x", VarKind::kContinuous, 0.0, kInf);
  LinearExpr e;
  e.add(x, 1.0);
  m.add_constraint("big", e, RowSense::kLessEqual, 1e6);
  EXPECT_TRUE(verify_feasibility(m, {{"x", 1e6 + 0.5}}).empty());
  EXPECT_FALSE(verify_feasibility(m, {{"x", 1e6 + 2.0}}).empty());
}

TEST(Subprocess, ShimMatchesInProcess) {
  const Instance inst = load_instance(data_path("tiny.json"));
  const DemandTable d = derive_demands(inst);
  const ModelIR m = build_model(Formulation::kGini, inst, d);
  SolveParams p = tight_params();
  const Solution a = solve(m, p);
  p.solver_path = EQUILOX_SHIM;
  const Solution b = solve(m, p);
  ASSERT_EQ(a.status, SolveStatus::kOptimal) << a.message;
  ASSERT_EQ(b.status, SolveStatus::kOptimal) << b.message;
  EXPECT_NEAR(a.objective, b.objective, 1e-7);
  EXPECT_TRUE(verify_feasibility(m, b.values).empty());
}

TEST(Subprocess, MissingOrFailingExecutableIsError) {
  SolveParams p = tight_params();
  p.solver_path = "/nonexistent/highs";
  const Solution a = solve(toy(), p);
  EXPECT_EQ(a.status, SolveStatus::kError);
  EXPECT_FALSE(a.message.empty());
  p.solver_path = "/bin/false";
  EXPECT_EQ(solve(toy(), p).status, SolveStatus::kError);
}

TEST(Subprocess, ParsesRawSolutionFile) {
  std::istringstream in(
      "Model status\nOptimal\n\n# Primal solution values\nFeasible\nObjective 6\n"
      "# Columns 2\nx 5\ny 1\n# Rows 2\ncap 5\nmix 7\n\n# Dual solution values\nNone\n");
  const Solution s = detail::parse_highs_solution(in);
  EXPECT_EQ(s.status, SolveStatus::kOptimal);
  EXPECT_DOUBLE_EQ(s.objective, 6.0);
  EXPECT_DOUBLE_EQ(s.values.at("x"), 5.0);
  EXPECT_DOUBLE_EQ(s.values.at("y"), 1.0);
}

TEST(Cache, SecondCallIsServedFromDisk) {
  const std::string dir = temp_dir("cache");
  const Solution a = solve_cached(toy(), tight_params(), dir);
  EXPECT_FALSE(a.from_cache);
  std::size_t files = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    files += e.path().extension() == ".json";
  }
  EXPECT_EQ(files, 1u);
  const Solution b = solve_cached(toy(), tight_params(), dir);
  EXPECT_TRUE(b.from_cache);
  EXPECT_EQ(b.status, a.status);
  EXPECT_DOUBLE_EQ(b.objective, a.objective);
  EXPECT_EQ(b.values, a.values);
  // Different parameters, different key.
  SolveParams p = tight_params();
  p.rel_gap = 1e-3;
  EXPECT_NE(cache_key(toy(), p), cache_key(toy(), tight_params()));
  std::filesystem::remove_all(dir);
}

TEST(Cache, ErrorsAreNotCached) {
  const std::string dir = temp_dir("cache-err");
  SolveParams p = tight_params();
  p.solver_path = "/bin/false";
  EXPECT_EQ(solve_cached(toy(), p, dir).status, SolveStatus::kError);
  EXPECT_TRUE(std::filesystem::is_empty(dir));
  std::filesystem::remove_all(dir);
}
