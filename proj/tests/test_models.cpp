#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>

#include "equilox/lorenz.hpp"
#include "equilox/models.hpp"
#include "equilox/solver.hpp"
#include "support.hpp"

using namespace equilox;
using equilox::testing::data_path;
using equilox::testing::random_instance;
using equilox::testing::tight_params;

namespace {

std::map<std::string, std::size_t> family_counts(const ModelIR& m) {
  std::map<std::string, std::size_t> out;
  for (const auto& c : m.constraints()) ++out[c.name.substr(0, c.name.find('['))];
  return out;
}

const Instance& serrana() {
  static const Instance inst = load_instance(data_path("serrana.json"));
  return inst;
}

const Instance& tiny() {
  static const Instance inst = load_instance(data_path("tiny.json"));
  return inst;
}

/// Σ_s π_s U_s (1 - G_s) from extracted coverages, via the Lorenz module.
double gini_objective_from_metrics(const ValueMap& v, const Instance& inst, const DemandTable& d) {
  double obj = 0.0;
  const auto ms = extract_metrics(v, inst, d);
  for (std::size_t s = 0; s < ms.size(); ++s) {
    if (ms[s].coverage.values.empty()) continue;
    obj += d.probability(s) * objective_closed_form(rank_coverages(ms[s].coverage));
  }
  return obj;
}

}  // namespace

TEST(Models, CaseStudyFamilySizes) {
  const Instance& inst = serrana();
  const DemandTable d = derive_demands(inst);
  const ModelIR g = build_gini(inst, d);
  const auto fc = family_counts(g);
  EXPECT_EQ(fc.at("storage"), 13u);
  EXPECT_EQ(fc.at("prep_max"), 6u);
  EXPECT_EQ(fc.at("prep_min"), 13u);
  EXPECT_EQ(fc.at("single_size"), 13u);
  EXPECT_EQ(fc.at("budget_first"), 1u);
  EXPECT_EQ(fc.at("stock"), 6u * 13u * 18u);
  EXPECT_EQ(fc.at("cover"), 6u * 13u * 18u);
  EXPECT_EQ(fc.at("budget_second"), 18u);
  EXPECT_EQ(fc.at("rank_entity"), 74u);
  EXPECT_EQ(fc.at("rank_pos"), 74u);
  EXPECT_EQ(fc.at("z_ub"), 518u);
  EXPECT_EQ(fc.at("z_lb"), 518u);
  EXPECT_EQ(fc.at("z_chain"), 74u - 18u);
  EXPECT_EQ(g.num_binaries(), 52u + 518u);

  const ModelIR v = add_valid_inequality(g, inst, d);
  const auto fv = family_counts(v);
  EXPECT_EQ(fv.at("h_low"), 74u);
  EXPECT_EQ(fv.at("h_up"), 74u);
  EXPECT_EQ(fv.at("vi"), 18u);

  BuildOptions bo;
  bo.clusters = inst.clusters_k;
  const ModelIR c = build_model(Formulation::kGiniC, inst, d, bo);
  std::size_t k2 = 0;
  for (int k : *inst.clusters_k) k2 += static_cast<std::size_t>(k * k);
  EXPECT_EQ(c.num_binaries(), 52u + k2);

  const ModelIR gmd = build_gmd(inst, d);
  EXPECT_EQ(family_counts(gmd).at("gmd_pos"), 18u * 78u);

  // Partial-sum cuts: k rows and k(k-1) excess rows per scenario.
  const auto gc = family_counts(build_gini(inst, d, true));
  EXPECT_EQ(gc.at("rank_cut"), 74u);
  EXPECT_EQ(gc.at("rank_excess"), 518u - 74u);
  bo.ranking_cuts = true;
  const auto cc = family_counts(build_model(Formulation::kGiniC, inst, d, bo));
  std::size_t k1 = 0;
  for (int k : *inst.clusters_k) k1 += static_cast<std::size_t>(k);
  EXPECT_EQ(cc.at("rank_cut"), k1);
  EXPECT_EQ(cc.count("rank_excess") ? cc.at("rank_excess") : 0u, k2 - k1);
}

TEST(Models, SpObjectiveIsExpectedEffectiveness) {
  const Instance& inst = tiny();
  const DemandTable d = derive_demands(inst);
  const Solution s = solve(build_sp(inst, d), tight_params());
  ASSERT_EQ(s.status, SolveStatus::kOptimal) << s.message;
  double eu = 0.0;
  const auto ms = extract_metrics(s.values, inst, d);
  for (std::size_t k = 0; k < ms.size(); ++k) eu += d.probability(k) * ms[k].effectiveness;
  EXPECT_NEAR(s.objective, eu, 1e-7);
  EXPECT_GT(s.objective, 0.0);
  EXPECT_LT(s.objective, 1.0);  // budgets bind on the toy
}

TEST(Models, GiniObjectiveMatchesLorenzOnSolution) {
  std::mt19937_64 rng(31);
  for (int t = 0; t < 6; ++t) {
    const Instance inst = random_instance(rng, {4, 2, 2, false});
    const DemandTable d = derive_demands(inst);
    const Solution s = solve(build_gini(inst, d), tight_params());
    ASSERT_EQ(s.status, SolveStatus::kOptimal) << s.message;
    EXPECT_NEAR(s.objective, gini_objective_from_metrics(s.values, inst, d), 1e-6);
  }
}

TEST(Models, GmdObjectiveMatchesMeanDifference) {
  std::mt19937_64 rng(32);
  for (int t = 0; t < 4; ++t) {
    const Instance inst = random_instance(rng, {4, 2, 2, false});
    const DemandTable d = derive_demands(inst);
    const Solution s = solve(build_gmd(inst, d), tight_params());
    ASSERT_EQ(s.status, SolveStatus::kOptimal) << s.message;
    const auto rho = gmd_proportions(d);
    double expected = 0.0;
    for (std::size_t k = 0; k < d.num_scenarios(); ++k) {
      CoverageVector all;
      std::vector<double> props;
      double cov_sum = 0.0;
      for (std::size_t a = 0; a < inst.num_areas(); ++a) {
        double c = 0.0;
        for (std::size_t r = 0; r < inst.num_items(); ++r) {
          for (std::size_t n = 0; n < inst.num_locations(); ++n) {
            c += d.u(r, a, k) * s.values.at(names::X(inst.relief_items[r].id, inst.areas[a].id,
                                                     inst.locations[n], d.scenario_id(k)));
          }
        }
        all.values.push_back(std::max(c, 0.0));
        props.push_back(rho[a][k]);
        cov_sum += c;
      }
      double pen = 0.0;
      if (cov_sum > 1e-12) pen = mean_difference_gini(all, props) * cov_sum;
      expected += d.probability(k) * (cov_sum - pen);
    }
    EXPECT_NEAR(s.objective, expected, 1e-6);
  }
}

TEST(Models, GiniCWithOneClusterEqualsSp) {
  const Instance& inst = tiny();
  const DemandTable d = derive_demands(inst);
  BuildOptions bo;
  bo.clusters = std::vector<int>{1, 1};
  const Solution c = solve(build_model(Formulation::kGiniC, inst, d, bo), tight_params());
  const Solution s = solve(build_sp(inst, d), tight_params());
  ASSERT_EQ(c.status, SolveStatus::kOptimal);
  EXPECT_NEAR(c.objective, s.objective, 1e-7);
}

TEST(Models, ValidInequalityKeepsOptimumOnToy) {
  const Instance& inst = tiny();
  const DemandTable d = derive_demands(inst);
  const ModelIR g = build_gini(inst, d);
  const ModelIR v = add_valid_inequality(g, inst, d);
  const Solution a = solve(g, tight_params());
  const Solution b = solve(v, tight_params());
  ASSERT_EQ(a.status, SolveStatus::kOptimal);
  ASSERT_EQ(b.status, SolveStatus::kOptimal);
  EXPECT_NEAR(a.objective, b.objective, 1e-6);
}

TEST(Models, ValidInequalityRequiresGiniModel) {
  const Instance& inst = tiny();
  const DemandTable d = derive_demands(inst);
  EXPECT_THROW(add_valid_inequality(build_sp(inst, d), inst, d), std::invalid_argument);
  BuildOptions bo;
  bo.clusters = std::vector<int>{1, 2};
  EXPECT_THROW(add_valid_inequality(build_model(Formulation::kGiniC, inst, d, bo), inst, d),
               std::invalid_argument);
}

TEST(Models, GiniCRejectsBadClusterings) {
  const Instance& inst = tiny();
  const DemandTable d = derive_demands(inst);
  auto cs = singleton_clusterings(d);
  cs.pop_back();
  EXPECT_THROW(build_ginic(inst, d, cs), std::invalid_argument);
  cs = singleton_clusterings(d);
  cs[0].areas.push_back(2);
  cs[0].assignment.push_back(0);
  EXPECT_THROW(build_ginic(inst, d, cs), std::invalid_argument);
}

TEST(Models, FirstStageFixingAndJson) {
  const Instance& inst = tiny();
  const DemandTable d = derive_demands(inst);
  const Solution s = solve(build_sp(inst, d), tight_params());
  ASSERT_TRUE(s.has_values());
  const FirstStage fs = first_stage_from(s.values, inst);
  EXPECT_EQ(first_stage_from_json(to_json(fs), inst), fs);

  const ModelIR fixed = fix_first_stage(build_gini(inst, d), inst, fs);
  for (const auto& [key, v] : fs.Y) {
    const Variable& var = fixed.variables()[fixed.variable_id(names::Y(key.first, key.second))];
    EXPECT_EQ(var.lower, v);
    EXPECT_EQ(var.upper, v);
  }
  FirstStage missing = fs;
  missing.P.erase(missing.P.begin());
  EXPECT_THROW(fix_first_stage(build_sp(inst, d), inst, missing), std::invalid_argument);
  FirstStage extra = fs;
  extra.Y[{"huge", "north"}] = 1;
  EXPECT_THROW(fix_first_stage(build_sp(inst, d), inst, extra), std::invalid_argument);
}

TEST(Models, EmptyPlanCoversNothing) {
  const Instance& inst = tiny();
  const DemandTable d = derive_demands(inst);
  const ModelIR m = fix_first_stage(build_sp(inst, d), inst, empty_first_stage(inst));
  const Solution s = solve(m, tight_params());
  ASSERT_EQ(s.status, SolveStatus::kOptimal);
  EXPECT_NEAR(s.objective, 0.0, 1e-9);
}

TEST(Models, FormulationNames) {
  for (const char* n : {"sp", "gmd", "gini", "ginic"}) {
    ASSERT_TRUE(parse_formulation(n).has_value());
    EXPECT_EQ(to_string(*parse_formulation(n)), n);
  }
  EXPECT_FALSE(parse_formulation("lorenz").has_value());
}

TEST(ModelsProperty, RhsPerturbationFlipsFeasibilityPerFamily) {
  // For every row family: an optimal point satisfies it; moving one binding
  // row's rhs past the point's activity makes exactly that row fail.
  const Instance& inst = tiny();
  const DemandTable d = derive_demands(inst);
  ModelIR m = add_valid_inequality(build_gini(inst, d), inst, d);
  const Solution s = solve(m, tight_params());
  ASSERT_EQ(s.status, SolveStatus::kOptimal);
  ASSERT_TRUE(verify_feasibility(m, s.values).empty());
  std::map<std::string, bool> flipped;
  for (std::size_t i = 0; i < m.constraints().size(); ++i) {
    const Constraint& c = m.constraints()[i];
    const std::string family = c.name.substr(0, c.name.find('['));
    if (flipped[family]) continue;
    double lhs = 0.0;
    for (const Term& t : c.terms) lhs += t.coef * s.values.at(m.variables()[t.var].name);
    // Rebuild with only this row's rhs moved.
    ModelIR p(m.name());
    for (const Variable& v : m.variables()) p.add_variable(v.name, v.kind, v.lower, v.upper);
    for (std::size_t j = 0; j < m.constraints().size(); ++j) {
      const Constraint& r = m.constraints()[j];
      LinearExpr re;
      for (const Term& t : r.terms) re.add(t.var, t.coef);
      double rhs = r.rhs;
      if (j == i) {
        const double shift = 1e-3 * std::max({1.0, std::fabs(r.rhs), std::fabs(lhs)});
        rhs = r.sense == RowSense::kGreaterEqual ? lhs + shift : lhs - shift;
      }
      p.add_constraint(r.name, re, r.sense, rhs);
    }
    const auto viol = verify_feasibility(p, s.values);
    ASSERT_EQ(viol.size(), 1u) << c.name;
    EXPECT_NE(viol[0].find(c.name), std::string::npos);
    flipped[family] = true;
  }
  for (const char* fam : {"storage", "prep_max", "prep_min", "single_size", "budget_first",
                          "stock", "cover", "budget_second", "rank_entity", "rank_pos", "z_ub",
                          "z_lb", "z_chain", "h_low", "h_up", "vi"}) {
    EXPECT_TRUE(flipped[fam]) << fam;
  }
}

TEST(ModelsProperty, SpDominatesExpectedCoverage) {
  std::mt19937_64 rng(33);
  for (int t = 0; t < 5; ++t) {
    const Instance inst = random_instance(rng, {4, 2, 2, false});
    const DemandTable d = derive_demands(inst);
    const Solution sp = solve(build_sp(inst, d), tight_params());
    ASSERT_EQ(sp.status, SolveStatus::kOptimal);
    for (Formulation f : {Formulation::kGMD, Formulation::kGini, Formulation::kGiniC}) {
      const Solution s = solve(build_model(f, inst, d), tight_params());
      ASSERT_EQ(s.status, SolveStatus::kOptimal) << to_string(f);
      double eu = 0.0;
      const auto ms = extract_metrics(s.values, inst, d);
      for (std::size_t k = 0; k < ms.size(); ++k) eu += d.probability(k) * ms[k].effectiveness;
      EXPECT_GE(sp.objective, eu - 1e-7) << to_string(f);
    }
  }
}

TEST(Models, FixingOwnPlanKeepsOptimum) {
  std::mt19937_64 rng(34);
  for (int t = 0; t < 4; ++t) {
    const Instance inst = random_instance(rng, {4, 2, 2, false});
    const DemandTable d = derive_demands(inst);
    for (Formulation f : {Formulation::kSP, Formulation::kGini}) {
      const ModelIR m = build_model(f, inst, d);
      const Solution s = solve(m, tight_params());
      ASSERT_EQ(s.status, SolveStatus::kOptimal);
      const Solution again =
          solve(fix_first_stage(m, inst, first_stage_from(s.values, inst)), tight_params());
      ASSERT_EQ(again.status, SolveStatus::kOptimal);
      EXPECT_NEAR(again.objective, s.objective, 1e-6) << to_string(f);
    }
  }
}

TEST(ModelsProperty, RankingCutsKeepOptimumAndTightenLp) {
  std::mt19937_64 rng(35);
  for (int t = 0; t < 6; ++t) {
    const Instance inst = random_instance(rng, {3 + static_cast<std::size_t>(t % 3), 2, 2, false});
    const DemandTable d = derive_demands(inst);
    for (Formulation f : {Formulation::kGini, Formulation::kGiniC}) {
      BuildOptions plain;
      BuildOptions cut;
      cut.ranking_cuts = true;
      const ModelIR a = build_model(f, inst, d, plain);
      const ModelIR b = build_model(f, inst, d, cut);
      const Solution sa = solve(a, tight_params());
      const Solution sb = solve(b, tight_params());
      ASSERT_EQ(sa.status, SolveStatus::kOptimal) << to_string(f);
      ASSERT_EQ(sb.status, SolveStatus::kOptimal) << to_string(f);
      EXPECT_NEAR(sa.objective, sb.objective, 1e-6) << to_string(f);
      EXPECT_TRUE(verify_feasibility(b, sb.values).empty());
      SolveParams lp = tight_params();
      lp.lp_relaxation = true;
      EXPECT_LE(solve(b, lp).objective, solve(a, lp).objective + 1e-7) << to_string(f);
    }
  }
}

TEST(ModelsProperty, RankingCutsMakeFixedPlanLpExact) {
  // With the plan pinned everything left is continuous except O, and the
  // cuts leave nothing for O to decide.
  std::mt19937_64 rng(36);
  SolveParams lp = tight_params();
  lp.lp_relaxation = true;
  for (int t = 0; t < 6; ++t) {
    const Instance inst = random_instance(rng, {5, 2, 2, false});
    const DemandTable d = derive_demands(inst);
    const Solution sp = solve(build_sp(inst, d), tight_params());
    ASSERT_EQ(sp.status, SolveStatus::kOptimal);
    const FirstStage plan = first_stage_from(sp.values, inst);
    BuildOptions bo;
    bo.ranking_cuts = true;
    const ModelIR m = fix_first_stage(build_model(Formulation::kGini, inst, d, bo), inst, plan);
    const Solution mip = solve(m, tight_params());
    const Solution rel = solve(m, lp);
    ASSERT_EQ(mip.status, SolveStatus::kOptimal);
    ASSERT_EQ(rel.status, SolveStatus::kOptimal);
    EXPECT_NEAR(rel.objective, mip.objective, 1e-7);
  }
}
