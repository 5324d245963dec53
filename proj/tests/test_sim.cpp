#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "equilox/lorenz.hpp"
#include "equilox/sim.hpp"
#include "support.hpp"

using namespace equilox;
using equilox::testing::cov_percent;
using equilox::testing::data_path;
using equilox::testing::temp_dir;
using equilox::testing::tight_params;

namespace {

using Groups = std::vector<std::pair<std::string, std::vector<EvalRecord>>>;

EvalRecord rec(const std::string& f, const std::string& id, double u, std::optional<double> g) {
  EvalRecord r;
  r.formulation = f;
  r.realization = id;
  r.status = SolveStatus::kOptimal;
  r.gap = 0.0;
  r.U_star = u;
  r.G_star = g;
  return r;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t line_count(const std::string& text) {
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

const Instance& tiny() {
  static const Instance inst = load_instance(data_path("tiny.json"));
  return inst;
}

}  // namespace

TEST(Sampling, FixedCellsStayFixed) {
  // One scenario: every range collapses to a point.
  DemandTable d({"only"}, {1.0}, 2, 2, std::vector<double>{5, 0, 7, 3});
  for (const auto& r : sample_realizations(d, 5, 9)) {
    EXPECT_EQ(r.demand.d(0, 0, 0), 5.0);
    EXPECT_EQ(r.demand.d(0, 1, 0), 0.0);
    EXPECT_EQ(r.demand.d(1, 0, 0), 7.0);
    EXPECT_EQ(r.demand.d(1, 1, 0), 3.0);
  }
}

TEST(Sampling, DeterministicAndWithinRange) {
  const DemandTable d = derive_demands(load_instance(data_path("serrana.json")));
  const auto a = sample_realizations(d, 30, 1234);
  const auto b = sample_realizations(d, 30, 1234);
  const auto c = sample_realizations(d, 30, 1235);
  const DemandRange range = demand_range(d);
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].id, realization_id(i));
    for (std::size_t r = 0; r < d.num_items(); ++r) {
      for (std::size_t k = 0; k < d.num_areas(); ++k) {
        const double v = a[i].demand.d(r, k, 0);
        EXPECT_EQ(v, b[i].demand.d(r, k, 0));
        differs = differs || v != c[i].demand.d(r, k, 0);
        EXPECT_GE(v, range.lo[r * d.num_areas() + k]);
        EXPECT_LE(v, range.hi[r * d.num_areas() + k]);
        EXPECT_EQ(v, std::floor(v));
        // Independent range: min/max over scenarios.
        double lo = 1e300, hi = -1.0;
        for (std::size_t s = 0; s < d.num_scenarios(); ++s) {
          lo = std::min(lo, d.d(r, k, s));
          hi = std::max(hi, d.d(r, k, s));
        }
        EXPECT_GE(v, lo);
        EXPECT_LE(v, hi);
      }
    }
  }
  EXPECT_TRUE(differs);
  EXPECT_EQ(realization_id(0), "sim001");
  EXPECT_EQ(realization_id(99), "sim100");
  EXPECT_THROW(sample_realizations(d, 0, 1), std::invalid_argument);
}

TEST(Sampling, ContinuousDrawsCanBeFractional) {
  DemandTable d({"a", "b"}, {0.5, 0.5}, 1, 1, std::vector<double>{0, 100});
  bool fractional = false;
  for (const auto& r : sample_realizations(d, 20, 3, true)) {
    const double v = r.demand.d(0, 0, 0);
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 100.0);
    fractional = fractional || v != std::floor(v);
  }
  EXPECT_TRUE(fractional);
}

TEST(PostHoc, AgreesWithLorenzAndPairwise) {
  std::mt19937_64 rng(51);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 500; ++t) {
    std::vector<double> v(1 + rng() % 13);
    for (double& x : v) x = u(rng);
    const auto g = post_hoc_gini(v);
    ASSERT_TRUE(g.has_value());
    EXPECT_NEAR(*g, compute_gini(CoverageVector{v, {}}).gini, 1e-9);
    EXPECT_NEAR(*g, equilox::testing::gini_pairwise(v), 1e-9);
  }
  EXPECT_FALSE(post_hoc_gini({0.0, 0.0}).has_value());
  EXPECT_FALSE(post_hoc_gini({}).has_value());
}

TEST(Evaluate, ZeroPlanIsDegenerate) {
  const Instance& inst = tiny();
  const DemandTable d = derive_demands(inst);
  const auto reals = sample_realizations(d, 2, 7);
  EvalOptions opts;
  opts.params = tight_params();
  const auto recs = evaluate(Formulation::kSP, inst, empty_first_stage(inst), reals, opts);
  ASSERT_EQ(recs.size(), 2u);
  for (const auto& r : recs) {
    ASSERT_TRUE(r.valid()) << r.message;
    EXPECT_NEAR(r.U_star, 0.0, 1e-12);
    EXPECT_FALSE(r.G_star.has_value());
  }
  EXPECT_TRUE(metric_values(recs, Metric::kInequity).empty());
  EXPECT_EQ(metric_values(recs, Metric::kEffectiveness).size(), 2u);
}

TEST(Evaluate, RecordsShareOnePlanAndAddUp) {
  const Instance& inst = tiny();
  const DemandTable d = derive_demands(inst);
  const PlanResult pr = solve_plan(Formulation::kGini, inst, d, {}, tight_params());
  ASSERT_TRUE(pr.solution.has_values()) << pr.solution.message;
  const auto reals = sample_realizations(d, 4, 11);
  EvalOptions opts;
  opts.params = tight_params();
  opts.jobs = 2;
  const auto recs = evaluate(Formulation::kGini, inst, pr.plan, reals, opts);
  std::set<std::string> hashes;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const auto& r = recs[i];
    ASSERT_TRUE(r.valid()) << r.message;
    EXPECT_EQ(r.realization, reals[i].id);
    hashes.insert(r.plan_hash);
    double sum = 0.0;
    for (double x : r.coverage.values) sum += x;
    EXPECT_NEAR(r.U_star, sum, 1e-9);
    EXPECT_NEAR(r.U_star, r.U_star_allocation, 1e-9);
    EXPECT_GE(r.U_star, -1e-9);
    EXPECT_LE(r.U_star, 1.0 + 1e-7);
    if (r.G_star) {
      EXPECT_NEAR(*r.G_star, compute_gini(r.coverage).gini, 1e-9);
    }
  }
  EXPECT_EQ(hashes.size(), 1u);
  EXPECT_EQ(*hashes.begin(), plan_hash(pr.plan));
}

TEST(Evaluate, CommonEffectivenessNeverBelowOwnRecourse) {
  // The SP recourse maximises U* alone, so its U* bounds any other recourse.
  const Instance& inst = tiny();
  const DemandTable d = derive_demands(inst);
  const PlanResult pr = solve_plan(Formulation::kGini, inst, d, {}, tight_params());
  ASSERT_TRUE(pr.solution.has_values());
  const auto reals = sample_realizations(d, 3, 13);
  EvalOptions own;
  own.params = tight_params();
  EvalOptions common = own;
  common.common_effectiveness = true;
  const auto a = evaluate(Formulation::kGini, inst, pr.plan, reals, own);
  const auto b = evaluate(Formulation::kGini, inst, pr.plan, reals, common);
  for (std::size_t i = 0; i < reals.size(); ++i) {
    ASSERT_TRUE(a[i].valid() && b[i].valid());
    EXPECT_GE(b[i].U_star, a[i].U_star - 1e-7);
  }
}

TEST(Benefit, RelativeChangeExamples) {
  EXPECT_NEAR(*relative_benefit(0.4, 0.2), -50.0, 1e-12);
  EXPECT_NEAR(*relative_benefit(0.3, 0.3), 0.0, 1e-12);
  EXPECT_NEAR(*relative_benefit(0.5, 0.75), 50.0, 1e-12);
  EXPECT_FALSE(relative_benefit(0.0, 0.3).has_value());
}

TEST(Benefit, MatrixShapeAndUndefinedCells) {
  Groups g{{"sp", {rec("sp", "sim001", 0.8, 0.4)}},
           {"gini", {rec("gini", "sim001", 0.6, 0.2)}},
           {"zero", {rec("zero", "sim001", 0.0, std::nullopt)}}};
  const BenefitMatrix bi = benefit_matrix(g, Metric::kInequity);
  EXPECT_NEAR(*bi.cells[0][1], -50.0, 1e-12);
  EXPECT_NEAR(*bi.cells[1][0], 100.0, 1e-12);
  EXPECT_EQ(*bi.cells[0][0], 0.0);
  EXPECT_FALSE(bi.cells[2][0].has_value());  // no G* at all
  const BenefitMatrix be = benefit_matrix(g, Metric::kEffectiveness);
  EXPECT_NEAR(*be.cells[0][1], -25.0, 1e-12);
  EXPECT_FALSE(be.cells[2][0].has_value());  // δ = 0 row
  EXPECT_NEAR(*be.cells[0][2], -100.0, 1e-12);
  EXPECT_NE(benefit_csv(be).find("undefined"), std::string::npos);
}

TEST(Stats, CoefficientOfVariation) {
  const std::vector<double> v{0.1827, 0.7873, 0.2420, 0.2813, 0.1935, 0.2404};
  const Stats st = describe(v, false);
  EXPECT_NEAR(st.cov_pct, cov_percent(v), 1e-9);
  EXPECT_NEAR(st.cov_pct, 71.96, 0.05);
  EXPECT_DOUBLE_EQ(st.best, 0.1827);
  EXPECT_DOUBLE_EQ(st.worst, 0.7873);
  const Stats one = describe({0.5}, true);
  EXPECT_EQ(one.sd, 0.0);
  EXPECT_TRUE(std::isnan(describe({}, true).mean));
}

TEST(Summarize, EmptyAndSingleRecordInputs) {
  const std::string dir = temp_dir("summ");
  const auto empty = summarize({}, dir + "/empty");
  EXPECT_EQ(empty.files.size(), 8u);
  EXPECT_EQ(line_count(slurp(dir + "/empty/summary.csv")), 1u);
  EXPECT_EQ(line_count(slurp(dir + "/empty/hist_gini.csv")), 1u + kHistogramBins);

  Groups one{{"sp", {rec("sp", "sim001", 0.7, 0.25)}}};
  const auto rep = summarize(one, dir + "/one");
  const std::string summary = slurp(dir + "/one/summary.csv");
  EXPECT_NE(summary.find("sp,inequity,1,0.25,0,0,0.25,0.25,0,0,0,0"), std::string::npos)
      << summary;
  const std::string hist = slurp(dir + "/one/hist_gini.csv");
  EXPECT_NE(hist.find("0.25,0.3,1"), std::string::npos) << hist;
  EXPECT_EQ(slurp(dir + "/one/scatter.csv"),
            "formulation,realization,U_star,G_star\nsp,sim001,0.7,0.25\n");
  std::filesystem::remove_all(dir);
}

TEST(Summarize, FailedAndDegenerateCounted) {
  EvalRecord bad = rec("sp", "sim002", 0.0, std::nullopt);
  bad.status = SolveStatus::kError;
  Groups g{{"sp", {rec("sp", "sim001", 0.5, 0.1), bad, rec("sp", "sim003", 0.0, std::nullopt)}}};
  const std::string s = summary_csv(g);
  EXPECT_NE(s.find("sp,inequity,1,"), std::string::npos) << s;
  EXPECT_NE(s.find("sp,effectiveness,2,"), std::string::npos) << s;
  EXPECT_NE(s.find(",1,1,0,0\n"), std::string::npos) << s;
  EXPECT_EQ(line_count(records_csv(g)), 4u);
}
