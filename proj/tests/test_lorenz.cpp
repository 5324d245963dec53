#include <gtest/gtest.h>

#include <random>

#include "equilox/lorenz.hpp"
#include "support.hpp"

using namespace equilox;
using equilox::testing::gini_pairwise;

namespace {

CoverageVector cv(std::vector<double> v) { return {std::move(v), {}}; }

std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

}  // namespace

TEST(Lorenz, RankIsStableAscending) {
  CoverageVector c{{0.3, 0.1, 0.3, 0.0}, {"a", "b", "c", "d"}};
  LorenzCurve curve = rank_coverages(c);
  EXPECT_EQ(curve.sorted, (std::vector<double>{0.0, 0.1, 0.3, 0.3}));
  EXPECT_EQ(curve.sorted_labels, (std::vector<std::string>{"d", "b", "a", "c"}));
  ASSERT_EQ(curve.cumulative_shares.size(), 5u);
  EXPECT_DOUBLE_EQ(curve.cumulative_shares.front(), 0.0);
  EXPECT_DOUBLE_EQ(curve.cumulative_shares.back(), 1.0);
  EXPECT_NEAR(curve.total, 0.7, 1e-15);
}

TEST(Lorenz, RankRejectsBadInput) {
  EXPECT_THROW(rank_coverages(cv({})), std::invalid_argument);
  EXPECT_THROW(rank_coverages(cv({0.1, -0.2})), std::invalid_argument);
  EXPECT_THROW(rank_coverages(CoverageVector{{0.1, 0.2}, {"a"}}), std::invalid_argument);
}

TEST(Lorenz, KnownValues) {
  EXPECT_NEAR(compute_gini(cv({0.5, 0.5, 0.5, 0.5})).gini, 0.0, 1e-12);
  EXPECT_NEAR(compute_gini(cv({0.0, 0.0, 0.0, 1.0})).gini, 0.75, 1e-12);
  EXPECT_NEAR(compute_gini(cv({0.1, 0.2, 0.3, 0.4})).gini, 0.25, 1e-12);
  EXPECT_NEAR(gini_pairwise({0.1, 0.2, 0.3, 0.4}), 0.25, 1e-12);
}

TEST(Lorenz, SingleGroupHasZeroGini) {
  GiniResult r = compute_gini(cv({0.42}));
  EXPECT_NEAR(r.gini, 0.0, 1e-15);
  EXPECT_NEAR(r.objective, 0.42, 1e-15);
}

TEST(Lorenz, ZeroTotalIsDegenerate) {
  LorenzCurve c = rank_coverages(cv({0.0, 0.0}));
  EXPECT_TRUE(c.degenerate);
  EXPECT_THROW(compute_gini(c), DegenerateInput);
  EXPECT_DOUBLE_EQ(objective_closed_form(c), 0.0);
}

TEST(Lorenz, SingleOwnerIsOneMinusOneOverN) {
  for (std::size_t n = 1; n <= 12; ++n) {
    std::vector<double> v(n, 0.0);
    v[n / 2] = 0.37;
    EXPECT_NEAR(compute_gini(cv(v)).gini, 1.0 - 1.0 / static_cast<double>(n), 1e-12) << n;
  }
}

TEST(LorenzProperty, MatchesPairwiseOracle) {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 1000; ++t) {
    auto v = random_vector(rng, 1 + rng() % 15);
    EXPECT_NEAR(compute_gini(cv(v)).gini, gini_pairwise(v), 1e-9);
  }
}

TEST(LorenzProperty, ClosedFormEqualsEffectivenessTimesEquity) {
  std::mt19937_64 rng(12);
  for (int t = 0; t < 1000; ++t) {
    auto v = random_vector(rng, 1 + rng() % 15);
    LorenzCurve c = rank_coverages(cv(v));
    GiniResult g = compute_gini(c);
    EXPECT_NEAR(objective_closed_form(c), g.objective, 1e-9);
    EXPECT_GE(g.gini, -1e-12);
    EXPECT_LE(g.gini, 1.0 - 1.0 / static_cast<double>(v.size()) + 1e-12);
  }
}

TEST(LorenzProperty, ScaleAndPermutationInvariance) {
  std::mt19937_64 rng(13);
  for (int t = 0; t < 1000; ++t) {
    auto v = random_vector(rng, 2 + rng() % 12);
    const double g = compute_gini(cv(v)).gini;
    const double k = 0.01 + std::uniform_real_distribution<double>(0, 50)(rng);
    auto scaled = v;
    for (double& x : scaled) x *= k;
    EXPECT_NEAR(compute_gini(cv(scaled)).gini, g, 1e-9);
    auto perm = v;
    std::shuffle(perm.begin(), perm.end(), rng);
    EXPECT_NEAR(compute_gini(cv(perm)).gini, g, 1e-9);
  }
}

TEST(LorenzProperty, PigouDaltonTransferDoesNotRaiseGini) {
  std::mt19937_64 rng(14);
  for (int t = 0; t < 1000; ++t) {
    auto v = random_vector(rng, 2 + rng() % 12);
    std::sort(v.begin(), v.end());
    const std::size_t lo = rng() % (v.size() - 1);
    const std::size_t hi = lo + 1 + rng() % (v.size() - lo - 1);
    if (v[hi] - v[lo] <= 1e-9) continue;
    const double delta = std::uniform_real_distribution<double>(0.0, (v[hi] - v[lo]) / 2)(rng);
    auto moved = v;
    moved[hi] -= delta;
    moved[lo] += delta;
    EXPECT_LE(compute_gini(cv(moved)).gini, compute_gini(cv(v)).gini + 1e-9);
  }
}

TEST(Lorenz, MeanDifferenceGiniWithEqualProportions) {
  // Equal proportions reduce the weighted form to (1/n) Σ_{a<b} |c_b - c_a| / U.
  std::vector<double> c{0.1, 0.2, 0.3, 0.4};
  double expected = 0.0;
  for (std::size_t a = 0; a < 4; ++a) {
    for (std::size_t b = a + 1; b < 4; ++b) expected += std::fabs(c[b] - c[a]) / 4.0;
  }
  EXPECT_NEAR(mean_difference_gini(cv(c), {0.25, 0.25, 0.25, 0.25}), expected, 1e-12);
  EXPECT_THROW(mean_difference_gini(cv(c), {0.5, 0.5, 0.5, 0.5}), std::invalid_argument);
  EXPECT_THROW(mean_difference_gini(cv({0, 0}), {0.5, 0.5}), DegenerateInput);
}

TEST(Lorenz, CsvHasBreakpoints) {
  const std::string csv = lorenz_csv(rank_coverages(cv({1.0, 3.0})));
  EXPECT_EQ(csv, "p,L\n0,0\n0.5,0.25\n1,1\n");
}
