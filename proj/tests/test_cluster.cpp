#include <gtest/gtest.h>

#include <iostream>
#include <random>
#include <set>

#include "equilox/cluster.hpp"
#include "support.hpp"

using namespace equilox;
using equilox::testing::data_path;

namespace {

std::vector<double> random_points(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

void expect_partition(const KMeansResult& r, std::size_t n) {
  ASSERT_EQ(r.assignment.size(), n);
  std::set<std::size_t> used(r.assignment.begin(), r.assignment.end());
  EXPECT_EQ(used.size(), r.k);
  for (std::size_t w = 0; w < r.k; ++w) EXPECT_TRUE(used.count(w));
}

}  // namespace

TEST(Cluster, WellSeparatedPair) {
  KMeansResult r = kmeans({0.1, 0.1, 0.9}, 2, 7);
  EXPECT_EQ(r.assignment, (std::vector<std::size_t>{0, 0, 1}));
  EXPECT_NEAR(r.wss, 0.0, 1e-15);
}

TEST(Cluster, KEqualsNGivesSingletons) {
  KMeansResult r = kmeans({0.4, 0.1, 0.3, 0.2}, 4, 1);
  EXPECT_EQ(r.assignment, (std::vector<std::size_t>{3, 0, 2, 1}));
}

TEST(Cluster, KEqualsOneGivesOneCluster) {
  KMeansResult r = kmeans({0.4, 0.1, 0.3}, 1, 1);
  EXPECT_EQ(r.assignment, (std::vector<std::size_t>{0, 0, 0}));
}

TEST(Cluster, KOutOfRangeThrows) {
  EXPECT_THROW(kmeans({0.1, 0.2}, 3, 1), std::invalid_argument);
  EXPECT_THROW(kmeans({0.1, 0.2}, 0, 1), std::invalid_argument);
}

TEST(Cluster, ElbowDegenerateCases) {
  EXPECT_EQ(elbow_select_k({0.5}, 8, 1), 1u);
  EXPECT_EQ(elbow_select_k({0.2, 0.8}, 8, 1), 1u);
  EXPECT_EQ(elbow_select_k({0.3, 0.3, 0.3, 0.3}, 8, 1), 1u);
}

TEST(Cluster, ElbowFindsTwoGroups) {
  std::vector<double> pts{0.01, 0.02, 0.03, 0.9, 0.91, 0.92};
  EXPECT_EQ(elbow_select_k(pts, 6, 3), 2u);
}

TEST(ClusterProperty, ElbowIsArgmaxOfSecondDifference) {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 200; ++t) {
    auto pts = random_points(rng, 3 + rng() % 10);
    const std::size_t k_max = std::min<std::size_t>(8, pts.size());
    const std::uint64_t seed = rng();
    const auto w = wss_curve(pts, k_max, seed);
    std::size_t expect = 1;
    double best = -1e300;
    for (std::size_t k = 2; k < k_max; ++k) {
      const double d2 = w[k - 2] - 2.0 * w[k - 1] + w[k];
      if (d2 > best) {
        best = d2;
        expect = k;
      }
    }
    EXPECT_EQ(elbow_select_k(pts, k_max, seed), expect);
  }
}

TEST(ClusterProperty, PartitionContiguityDeterminism) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 300; ++t) {
    const std::size_t n = 1 + rng() % 13;
    const std::size_t k = 1 + rng() % n;
    auto pts = random_points(rng, n);
    const std::uint64_t seed = rng();
    KMeansResult a = kmeans(pts, k, seed);
    KMeansResult b = kmeans(pts, k, seed);
    EXPECT_EQ(a.assignment, b.assignment);
    expect_partition(a, n);
    // 1-D clusters are intervals ordered like their centroids.
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (pts[i] < pts[j]) EXPECT_LE(a.assignment[i], a.assignment[j]);
      }
    }
    // Converged: every point is nearest to its own centroid.
    for (std::size_t i = 0; i < n; ++i) {
      const double own = std::fabs(pts[i] - a.centroids[a.assignment[i]]);
      for (double c : a.centroids) EXPECT_LE(own, std::fabs(pts[i] - c) + 1e-12);
    }
  }
}

TEST(ClusterProperty, WssNonincreasingInK) {
  std::mt19937_64 rng(6);
  for (int t = 0; t < 200; ++t) {
    auto pts = random_points(rng, 2 + rng() % 12);
    const auto wss = wss_curve(pts, pts.size(), rng());
    for (std::size_t k = 1; k < wss.size(); ++k) EXPECT_LE(wss[k], wss[k - 1] + 1e-12);
    EXPECT_NEAR(wss.back(), 0.0, 1e-15);
  }
}

TEST(Cluster, ScenarioClusteringsPartitionPositiveAreas) {
  const Instance inst = load_instance(data_path("serrana.json"));
  const DemandTable d = derive_demands(inst);
  const auto cs = cluster_scenarios(d, inst.clusters_k, 1);
  ASSERT_EQ(cs.size(), 18u);
  for (std::size_t s = 0; s < cs.size(); ++s) {
    EXPECT_EQ(cs[s].areas, d.positive_areas(s));
    EXPECT_EQ(static_cast<int>(cs[s].k), (*inst.clusters_k)[s]);
    std::size_t covered = 0;
    for (std::size_t w = 0; w < cs[s].k; ++w) {
      EXPECT_FALSE(cs[s].members(w).empty());
      covered += cs[s].members(w).size();
    }
    EXPECT_EQ(covered, cs[s].areas.size());
  }
}

TEST(Cluster, OverrideOutsideRangeThrows) {
  const Instance inst = load_instance(data_path("serrana.json"));
  const DemandTable d = derive_demands(inst);
  std::vector<int> ks(18, 2);  // year 2000 has a single affected area
  EXPECT_THROW(cluster_scenarios(d, ks, 1), std::invalid_argument);
  EXPECT_THROW(cluster_scenarios(d, std::vector<int>{1, 2}, 1), std::invalid_argument);
}

TEST(Cluster, ElbowVersusPublishedVector) {
  // Reported, not asserted: the published vector came from visual inspection.
  const Instance inst = load_instance(data_path("serrana.json"));
  const DemandTable d = derive_demands(inst);
  const auto cs = cluster_scenarios(d, std::nullopt, 1);
  std::size_t agree = 0;
  std::cout << "elbow k per scenario vs published:";
  for (std::size_t s = 0; s < cs.size(); ++s) {
    std::cout << ' ' << cs[s].k << '/' << (*inst.clusters_k)[s];
    agree += static_cast<int>(cs[s].k) == (*inst.clusters_k)[s];
  }
  std::cout << "\nagreement: " << agree << " of " << cs.size() << '\n';
  SUCCEED();
}
