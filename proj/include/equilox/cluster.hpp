#ifndef EQUILOX_CLUSTER_HPP_
#define EQUILOX_CLUSTER_HPP_

// One-dimensional k-means over per-area demand shares, used to build the
// cluster sets of the cluster-based Lorenz formulation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "equilox/instance.hpp"

namespace equilox {

struct KMeansResult {
  std::size_t k = 0;
  std::vector<std::size_t> assignment;  // cluster per point, clusters ordered by centroid
  std::vector<double> centroids;        // ascending
  double wss = 0.0;
};

/// Clusters of one scenario's positive-demand areas.
struct Clustering {
  std::string scenario;
  std::size_t k = 0;
  std::vector<std::size_t> areas;       // area indices (A_s, ascending)
  std::vector<std::size_t> assignment;  // cluster index per entry of `areas`
  std::vector<double> wss_by_k;         // WSS for k = 1..k_max (diagnostics)

  /// Area indices in cluster w (0-based).
  std::vector<std::size_t> members(std::size_t w) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < areas.size(); ++i) {
      if (assignment[i] == w) out.push_back(areas[i]);
    }
    return out;
  }
};

inline constexpr int kDefaultRestarts = 10;
inline constexpr std::size_t kDefaultMaxK = 8;

namespace detail {

inline double sq(double x) { return x * x; }

inline KMeansResult lloyd_once(const std::vector<double>& pts, std::size_t k,
                               std::mt19937_64& rng) {
  const std::size_t n = pts.size();
  // k-means++ seeding.
  std::vector<double> centers;
  centers.reserve(k);
  std::vector<bool> chosen(n, false);
  std::size_t first = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
  centers.push_back(pts[first]);
  chosen[first] = true;
  std::vector<double> dist2(n);
  while (centers.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (double c : centers) best = std::min(best, sq(pts[i] - c));
      dist2[i] = chosen[i] ? 0.0 : best;
      total += dist2[i];
    }
    std::size_t pick = n;
    if (total > 0.0) {
      double target = std::uniform_real_distribution<double>(0.0, total)(rng);
      for (std::size_t i = 0; i < n; ++i) {
        if (dist2[i] <= 0.0) continue;
        pick = i;
        target -= dist2[i];
        if (target < 0.0) break;
      }
    } else {
      // All remaining points coincide with a center; take any unused one.
      std::vector<std::size_t> unused;
      for (std::size_t i = 0; i < n; ++i) {
        if (!chosen[i]) unused.push_back(i);
      }
      pick = unused[std::uniform_int_distribution<std::size_t>(0, unused.size() - 1)(rng)];
    }
    chosen[pick] = true;
    centers.push_back(pts[pick]);
  }

  std::vector<std::size_t> assign(n, k);
  for (int iter = 0; iter < 1000; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      for (std::size_t c = 1; c < k; ++c) {
        if (sq(pts[i] - centers[c]) < sq(pts[i] - centers[best])) best = c;
      }
      if (assign[i] != best) {
        assign[i] = best;
        changed = true;
      }
    }
    // Repair empty clusters by moving the worst-fit point of a cluster
    // that has more than one member.
    std::vector<std::size_t> count(k, 0);
    for (std::size_t a : assign) ++count[a];
    for (std::size_t c = 0; c < k; ++c) {
      if (count[c] != 0) continue;
      std::size_t worst = n;
      double worst_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (count[assign[i]] <= 1) continue;
        double d = sq(pts[i] - centers[assign[i]]);
        if (d > worst_d) {
          worst_d = d;
          worst = i;
        }
      }
      --count[assign[worst]];
      assign[worst] = c;
      count[c] = 1;
      changed = true;
    }
    std::vector<double> sum(k, 0.0);
    for (std::size_t i = 0; i < n; ++i) sum[assign[i]] += pts[i];
    for (std::size_t c = 0; c < k; ++c) centers[c] = sum[c] / static_cast<double>(count[c]);
    if (!changed) break;
  }

  // Relabel clusters by ascending centroid.
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return centers[a] < centers[b]; });
  std::vector<std::size_t> relabel(k);
  for (std::size_t w = 0; w < k; ++w) relabel[order[w]] = w;

  KMeansResult out;
  out.k = k;
  out.assignment.resize(n);
  out.centroids.resize(k);
  for (std::size_t w = 0; w < k; ++w) out.centroids[w] = centers[order[w]];
  for (std::size_t i = 0; i < n; ++i) {
    out.assignment[i] = relabel[assign[i]];
    out.wss += sq(pts[i] - out.centroids[out.assignment[i]]);
  }
  return out;
}

}  // namespace detail

/// Lloyd's algorithm with k-means++ seeding; best of `restarts` runs drawn
/// from one RNG stream seeded with `seed`.
inline KMeansResult kmeans(const std::vector<double>& points, std::size_t k,
                           std::uint64_t seed, int restarts = kDefaultRestarts) {
  if (k < 1 || k > points.size()) {
    throw std::invalid_argument("kmeans: k must lie in [1, number of points]");
  }
  std::mt19937_64 rng(seed);
  KMeansResult best;
  bool have = false;
  for (int run = 0; run < std::max(restarts, 1); ++run) {
    KMeansResult r = detail::lloyd_once(points, k, rng);
    if (!have || r.wss < best.wss) {
      best = std::move(r);
      have = true;
    }
  }
  return best;
}

/// WSS(k) for k = 1..k_max.
inline std::vector<double> wss_curve(const std::vector<double>& points, std::size_t k_max,
                                     std::uint64_t seed) {
  std::vector<double> out;
  for (std::size_t k = 1; k <= std::min(k_max, points.size()); ++k) {
    out.push_back(kmeans(points, k, seed).wss);
  }
  return out;
}

/// Elbow of the scree plot: the k in [2, k_max-1] maximizing
/// WSS(k-1) - 2 WSS(k) + WSS(k+1). Returns 1 for at most two points, for
/// zero spread, or when k_max leaves no interior candidate.
inline std::size_t elbow_select_k(const std::vector<double>& points, std::size_t k_max,
                                  std::uint64_t seed) {
  if (points.size() <= 2) return 1;
  k_max = std::min(k_max, points.size());
  const std::vector<double> wss = wss_curve(points, k_max, seed);
  if (wss.front() <= 0.0 || k_max < 3) return 1;
  std::size_t best_k = 1;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 2; k + 1 <= k_max; ++k) {
    const double second = wss[k - 2] - 2.0 * wss[k - 1] + wss[k];
    if (second > best) {
      best = second;
      best_k = k;
    }
  }
  return best_k;
}

inline std::size_t default_k_max(std::size_t num_points) {
  return std::min(kDefaultMaxK, num_points);
}

/// Clusters every scenario's positive-demand areas on Σ_r u[r,a,s]. Uses
/// `k_override[s]` when given, otherwise the elbow rule. Scenarios without
/// positive demand get an empty clustering (k = 0).
inline std::vector<Clustering> cluster_scenarios(const DemandTable& demand,
                                                 const std::optional<std::vector<int>>& k_override,
                                                 std::uint64_t seed) {
  if (k_override && k_override->size() != demand.num_scenarios()) {
    throw std::invalid_argument("cluster_scenarios: one k per scenario required");
  }
  std::vector<Clustering> out;
  for (std::size_t s = 0; s < demand.num_scenarios(); ++s) {
    Clustering c;
    c.scenario = demand.scenario_id(s);
    c.areas = demand.positive_areas(s);
    if (c.areas.empty()) {
      out.push_back(std::move(c));
      continue;
    }
    std::vector<double> pts;
    for (std::size_t a : c.areas) pts.push_back(demand.area_share(a, s));
    c.wss_by_k = wss_curve(pts, default_k_max(pts.size()), seed);
    std::size_t k = k_override ? static_cast<std::size_t>((*k_override)[s])
                               : elbow_select_k(pts, default_k_max(pts.size()), seed);
    if (k < 1 || k > pts.size()) {
      throw std::invalid_argument("cluster_scenarios: k=" + std::to_string(k) +
                                  " is outside [1, |A_s|] for scenario " + c.scenario);
    }
    KMeansResult km = kmeans(pts, k, seed);
    c.k = k;
    c.assignment = std::move(km.assignment);
    out.push_back(std::move(c));
  }
  return out;
}

/// One singleton cluster per positive-demand area (k_s = |A_s|).
inline std::vector<Clustering> singleton_clusterings(const DemandTable& demand) {
  std::vector<Clustering> out;
  for (std::size_t s = 0; s < demand.num_scenarios(); ++s) {
    Clustering c;
    c.scenario = demand.scenario_id(s);
    c.areas = demand.positive_areas(s);
    c.k = c.areas.size();
    for (std::size_t i = 0; i < c.areas.size(); ++i) c.assignment.push_back(i);
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace equilox

#endif  // EQUILOX_CLUSTER_HPP_
