#ifndef EQUILOX_TESTS_SUPPORT_HPP_
#define EQUILOX_TESTS_SUPPORT_HPP_

// Shared test helpers: random instances and independent reference
// computations that do not reuse library code paths.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "equilox/instance.hpp"
#include "equilox/models.hpp"
#include "equilox/solver.hpp"

namespace equilox::testing {

inline std::string data_path(const std::string& file) {
  return (std::filesystem::path(EQUILOX_DATA_DIR) / file).string();
}

inline std::string temp_dir(const std::string& tag) {
  static std::mt19937_64 rng(std::random_device{}());
  auto p = std::filesystem::temp_directory_path() /
           ("equilox-test-" + tag + "-" + std::to_string(rng() % 1000000000ULL));
  std::filesystem::create_directories(p);
  return p.string();
}

struct RandomInstanceSpec {
  std::size_t areas = 4;
  std::size_t scenarios = 2;
  std::size_t items = 2;
  bool generous = false;  // budgets and capacities that never bind
};

/// Small random instance; every location is an area, every scenario has at
/// least one area with victims.
inline Instance random_instance(std::mt19937_64& rng, const RandomInstanceSpec& spec) {
  auto uni = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  Instance inst;
  inst.name = "random";
  for (std::size_t a = 0; a < spec.areas; ++a) {
    inst.areas.push_back({"a" + std::to_string(a + 1), "Area " + std::to_string(a + 1)});
    inst.locations.push_back(inst.areas.back().id);
  }
  for (std::size_t a = 0; a < spec.areas; ++a) {
    const double cap = spec.generous ? 1e7 : uni(20, 60);
    inst.facility_options.push_back(
        {inst.locations[a], "small", cap, static_cast<double>(uni(500, 1500))});
    if (uni(0, 1)) {
      inst.facility_options.push_back(
          {inst.locations[a], "large", cap * 2.5, static_cast<double>(uni(1500, 3000))});
    }
  }
  for (std::size_t r = 0; r < spec.items; ++r) {
    ReliefItem it;
    it.id = "i" + std::to_string(r + 1);
    it.name = it.id;
    it.length_days = uni(1, 3);
    it.coverage_people = uni(1, 4);
    it.volume_m3 = 0.01 * uni(1, 5);
    it.max_preposition = spec.generous ? 1e9 : uni(300, 1500);
    it.unit_prep_cost.assign(spec.areas, static_cast<double>(uni(1, 4)));
    inst.relief_items.push_back(it);
  }
  inst.vehicle = {10.0, 2.0, 4.0};
  for (std::size_t s = 0; s < spec.scenarios; ++s) {
    Scenario sc;
    sc.id = "s" + std::to_string(s + 1);
    sc.probability = 1.0 / static_cast<double>(spec.scenarios);
    bool any = false;
    for (std::size_t a = 0; a < spec.areas; ++a) {
      const std::int64_t v = uni(0, 2) == 0 ? 0 : uni(10, 600);
      any = any || v > 0;
      sc.victims[inst.areas[a].id] = v;
    }
    if (!any) sc.victims[inst.areas[uni(0, static_cast<int>(spec.areas) - 1)].id] = uni(10, 600);
    inst.scenarios.push_back(sc);
  }
  inst.distances_km.assign(spec.areas, std::vector<double>(spec.areas, 0.0));
  for (std::size_t a = 0; a < spec.areas; ++a) {
    for (std::size_t b = a + 1; b < spec.areas; ++b) {
      inst.distances_km[a][b] = inst.distances_km[b][a] = uni(5, 60);
    }
  }
  inst.budget_first_stage = spec.generous ? 1e12 : uni(2000, 5000);
  inst.budget_second_stage = spec.generous ? 1e12 : uni(5, 40);
  inst.min_preposition = 1.0;
  return inst;
}

/// Pairwise mean-difference Gini: Σ_i Σ_j |x_i - x_j| / (2 n^2 mean).
inline double gini_pairwise(const std::vector<double>& x) {
  const double n = static_cast<double>(x.size());
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double s = 0.0;
  for (double a : x) {
    for (double b : x) s += std::fabs(a - b);
  }
  return s / (2.0 * n * n * mean);
}

/// Sample standard deviation over mean, in percent.
inline double cov_percent(const std::vector<double>& x) {
  const double n = static_cast<double>(x.size());
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  return 100.0 * std::sqrt(ss / (n - 1.0)) / mean;
}

inline SolveParams tight_params() {
  SolveParams p;
  p.rel_gap = 1e-9;
  p.abs_gap = 1e-9;
  p.threads = 1;
  p.time_limit_s = 600;
  return p;
}

}  // namespace equilox::testing

#endif  // EQUILOX_TESTS_SUPPORT_HPP_
