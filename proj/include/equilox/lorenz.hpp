#ifndef EQUILOX_LORENZ_HPP_
#define EQUILOX_LORENZ_HPP_

// Lorenz-curve and Gini analytics on a fixed vector of demand coverages.
// No decisions involved: rank, build the linearly interpolated curve,
// integrate its trapezoids.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace equilox {

/// Gini is undefined when total coverage is zero.
class DegenerateInput : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct CoverageVector {
  std::vector<double> values;       // per-group coverage, >= 0
  std::vector<std::string> labels;  // parallel ids (may be empty)
};

struct LorenzCurve {
  std::size_t n = 0;
  std::vector<double> sorted;             // Z_1 <= ... <= Z_n
  std::vector<std::string> sorted_labels;
  std::vector<double> cumulative_shares;  // L(j/n), j = 0..n; empty if degenerate
  double total = 0.0;                     // U
  bool degenerate = false;                // U == 0
};

struct GiniResult {
  double gini = 0.0;
  double effectiveness = 0.0;
  double objective = 0.0;  // effectiveness * (1 - gini)
};

/// Stable ascending ranking; ties keep input order.
inline LorenzCurve rank_coverages(const CoverageVector& c) {
  if (c.values.empty()) throw std::invalid_argument("rank_coverages: empty coverage vector");
  if (!c.labels.empty() && c.labels.size() != c.values.size()) {
    throw std::invalid_argument("rank_coverages: labels and values differ in length");
  }
  for (double v : c.values) {
    if (!(v >= 0.0)) throw std::invalid_argument("rank_coverages: coverages must be nonnegative");
  }
  LorenzCurve curve;
  curve.n = c.values.size();
  std::vector<std::size_t> order(curve.n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return c.values[a] < c.values[b]; });
  for (std::size_t i : order) {
    curve.sorted.push_back(c.values[i]);
    if (!c.labels.empty()) curve.sorted_labels.push_back(c.labels[i]);
  }
  curve.total = std::accumulate(curve.sorted.begin(), curve.sorted.end(), 0.0);
  curve.degenerate = curve.total <= 0.0;
  if (!curve.degenerate) {
    curve.cumulative_shares.reserve(curve.n + 1);
    curve.cumulative_shares.push_back(0.0);
    double running = 0.0;
    for (double z : curve.sorted) {
      running += z;
      curve.cumulative_shares.push_back(running / curve.total);
    }
    curve.cumulative_shares.back() = 1.0;
  }
  return curve;
}

/// Twice the area between the equity line and the interpolated curve,
/// i.e. 1 minus the summed trapezoid areas scaled by two.
inline GiniResult compute_gini(const LorenzCurve& curve) {
  if (curve.degenerate || curve.total <= 0.0) {
    throw DegenerateInput("compute_gini: total coverage is zero, Gini undefined");
  }
  const double n = static_cast<double>(curve.n);
  double twice_area = 0.0;
  for (std::size_t j = 1; j <= curve.n; ++j) {
    twice_area += (curve.cumulative_shares[j - 1] + curve.cumulative_shares[j]) / n;
  }
  GiniResult out;
  out.gini = 1.0 - twice_area;
  out.effectiveness = curve.total;
  out.objective = out.effectiveness * (1.0 - out.gini);
  return out;
}

inline GiniResult compute_gini(const CoverageVector& c) { return compute_gini(rank_coverages(c)); }

/// U(1 - G) as a weighted sum of ranked coverages; zero when U is zero.
inline double objective_closed_form(const LorenzCurve& curve) {
  const double n = static_cast<double>(curve.n);
  double v = 0.0;
  for (std::size_t j = 1; j <= curve.n; ++j) {
    v += (2.0 * n + 1.0 - 2.0 * static_cast<double>(j)) / n * curve.sorted[j - 1];
  }
  return v;
}

/// Proportion-weighted mean difference used by the GMD benchmark:
/// (1/U) * sum over pairs a < a' of |rho_a * cov_a' - rho_a' * cov_a|.
inline double mean_difference_gini(const CoverageVector& c,
                                   const std::vector<double>& proportions) {
  if (proportions.size() != c.values.size()) {
    throw std::invalid_argument("mean_difference_gini: one proportion per group required");
  }
  const double psum = std::accumulate(proportions.begin(), proportions.end(), 0.0);
  if (std::fabs(psum - 1.0) > 1e-9) {
    throw std::invalid_argument("mean_difference_gini: proportions must sum to 1");
  }
  const double total = std::accumulate(c.values.begin(), c.values.end(), 0.0);
  if (total <= 0.0) throw DegenerateInput("mean_difference_gini: total coverage is zero");
  double sum = 0.0;
  for (std::size_t a = 0; a < c.values.size(); ++a) {
    for (std::size_t b = a + 1; b < c.values.size(); ++b) {
      sum += std::fabs(proportions[a] * c.values[b] - proportions[b] * c.values[a]);
    }
  }
  return sum / total;
}

/// Breakpoints (p, L(p)) as CSV for plotting.
inline std::string lorenz_csv(const LorenzCurve& curve) {
  std::ostringstream os;
  os.precision(17);
  os << "p,L\n";
  for (std::size_t j = 0; j < curve.cumulative_shares.size(); ++j) {
    os << static_cast<double>(j) / static_cast<double>(curve.n) << ','
       << curve.cumulative_shares[j] << '\n';
  }
  return os.str();
}

}  // namespace equilox

#endif  // EQUILOX_LORENZ_HPP_
