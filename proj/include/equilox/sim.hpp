#ifndef EQUILOX_SIM_HPP_
#define EQUILOX_SIM_HPP_

// Out-of-sample evaluation of first-stage plans. Demand realizations are
// sampled cell by cell between the scenario minimum and maximum, the plan
// is fixed, the formulation's second stage is re-solved per realization,
// and the resulting coverages are scored for equity and effectiveness.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <locale>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "equilox/lorenz.hpp"
#include "equilox/models.hpp"
#include "equilox/solver.hpp"

namespace equilox {

struct Realization {
  std::string id;
  DemandTable demand;  // one scenario, probability 1
};

/// Per-cell bounds [min_s d, max_s d].
struct DemandRange {
  std::size_t items = 0, areas = 0;
  std::vector<double> lo, hi;  // index r * areas + a
};

inline DemandRange demand_range(const DemandTable& demand) {
  DemandRange out;
  out.items = demand.num_items();
  out.areas = demand.num_areas();
  out.lo.assign(out.items * out.areas, 0.0);
  out.hi.assign(out.items * out.areas, 0.0);
  for (std::size_t r = 0; r < out.items; ++r) {
    for (std::size_t a = 0; a < out.areas; ++a) {
      double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
      for (std::size_t s = 0; s < demand.num_scenarios(); ++s) {
        lo = std::min(lo, demand.d(r, a, s));
        hi = std::max(hi, demand.d(r, a, s));
      }
      out.lo[r * out.areas + a] = demand.num_scenarios() ? lo : 0.0;
      out.hi[r * out.areas + a] = hi;
    }
  }
  return out;
}

inline std::string realization_id(std::size_t i) {
  std::ostringstream os;
  os << "sim" << std::setw(3) << std::setfill('0') << (i + 1);
  return os.str();
}

/// Draws `count` realizations from one mt19937_64 stream seeded with
/// `seed`, realization by realization, items outer and areas inner.
/// Integer-uniform inclusive by default; real-uniform when `continuous`.
inline std::vector<Realization> sample_realizations(const DemandTable& demand, std::size_t count,
                                                    std::uint64_t seed, bool continuous = false) {
  if (count < 1) throw std::invalid_argument("sample_realizations: count must be at least 1");
  const DemandRange range = demand_range(demand);
  std::mt19937_64 rng(seed);
  std::vector<Realization> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::vector<double> d(range.lo.size());
    for (std::size_t c = 0; c < d.size(); ++c) {
      const double lo = range.lo[c], hi = range.hi[c];
      if (lo == hi) {
        d[c] = lo;
      } else if (continuous) {
        d[c] = std::uniform_real_distribution<double>(lo, hi)(rng);
      } else {
        d[c] = static_cast<double>(std::uniform_int_distribution<std::int64_t>(
            static_cast<std::int64_t>(lo), static_cast<std::int64_t>(hi))(rng));
      }
    }
    std::string id = realization_id(i);
    out.push_back({id, DemandTable({id}, {1.0}, range.items, range.areas, std::move(d))});
  }
  return out;
}

// ---------------------------------------------------------------------------

struct EvalRecord {
  std::string formulation;
  std::string realization;
  SolveStatus status = SolveStatus::kError;
  double gap = std::numeric_limits<double>::quiet_NaN();
  double wall_time_s = 0.0;
  std::string message;
  std::string plan_hash;             // identifies the fixed first stage
  CoverageVector coverage;           // X^rank over A', area order
  double U_star = 0.0;
  std::optional<double> G_star;      // empty when U* = 0
  double U_star_allocation = 0.0;    // Σ u X over every (r, a, n)

  bool valid() const {
    return status == SolveStatus::kOptimal || status == SolveStatus::kFeasibleLimit;
  }
};

/// Gini of a coverage vector from ranked values and running partial sums:
/// 1 - [Z_1 + Σ_{j>=2} (S_{j-1} + S_j)] / (n Σ X^rank). Empty when Σ X^rank
/// is zero.
inline std::optional<double> post_hoc_gini(std::vector<double> xrank) {
  const std::size_t n = xrank.size();
  if (n == 0) return std::nullopt;
  double total = 0.0;
  for (double v : xrank) total += v;
  if (!(total > 0.0)) return std::nullopt;
  std::sort(xrank.begin(), xrank.end());
  double bracket = xrank[0];
  double prev = xrank[0];
  for (std::size_t j = 1; j < n; ++j) {
    const double cur = prev + xrank[j];
    bracket += prev + cur;
    prev = cur;
  }
  return 1.0 - bracket / (static_cast<double>(n) * total);
}

struct EvalOptions {
  SolveParams params;                     // base parameters for every solve
  double ranking_time_limit_s = 300.0;    // gini/ginic per-realization cap
  bool common_effectiveness = false;      // re-solve every plan with the SP recourse
  bool valid_inequality = true;
  bool ranking_cuts = false;
  std::uint64_t cluster_seed = 1;
  int jobs = 1;
  std::string cache_dir;
  // Progress hooks; may be called from worker threads, one at a time.
  std::function<void(const EvalRecord&)> on_record;
  std::function<void(Formulation, const Solution&)> on_plan;
};

inline std::string plan_hash(const FirstStage& fs) { return hex64(fnv1a(to_json(fs).dump())); }

/// Second-stage model for one realization with the plan pinned.
inline ModelIR realization_model(Formulation f, const Instance& inst, const FirstStage& plan,
                                 const Realization& real, const EvalOptions& opts) {
  const Formulation used = opts.common_effectiveness ? Formulation::kSP : f;
  BuildOptions bo;
  bo.valid_inequality = opts.valid_inequality;
  bo.ranking_cuts = opts.ranking_cuts;
  bo.cluster_seed = opts.cluster_seed;
  return fix_first_stage(build_model(used, inst, real.demand, bo), inst, plan);
}

inline EvalRecord evaluate_one(Formulation f, const Instance& inst, const FirstStage& plan,
                               const Realization& real, const EvalOptions& opts) {
  EvalRecord rec;
  rec.formulation = to_string(f);
  rec.realization = real.id;
  rec.plan_hash = plan_hash(plan);
  SolveParams params = opts.params;
  if (!opts.common_effectiveness && (f == Formulation::kGini || f == Formulation::kGiniC)) {
    params.time_limit_s = std::min(params.time_limit_s, opts.ranking_time_limit_s);
  }
  Solution sol;
  try {
    const ModelIR model = realization_model(f, inst, plan, real, opts);
    sol = solve_cached(model, params, opts.cache_dir);
  } catch (const std::exception& e) {
    sol = Solution{};
    sol.message = e.what();
  }
  rec.status = sol.status;
  rec.gap = sol.gap;
  rec.wall_time_s = sol.wall_time_s;
  rec.message = sol.message;
  if (!rec.valid()) return rec;

  const DemandTable& d = real.demand;
  for (std::size_t a : d.positive_areas(0)) {
    double x = 0.0;
    for (std::size_t r = 0; r < inst.num_items(); ++r) {
      for (std::size_t n = 0; n < inst.num_locations(); ++n) {
        auto it = sol.values.find(
            names::X(inst.relief_items[r].id, inst.areas[a].id, inst.locations[n], real.id));
        if (it != sol.values.end()) x += d.u(r, a, 0) * it->second;
      }
    }
    rec.coverage.values.push_back(std::max(x, 0.0));
    rec.coverage.labels.push_back(inst.areas[a].id);
    rec.U_star += x;
  }
  for (std::size_t r = 0; r < inst.num_items(); ++r) {
    for (std::size_t a = 0; a < inst.num_areas(); ++a) {
      for (std::size_t n = 0; n < inst.num_locations(); ++n) {
        auto it = sol.values.find(
            names::X(inst.relief_items[r].id, inst.areas[a].id, inst.locations[n], real.id));
        if (it != sol.values.end()) rec.U_star_allocation += d.u(r, a, 0) * it->second;
      }
    }
  }
  rec.G_star = post_hoc_gini(rec.coverage.values);
  return rec;
}

/// Evaluates one plan on every realization with a pool of `opts.jobs`
/// workers. Records come back in realization order.
inline std::vector<EvalRecord> evaluate(Formulation f, const Instance& inst,
                                        const FirstStage& plan,
                                        const std::vector<Realization>& realizations,
                                        const EvalOptions& opts) {
  std::vector<EvalRecord> out(realizations.size());
  std::atomic<std::size_t> next{0};
  std::mutex report_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < realizations.size(); i = next++) {
      out[i] = evaluate_one(f, inst, plan, realizations[i], opts);
      if (opts.on_record) {
        std::lock_guard<std::mutex> lock(report_mutex);
        opts.on_record(out[i]);
      }
    }
  };
  const std::size_t jobs =
      std::clamp<std::size_t>(static_cast<std::size_t>(std::max(opts.jobs, 1)), 1,
                              std::max<std::size_t>(realizations.size(), 1));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < jobs; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  return out;
}

// ---------------------------------------------------------------------------
// Statistics and reports.

struct Stats {
  std::size_t n = 0;
  double mean = std::numeric_limits<double>::quiet_NaN();
  double sd = std::numeric_limits<double>::quiet_NaN();  // sample (n-1); 0 when n == 1
  double cov_pct = std::numeric_limits<double>::quiet_NaN();  // 100 sd / mean
  double best = std::numeric_limits<double>::quiet_NaN();
  double worst = std::numeric_limits<double>::quiet_NaN();
};

inline Stats describe(const std::vector<double>& v, bool higher_is_better) {
  Stats st;
  st.n = v.size();
  if (v.empty()) return st;
  double sum = 0.0;
  for (double x : v) sum += x;
  st.mean = sum / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - st.mean) * (x - st.mean);
  st.sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
  if (st.mean != 0.0) st.cov_pct = 100.0 * st.sd / st.mean;
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  st.best = higher_is_better ? *hi : *lo;
  st.worst = higher_is_better ? *lo : *hi;
  return st;
}

enum class Metric { kInequity, kEffectiveness };

inline std::string to_string(Metric m) {
  return m == Metric::kInequity ? "inequity" : "effectiveness";
}

/// Values entering the average of `m`: valid records only, and for
/// inequity only those with a defined G*.
inline std::vector<double> metric_values(const std::vector<EvalRecord>& records, Metric m) {
  std::vector<double> out;
  for (const auto& r : records) {
    if (!r.valid()) continue;
    if (m == Metric::kEffectiveness) out.push_back(r.U_star);
    else if (r.G_star) out.push_back(*r.G_star);
  }
  return out;
}

struct BenefitMatrix {
  Metric metric = Metric::kInequity;
  std::vector<std::string> formulations;
  std::vector<std::optional<double>> delta;
  std::vector<std::vector<std::optional<double>>> cells;  // [i][j]; empty when undefined
};

inline std::optional<double> relative_benefit(double delta_i, double delta_j) {
  if (delta_i == 0.0) return std::nullopt;
  return (delta_j - delta_i) / delta_i * 100.0;
}

/// Relative change of the average metric from row formulation i to column
/// formulation j, in percent.
inline BenefitMatrix benefit_matrix(
    const std::vector<std::pair<std::string, std::vector<EvalRecord>>>& groups, Metric m) {
  BenefitMatrix bm;
  bm.metric = m;
  for (const auto& [name, recs] : groups) {
    bm.formulations.push_back(name);
    const Stats st = describe(metric_values(recs, m), m == Metric::kEffectiveness);
    bm.delta.push_back(st.n ? std::optional<double>(st.mean) : std::nullopt);
  }
  const std::size_t k = groups.size();
  bm.cells.assign(k, std::vector<std::optional<double>>(k));
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      if (!bm.delta[i] || !bm.delta[j]) continue;
      bm.cells[i][j] = i == j ? std::optional<double>(0.0) : relative_benefit(*bm.delta[i], *bm.delta[j]);
    }
  }
  return bm;
}

namespace detail {

inline std::string fmt(double v) {
  if (std::isnan(v)) return "";
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os.precision(10);
  os << v;
  return os.str();
}

inline std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : ""; }

}  // namespace detail

inline constexpr std::size_t kHistogramBins = 20;

/// Counts per formulation over kHistogramBins equal bins of [0, 1]; values
/// at the top edge land in the last bin, values outside are clamped.
inline std::string histogram_csv(
    const std::vector<std::pair<std::string, std::vector<EvalRecord>>>& groups, Metric m) {
  std::ostringstream os;
  os << "bin_lo,bin_hi";
  for (const auto& [name, recs] : groups) os << ',' << name;
  os << '\n';
  std::vector<std::vector<std::size_t>> counts(groups.size(),
                                               std::vector<std::size_t>(kHistogramBins, 0));
  for (std::size_t g = 0; g < groups.size(); ++g) {
    for (double v : metric_values(groups[g].second, m)) {
      const double clamped = std::clamp(v, 0.0, 1.0);
      auto bin = static_cast<std::size_t>(clamped * static_cast<double>(kHistogramBins));
      ++counts[g][std::min(bin, kHistogramBins - 1)];
    }
  }
  for (std::size_t b = 0; b < kHistogramBins; ++b) {
    os << detail::fmt(static_cast<double>(b) / kHistogramBins) << ','
       << detail::fmt(static_cast<double>(b + 1) / kHistogramBins);
    for (std::size_t g = 0; g < groups.size(); ++g) os << ',' << counts[g][b];
    os << '\n';
  }
  return os.str();
}

inline std::string benefit_csv(const BenefitMatrix& bm) {
  std::ostringstream os;
  os << "formulation,delta";
  for (const auto& f : bm.formulations) os << ',' << f;
  os << '\n';
  for (std::size_t i = 0; i < bm.formulations.size(); ++i) {
    os << bm.formulations[i] << ',' << detail::fmt(bm.delta[i]);
    for (std::size_t j = 0; j < bm.formulations.size(); ++j) {
      os << ',' << (bm.cells[i][j] ? detail::fmt(*bm.cells[i][j]) : "undefined");
    }
    os << '\n';
  }
  return os.str();
}

inline std::string scatter_csv(
    const std::vector<std::pair<std::string, std::vector<EvalRecord>>>& groups) {
  std::ostringstream os;
  os << "formulation,realization,U_star,G_star\n";
  for (const auto& [name, recs] : groups) {
    for (const auto& r : recs) {
      if (!r.valid()) continue;
      os << name << ',' << r.realization << ',' << detail::fmt(r.U_star) << ','
         << detail::fmt(r.G_star) << '\n';
    }
  }
  return os.str();
}

inline std::string summary_csv(
    const std::vector<std::pair<std::string, std::vector<EvalRecord>>>& groups) {
  std::ostringstream os;
  os << "formulation,metric,n,mean,sd,cov_pct,best,worst,failed,degenerate,mean_gap,max_gap\n";
  for (const auto& [name, recs] : groups) {
    std::size_t failed = 0, degenerate = 0;
    double gap_sum = 0.0, gap_max = 0.0;
    std::size_t gap_n = 0;
    for (const auto& r : recs) {
      if (!r.valid()) {
        ++failed;
        continue;
      }
      if (!r.G_star) ++degenerate;
      if (!std::isnan(r.gap)) {
        gap_sum += r.gap;
        gap_max = std::max(gap_max, r.gap);
        ++gap_n;
      }
    }
    const double gap_mean = gap_n ? gap_sum / static_cast<double>(gap_n)
                                  : std::numeric_limits<double>::quiet_NaN();
    for (Metric m : {Metric::kInequity, Metric::kEffectiveness}) {
      const Stats st = describe(metric_values(recs, m), m == Metric::kEffectiveness);
      os << name << ',' << to_string(m) << ',' << st.n << ',' << detail::fmt(st.mean) << ','
         << detail::fmt(st.sd) << ',' << detail::fmt(st.cov_pct) << ',' << detail::fmt(st.best)
         << ',' << detail::fmt(st.worst) << ',' << failed << ',' << degenerate << ','
         << detail::fmt(gap_mean) << ',' << detail::fmt(gap_n ? gap_max : gap_mean) << '\n';
    }
  }
  return os.str();
}

/// Every record, failed ones included, with its coverage vector as
/// label=value pairs.
inline std::string records_csv(
    const std::vector<std::pair<std::string, std::vector<EvalRecord>>>& groups) {
  std::ostringstream os;
  os << "formulation,realization,status,gap,wall_time_s,U_star,G_star,coverage\n";
  for (const auto& [name, recs] : groups) {
    for (const auto& r : recs) {
      os << name << ',' << r.realization << ',' << to_string(r.status) << ','
         << detail::fmt(r.gap) << ',' << detail::fmt(r.wall_time_s) << ','
         << (r.valid() ? detail::fmt(r.U_star) : "") << ',' << detail::fmt(r.G_star) << ',';
      for (std::size_t i = 0; i < r.coverage.values.size(); ++i) {
        os << (i ? ";" : "") << r.coverage.labels[i] << '=' << detail::fmt(r.coverage.values[i]);
      }
      os << '\n';
    }
  }
  return os.str();
}

/// Full-precision records, coverage vectors included.
inline nlohmann::json records_json(
    const std::vector<std::pair<std::string, std::vector<EvalRecord>>>& groups) {
  auto num = [](double v) -> nlohmann::json {
    if (std::isnan(v)) return nullptr;
    return v;
  };
  nlohmann::json out = nlohmann::json::array();
  for (const auto& [name, recs] : groups) {
    for (const auto& r : recs) {
      out.push_back({{"formulation", name},
                     {"realization", r.realization},
                     {"status", to_string(r.status)},
                     {"gap", num(r.gap)},
                     {"wall_time_s", r.wall_time_s},
                     {"plan_hash", r.plan_hash},
                     {"U_star", r.U_star},
                     {"G_star", r.G_star ? nlohmann::json(*r.G_star) : nlohmann::json(nullptr)},
                     {"coverage", r.coverage.values},
                     {"labels", r.coverage.labels},
                     {"message", r.message}});
    }
  }
  return out;
}

struct SimulationReport {
  std::vector<std::pair<std::string, std::vector<EvalRecord>>> groups;
  BenefitMatrix inequity;
  BenefitMatrix effectiveness;
  std::vector<std::string> files;
};

/// Writes scatter, record, histogram, summary and benefit CSVs into `dir`.
inline SimulationReport summarize(
    const std::vector<std::pair<std::string, std::vector<EvalRecord>>>& groups,
    const std::string& dir) {
  namespace fs = std::filesystem;
  SimulationReport rep;
  rep.groups = groups;
  rep.inequity = benefit_matrix(groups, Metric::kInequity);
  rep.effectiveness = benefit_matrix(groups, Metric::kEffectiveness);
  fs::create_directories(dir);
  auto put = [&](const std::string& name, const std::string& text) {
    const std::string path = (fs::path(dir) / name).string();
    write_text_file(path, text);
    rep.files.push_back(path);
  };
  put("scatter.csv", scatter_csv(groups));
  put("records.csv", records_csv(groups));
  put("records.json", records_json(groups).dump(1) + "\n");
  put("hist_gini.csv", histogram_csv(groups, Metric::kInequity));
  put("hist_eff.csv", histogram_csv(groups, Metric::kEffectiveness));
  put("summary.csv", summary_csv(groups));
  put("benefit_inequity.csv", benefit_csv(rep.inequity));
  put("benefit_effectiveness.csv", benefit_csv(rep.effectiveness));
  return rep;
}

// ---------------------------------------------------------------------------
// Whole protocol: plan on the scenarios, then evaluate on shared samples.

struct PlanResult {
  Formulation formulation = Formulation::kSP;
  Solution solution;
  FirstStage plan;
};

/// Solves formulation `f` on the instance scenarios and extracts its plan.
inline PlanResult solve_plan(Formulation f, const Instance& inst, const DemandTable& demand,
                             const BuildOptions& bo, const SolveParams& params,
                             const std::string& cache_dir = {}) {
  PlanResult pr;
  pr.formulation = f;
  const ModelIR model = build_model(f, inst, demand, bo);
  pr.solution = solve_cached(model, params, cache_dir);
  if (pr.solution.has_values()) pr.plan = first_stage_from(pr.solution.values, inst);
  return pr;
}

class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SimulationRun {
  std::vector<PlanResult> plans;
  std::vector<Realization> realizations;
  std::vector<std::pair<std::string, std::vector<EvalRecord>>> groups;
};

/// Plans every formulation, then evaluates all of them on one shared set
/// of realizations drawn with `seed`. Throws SimulationError when a
/// formulation yields no plan.
inline SimulationRun simulate(const Instance& inst, const std::vector<Formulation>& formulations,
                              std::size_t count, std::uint64_t seed, bool continuous,
                              const BuildOptions& bo, const SolveParams& plan_params,
                              const EvalOptions& eval) {
  SimulationRun run;
  const DemandTable demand = derive_demands(inst);
  for (Formulation f : formulations) {
    PlanResult pr = solve_plan(f, inst, demand, bo, plan_params, eval.cache_dir);
    if (eval.on_plan) eval.on_plan(f, pr.solution);
    if (!pr.solution.has_values()) {
      throw SimulationError("formulation " + to_string(f) + " produced no first-stage plan (" +
                            to_string(pr.solution.status) + "): " + pr.solution.message);
    }
    run.plans.push_back(std::move(pr));
  }
  run.realizations = sample_realizations(demand, count, seed, continuous);
  for (const PlanResult& pr : run.plans) {
    run.groups.emplace_back(to_string(pr.formulation),
                            evaluate(pr.formulation, inst, pr.plan, run.realizations, eval));
  }
  return run;
}

}  // namespace equilox

#endif  // EQUILOX_SIM_HPP_
