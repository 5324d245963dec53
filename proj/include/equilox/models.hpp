#ifndef EQUILOX_MODELS_HPP_
#define EQUILOX_MODELS_HPP_

// Deterministic-equivalent MILPs for the two-stage location-allocation
// problem under four recourse objectives:
//
//   sp     expected effectiveness                sum_s pi_s U_s
//   gmd    effectiveness minus proportion-weighted pairwise differences
//   gini   U_s (1 - G_s) with G_s from an exact decision-driven Lorenz curve
//   ginic  as gini, with the curve built over a-priori clusters of areas
//
// Variable and row names are stable and derived from instance ids:
//
//   Y[size,loc]  P[item,loc]  X[item,area,loc,scen]
//   O[area,rank,scen] (gini) / O[c<w>,rank,scen] (ginic)  Z[rank,scen]
//   HL[scen]  HU[scen]  t[area,area',scen]
//
// Ranks are 1-based. Coverages and Z live in [0, 1], so the ranking
// linearization uses the constant 1 in place of a big-M.

#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "equilox/cluster.hpp"
#include "equilox/instance.hpp"
#include "equilox/lorenz.hpp"
#include "equilox/model_ir.hpp"

namespace equilox {

enum class Formulation { kSP, kGMD, kGini, kGiniC };

inline std::string to_string(Formulation f) {
  switch (f) {
    case Formulation::kSP: return "sp";
    case Formulation::kGMD: return "gmd";
    case Formulation::kGini: return "gini";
    case Formulation::kGiniC: return "ginic";
  }
  return "?";
}

inline std::optional<Formulation> parse_formulation(std::string_view s) {
  if (s == "sp") return Formulation::kSP;
  if (s == "gmd") return Formulation::kGMD;
  if (s == "gini") return Formulation::kGini;
  if (s == "ginic") return Formulation::kGiniC;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Names.

namespace names {

inline std::string bracket(std::initializer_list<std::string_view> parts) {
  std::string out = "[";
  bool first = true;
  for (auto p : parts) {
    if (!first) out += ',';
    out += p;
    first = false;
  }
  out += ']';
  return out;
}

inline std::string Y(std::string_view size, std::string_view loc) {
  return "Y" + bracket({size, loc});
}
inline std::string P(std::string_view item, std::string_view loc) {
  return "P" + bracket({item, loc});
}
inline std::string X(std::string_view item, std::string_view area, std::string_view loc,
                     std::string_view scen) {
  return "X" + bracket({item, area, loc, scen});
}
inline std::string O(std::string_view entity, std::size_t rank, std::string_view scen) {
  return "O" + bracket({entity, std::to_string(rank), scen});
}
inline std::string Z(std::size_t rank, std::string_view scen) {
  return "Z" + bracket({std::to_string(rank), scen});
}
inline std::string HL(std::string_view scen) { return "HL" + bracket({scen}); }
inline std::string HU(std::string_view scen) { return "HU" + bracket({scen}); }
inline std::string t(std::string_view a, std::string_view b, std::string_view scen) {
  return "t" + bracket({a, b, scen});
}
inline std::string cluster(std::size_t w) { return "c" + std::to_string(w + 1); }

}  // namespace names

// ---------------------------------------------------------------------------

/// Here-and-now decisions: facility openings and prepositioned stock.
struct FirstStage {
  std::map<std::pair<std::string, std::string>, int> Y;     // (size, loc) -> 0/1
  std::map<std::pair<std::string, std::string>, double> P;  // (item, loc) -> units

  std::size_t open_count() const {
    std::size_t n = 0;
    for (const auto& [key, v] : Y) n += v != 0 ? 1 : 0;
    return n;
  }
  double total_stock() const {
    double s = 0.0;
    for (const auto& [key, v] : P) s += v;
    return s;
  }
  bool operator==(const FirstStage&) const = default;
};

using ValueMap = std::unordered_map<std::string, double>;

namespace detail {

/// Shared state while emitting one deterministic equivalent.
struct Builder {
  const Instance& inst;
  const DemandTable& demand;
  ModelIR model;
  std::vector<std::vector<double>> ship;  // c^d[a][n]
  // X ids indexed [s][r][a][n]
  std::vector<VarId> x;
  std::size_t R, A, N, S;

  Builder(const Instance& i, const DemandTable& d, std::string name)
      : inst(i), demand(d), model(std::move(name)), ship(derive_shipping_costs(i)),
        R(i.num_items()), A(i.num_areas()), N(i.num_locations()), S(d.num_scenarios()) {
    if (d.num_items() != R || d.num_areas() != A) {
      throw std::invalid_argument("demand table does not match instance dimensions");
    }
  }

  VarId X(std::size_t r, std::size_t a, std::size_t n, std::size_t s) const {
    return x[((s * R + r) * A + a) * N + n];
  }

  const std::string& sid(std::size_t s) const { return demand.scenario_id(s); }

  /// Coverage of area a in scenario s: Σ_{r,n} u[r,a,s] X[r,a,n,s].
  LinearExpr coverage(std::size_t a, std::size_t s) const {
    LinearExpr e;
    for (std::size_t r = 0; r < R; ++r) {
      const double u = demand.u(r, a, s);
      if (u == 0.0) continue;
      for (std::size_t n = 0; n < N; ++n) e.add(X(r, a, n, s), u);
    }
    return e;
  }

  /// Effectiveness of scenario s: Σ_{r,a,n} u X.
  LinearExpr effectiveness(std::size_t s) const {
    LinearExpr e;
    for (std::size_t a = 0; a < A; ++a) e.add(coverage(a, s));
    return e;
  }
};

inline void emit_common(Builder& b) {
  const Instance& inst = b.inst;
  ModelIR& m = b.model;

  // First stage.
  std::vector<std::vector<std::pair<VarId, double>>> y_at(b.N);  // (Y id, capacity)
  for (const auto& f : inst.facility_options) {
    const std::size_t n = inst.location_index(f.location).value();
    VarId id = m.add_variable(names::Y(f.size, f.location), VarKind::kBinary, 0.0, 1.0);
    y_at[n].emplace_back(id, f.capacity_m3);
  }
  std::vector<VarId> p(b.R * b.N);
  for (std::size_t r = 0; r < b.R; ++r) {
    for (std::size_t n = 0; n < b.N; ++n) {
      p[r * b.N + n] = m.add_variable(names::P(inst.relief_items[r].id, inst.locations[n]),
                                      VarKind::kContinuous, 0.0, kInf);
    }
  }

  // Second stage allocations.
  b.x.resize(b.S * b.R * b.A * b.N);
  for (std::size_t s = 0; s < b.S; ++s) {
    for (std::size_t r = 0; r < b.R; ++r) {
      for (std::size_t a = 0; a < b.A; ++a) {
        for (std::size_t n = 0; n < b.N; ++n) {
          b.x[((s * b.R + r) * b.A + a) * b.N + n] = m.add_variable(
              names::X(inst.relief_items[r].id, inst.areas[a].id, inst.locations[n], b.sid(s)),
              VarKind::kContinuous, 0.0, 1.0);
        }
      }
    }
  }

  // (2) stock only where a facility is open, within its volume.
  for (std::size_t n = 0; n < b.N; ++n) {
    LinearExpr e;
    for (std::size_t r = 0; r < b.R; ++r) e.add(p[r * b.N + n], inst.relief_items[r].volume_m3);
    for (const auto& [id, cap] : y_at[n]) e.add(id, -cap);
    m.add_constraint("storage[" + inst.locations[n] + "]", e, RowSense::kLessEqual, 0.0);
  }
  // (3) item availability.
  for (std::size_t r = 0; r < b.R; ++r) {
    LinearExpr e;
    for (std::size_t n = 0; n < b.N; ++n) e.add(p[r * b.N + n], 1.0);
    m.add_constraint("prep_max[" + inst.relief_items[r].id + "]", e, RowSense::kLessEqual,
                     inst.relief_items[r].max_preposition);
  }
  // (4) minimum stock at an open facility, one row per location.
  for (std::size_t n = 0; n < b.N; ++n) {
    LinearExpr e;
    for (std::size_t r = 0; r < b.R; ++r) e.add(p[r * b.N + n], 1.0);
    for (const auto& [id, cap] : y_at[n]) e.add(id, -inst.min_preposition);
    m.add_constraint("prep_min[" + inst.locations[n] + "]", e, RowSense::kGreaterEqual, 0.0);
  }
  // (5) one size per location.
  for (std::size_t n = 0; n < b.N; ++n) {
    if (y_at[n].empty()) continue;
    LinearExpr e;
    for (const auto& [id, cap] : y_at[n]) e.add(id, 1.0);
    m.add_constraint("single_size[" + inst.locations[n] + "]", e, RowSense::kLessEqual, 1.0);
  }
  // (6) pre-disaster budget.
  {
    LinearExpr e;
    for (std::size_t r = 0; r < b.R; ++r) {
      for (std::size_t n = 0; n < b.N; ++n) {
        e.add(p[r * b.N + n], inst.relief_items[r].unit_prep_cost[n]);
      }
    }
    for (std::size_t i = 0; i < inst.facility_options.size(); ++i) {
      const auto& f = inst.facility_options[i];
      e.add(m.variable_id(names::Y(f.size, f.location)), f.fixed_cost);
    }
    m.add_constraint("budget_first", e, RowSense::kLessEqual, inst.budget_first_stage);
  }

  for (std::size_t s = 0; s < b.S; ++s) {
    const std::string& sid = b.sid(s);
    // (10) shipments bounded by prepositioned stock.
    for (std::size_t r = 0; r < b.R; ++r) {
      for (std::size_t n = 0; n < b.N; ++n) {
        LinearExpr e;
        for (std::size_t a = 0; a < b.A; ++a) {
          e.add(b.X(r, a, n, s), static_cast<double>(b.demand.d(r, a, s)));
        }
        e.add(p[r * b.N + n], -1.0);
        m.add_constraint("stock" + names::bracket({inst.relief_items[r].id, inst.locations[n], sid}),
                         e, RowSense::kLessEqual, 0.0);
      }
    }
    // (11) at most the full need is served.
    for (std::size_t r = 0; r < b.R; ++r) {
      for (std::size_t a = 0; a < b.A; ++a) {
        LinearExpr e;
        for (std::size_t n = 0; n < b.N; ++n) e.add(b.X(r, a, n, s), 1.0);
        m.add_constraint("cover" + names::bracket({inst.relief_items[r].id, inst.areas[a].id, sid}),
                         e, RowSense::kLessEqual, 1.0);
      }
    }
    // (12) post-disaster transport budget.
    LinearExpr e;
    for (std::size_t r = 0; r < b.R; ++r) {
      const double load = inst.relief_items[r].volume_m3 / inst.vehicle.capacity_m3;
      for (std::size_t a = 0; a < b.A; ++a) {
        const double d = static_cast<double>(b.demand.d(r, a, s));
        for (std::size_t n = 0; n < b.N; ++n) e.add(b.X(r, a, n, s), b.ship[a][n] * load * d);
      }
    }
    m.add_constraint("budget_second[" + sid + "]", e, RowSense::kLessEqual,
                     inst.budget_second_stage);
  }
}

/// Ranking block over `groups` (each a set of area indices whose coverages
/// add up to the group's coverage). Returns the objective contribution.
inline LinearExpr emit_ranking(Builder& b, std::size_t s,
                               const std::vector<std::string>& group_ids,
                               const std::vector<std::vector<std::size_t>>& groups,
                               bool ranking_cuts) {
  ModelIR& m = b.model;
  const std::string& sid = b.sid(s);
  const std::size_t k = groups.size();
  LinearExpr objective;
  if (k == 0) return objective;

  std::vector<LinearExpr> cov(k);
  for (std::size_t w = 0; w < k; ++w) {
    for (std::size_t a : groups[w]) cov[w].add(b.coverage(a, s));
  }
  std::vector<VarId> z(k);
  for (std::size_t j = 0; j < k; ++j) {
    z[j] = m.add_variable(names::Z(j + 1, sid), VarKind::kContinuous, 0.0, 1.0);
  }
  std::vector<std::vector<VarId>> o(k, std::vector<VarId>(k));
  for (std::size_t w = 0; w < k; ++w) {
    for (std::size_t j = 0; j < k; ++j) {
      o[w][j] = m.add_variable(names::O(group_ids[w], j + 1, sid), VarKind::kBinary, 0.0, 1.0);
    }
  }
  for (std::size_t w = 0; w < k; ++w) {
    LinearExpr e;
    for (std::size_t j = 0; j < k; ++j) e.add(o[w][j], 1.0);
    m.add_constraint("rank_entity" + names::bracket({group_ids[w], sid}), e, RowSense::kEqual, 1.0);
  }
  for (std::size_t j = 0; j < k; ++j) {
    LinearExpr e;
    for (std::size_t w = 0; w < k; ++w) e.add(o[w][j], 1.0);
    m.add_constraint("rank_pos" + names::bracket({std::to_string(j + 1), sid}), e,
                     RowSense::kEqual, 1.0);
  }
  for (std::size_t w = 0; w < k; ++w) {
    for (std::size_t j = 0; j < k; ++j) {
      const std::string key = names::bracket({group_ids[w], std::to_string(j + 1), sid});
      // Z_j <= cov_w + 1 - O_wj
      LinearExpr ub;
      ub.add(z[j], 1.0).add(cov[w], -1.0).add(o[w][j], 1.0);
      m.add_constraint("z_ub" + key, ub, RowSense::kLessEqual, 1.0);
      // Z_j >= cov_w - 1 + O_wj
      LinearExpr lb;
      lb.add(z[j], 1.0).add(cov[w], -1.0).add(o[w][j], -1.0);
      m.add_constraint("z_lb" + key, lb, RowSense::kGreaterEqual, -1.0);
    }
  }
  for (std::size_t j = 0; j + 1 < k; ++j) {
    LinearExpr e;
    e.add(z[j], 1.0).add(z[j + 1], -1.0);
    m.add_constraint("z_chain" + names::bracket({std::to_string(j + 1), sid}), e,
                     RowSense::kLessEqual, 0.0);
  }
  if (ranking_cuts) {
    // Sorted Z: the m lowest ranks sum to at most the cheapest m-subset of
    // coverages. That minimum is max_t { m t - Σ_w (t - cov_w)^+ }, so
    //   Σ_{j<=m} Z_j <= m t_m - Σ_w e_wm,  e_wm >= t_m - cov_w,  e >= 0.
    // Valid for every ranking; makes the LP over Z exact for fixed coverages.
    for (std::size_t mm = 1; mm < k; ++mm) {
      const std::string rank = std::to_string(mm);
      VarId t = m.add_variable("rt" + names::bracket({rank, sid}), VarKind::kContinuous, 0.0, 1.0);
      LinearExpr cut;
      for (std::size_t j = 0; j < mm; ++j) cut.add(z[j], 1.0);
      cut.add(t, -static_cast<double>(mm));
      for (std::size_t w = 0; w < k; ++w) {
        const std::string key = names::bracket({group_ids[w], rank, sid});
        VarId e = m.add_variable("re" + key, VarKind::kContinuous, 0.0, kInf);
        LinearExpr ex;
        ex.add(e, 1.0).add(t, -1.0).add(cov[w], 1.0);
        m.add_constraint("rank_excess" + key, ex, RowSense::kGreaterEqual, 0.0);
        cut.add(e, 1.0);
      }
      m.add_constraint("rank_cut" + names::bracket({rank, sid}), cut, RowSense::kLessEqual, 0.0);
    }
    LinearExpr all;
    for (std::size_t j = 0; j < k; ++j) all.add(z[j], 1.0);
    for (std::size_t w = 0; w < k; ++w) all.add(cov[w], -1.0);
    m.add_constraint("rank_cut" + names::bracket({std::to_string(k), sid}), all,
                     RowSense::kLessEqual, 0.0);
  }
  const double kd = static_cast<double>(k);
  for (std::size_t j = 0; j < k; ++j) {
    const double weight = (2.0 * kd + 1.0 - 2.0 * static_cast<double>(j + 1)) / kd;
    objective.add(z[j], weight * b.demand.probability(s));
  }
  return objective;
}

}  // namespace detail

/// Constraints and variables shared by every formulation, with no objective.
inline ModelIR build_common(const Instance& inst, const DemandTable& demand) {
  detail::Builder b(inst, demand, inst.name + "_common");
  detail::emit_common(b);
  return std::move(b.model);
}

inline ModelIR build_sp(const Instance& inst, const DemandTable& demand) {
  detail::Builder b(inst, demand, inst.name + "_sp");
  detail::emit_common(b);
  LinearExpr obj;
  for (std::size_t s = 0; s < b.S; ++s) obj.add(b.effectiveness(s), demand.probability(s));
  b.model.set_objective(ObjectiveSense::kMaximize, obj);
  return std::move(b.model);
}

/// Proportion of equity units rho[a][s] = Σ_r u[r,a,s] / Σ_{r,a} u[r,a,s].
inline std::vector<std::vector<double>> gmd_proportions(const DemandTable& demand) {
  std::vector<std::vector<double>> rho(demand.num_areas(),
                                       std::vector<double>(demand.num_scenarios(), 0.0));
  for (std::size_t s = 0; s < demand.num_scenarios(); ++s) {
    double total = 0.0;
    for (std::size_t a = 0; a < demand.num_areas(); ++a) total += demand.area_share(a, s);
    if (total <= 0.0) continue;
    for (std::size_t a = 0; a < demand.num_areas(); ++a) {
      rho[a][s] = demand.area_share(a, s) / total;
    }
  }
  return rho;
}

inline ModelIR build_gmd(const Instance& inst, const DemandTable& demand) {
  detail::Builder b(inst, demand, inst.name + "_gmd");
  detail::emit_common(b);
  const auto rho = gmd_proportions(demand);
  LinearExpr obj;
  for (std::size_t s = 0; s < b.S; ++s) {
    const double pi = demand.probability(s);
    obj.add(b.effectiveness(s), pi);
    std::vector<LinearExpr> cov(b.A);
    for (std::size_t a = 0; a < b.A; ++a) cov[a] = b.coverage(a, s);
    for (std::size_t a = 0; a < b.A; ++a) {
      for (std::size_t a2 = a + 1; a2 < b.A; ++a2) {
        const std::string& ia = inst.areas[a].id;
        const std::string& ib = inst.areas[a2].id;
        VarId t = b.model.add_variable(names::t(ia, ib, b.sid(s)), VarKind::kContinuous, 0.0, kInf);
        const std::string key = names::bracket({ia, ib, b.sid(s)});
        // t >= rho_a cov_a' - rho_a' cov_a
        LinearExpr pos;
        pos.add(t, 1.0).add(cov[a2], -rho[a][s]).add(cov[a], rho[a2][s]);
        b.model.add_constraint("gmd_pos" + key, pos, RowSense::kGreaterEqual, 0.0);
        // t >= rho_a' cov_a - rho_a cov_a'
        LinearExpr neg;
        neg.add(t, 1.0).add(cov[a], -rho[a2][s]).add(cov[a2], rho[a][s]);
        b.model.add_constraint("gmd_neg" + key, neg, RowSense::kGreaterEqual, 0.0);
        obj.add(t, -pi);
      }
    }
  }
  b.model.set_objective(ObjectiveSense::kMaximize, obj);
  return std::move(b.model);
}

inline ModelIR build_gini(const Instance& inst, const DemandTable& demand,
                          bool ranking_cuts = false) {
  detail::Builder b(inst, demand, inst.name + "_gini");
  detail::emit_common(b);
  LinearExpr obj;
  for (std::size_t s = 0; s < b.S; ++s) {
    std::vector<std::string> ids;
    std::vector<std::vector<std::size_t>> groups;
    for (std::size_t a : demand.positive_areas(s)) {
      ids.push_back(inst.areas[a].id);
      groups.push_back({a});
    }
    obj.add(detail::emit_ranking(b, s, ids, groups, ranking_cuts));
  }
  b.model.set_objective(ObjectiveSense::kMaximize, obj);
  return std::move(b.model);
}

inline ModelIR build_ginic(const Instance& inst, const DemandTable& demand,
                           const std::vector<Clustering>& clusterings,
                           bool ranking_cuts = false) {
  if (clusterings.size() != demand.num_scenarios()) {
    throw std::invalid_argument("build_ginic: one clustering per scenario required");
  }
  detail::Builder b(inst, demand, inst.name + "_ginic");
  detail::emit_common(b);
  LinearExpr obj;
  for (std::size_t s = 0; s < b.S; ++s) {
    const Clustering& c = clusterings[s];
    const auto& positive = demand.positive_areas(s);
    if (c.areas != positive) {
      throw std::invalid_argument("build_ginic: clustering for scenario " + b.sid(s) +
                                  " does not partition its positive-demand areas");
    }
    if (!positive.empty() && c.k == 0) {
      throw std::invalid_argument("build_ginic: missing clustering for scenario " + b.sid(s));
    }
    std::vector<std::string> ids;
    std::vector<std::vector<std::size_t>> groups;
    for (std::size_t w = 0; w < c.k; ++w) {
      ids.push_back(names::cluster(w));
      groups.push_back(c.members(w));
      if (groups.back().empty()) {
        throw std::invalid_argument("build_ginic: empty cluster in scenario " + b.sid(s));
      }
    }
    obj.add(detail::emit_ranking(b, s, ids, groups, ranking_cuts));
  }
  b.model.set_objective(ObjectiveSense::kMaximize, obj);
  return std::move(b.model);
}

/// Adds the upper-bounding-Lorenz valid inequality to a gini model:
///   HL_s <= cov_a <= HU_s  for a in A_s
///   Σ_j (2n+1-2j) Z_js <= n U_s + (n-1)(HL_s - HU_s)
inline ModelIR add_valid_inequality(const ModelIR& model, const Instance& inst,
                                    const DemandTable& demand) {
  ModelIR m = model;
  detail::Builder b(inst, demand, m.name());
  // Recover X ids from the model by name.
  b.x.resize(b.S * b.R * b.A * b.N);
  for (std::size_t s = 0; s < b.S; ++s) {
    for (std::size_t r = 0; r < b.R; ++r) {
      for (std::size_t a = 0; a < b.A; ++a) {
        for (std::size_t n = 0; n < b.N; ++n) {
          b.x[((s * b.R + r) * b.A + a) * b.N + n] = m.variable_id(
              names::X(inst.relief_items[r].id, inst.areas[a].id, inst.locations[n], b.sid(s)));
        }
      }
    }
  }
  for (std::size_t s = 0; s < b.S; ++s) {
    const auto& positive = demand.positive_areas(s);
    const std::size_t n = positive.size();
    if (n == 0) continue;
    const std::string& sid = b.sid(s);
    if (!m.find_variable(names::O(inst.areas[positive.front()].id, 1, sid)) ||
        !m.find_variable(names::Z(n, sid)) || m.find_variable(names::Z(n + 1, sid))) {
      throw std::invalid_argument("add_valid_inequality: model is not a gini model");
    }
    VarId hl = m.add_variable(names::HL(sid), VarKind::kContinuous, 0.0, kInf);
    VarId hu = m.add_variable(names::HU(sid), VarKind::kContinuous, 0.0, kInf);
    for (std::size_t a : positive) {
      const LinearExpr cov = b.coverage(a, s);
      const std::string key = names::bracket({inst.areas[a].id, sid});
      LinearExpr low;
      low.add(hl, 1.0).add(cov, -1.0);
      m.add_constraint("h_low" + key, low, RowSense::kLessEqual, 0.0);
      LinearExpr up;
      up.add(hu, 1.0).add(cov, -1.0);
      m.add_constraint("h_up" + key, up, RowSense::kGreaterEqual, 0.0);
    }
    const double nd = static_cast<double>(n);
    LinearExpr vi;
    for (std::size_t j = 1; j <= n; ++j) {
      vi.add(m.variable_id(names::Z(j, sid)), 2.0 * nd + 1.0 - 2.0 * static_cast<double>(j));
    }
    vi.add(b.effectiveness(s), -nd);
    vi.add(hl, -(nd - 1.0)).add(hu, nd - 1.0);
    m.add_constraint("vi[" + sid + "]", vi, RowSense::kLessEqual, 0.0);
  }
  return m;
}

struct BuildOptions {
  bool valid_inequality = true;              // gini only
  bool ranking_cuts = false;                 // gini and ginic: partial-sum cuts on Z
  std::optional<std::vector<int>> clusters;  // ginic: k per scenario; elbow rule if empty
  std::uint64_t cluster_seed = 1;
};

/// Deterministic equivalent of formulation `f` over every scenario of `demand`.
inline ModelIR build_model(Formulation f, const Instance& inst, const DemandTable& demand,
                           const BuildOptions& opts = {}) {
  switch (f) {
    case Formulation::kSP: return build_sp(inst, demand);
    case Formulation::kGMD: return build_gmd(inst, demand);
    case Formulation::kGini: {
      ModelIR m = build_gini(inst, demand, opts.ranking_cuts);
      return opts.valid_inequality ? add_valid_inequality(m, inst, demand) : m;
    }
    case Formulation::kGiniC:
      return build_ginic(inst, demand, cluster_scenarios(demand, opts.clusters, opts.cluster_seed),
                         opts.ranking_cuts);
  }
  throw std::invalid_argument("build_model: unknown formulation");
}

/// Pins every Y and P variable to the plan's value.
inline ModelIR fix_first_stage(const ModelIR& model, const Instance& inst, const FirstStage& fs) {
  ModelIR m = model;
  std::size_t fixed_y = 0, fixed_p = 0;
  for (const auto& f : inst.facility_options) {
    auto it = fs.Y.find({f.size, f.location});
    if (it == fs.Y.end()) {
      throw std::invalid_argument("fix_first_stage: plan lacks Y for " + f.size + "/" + f.location);
    }
    const double v = it->second != 0 ? 1.0 : 0.0;
    m.set_bounds(m.variable_id(names::Y(f.size, f.location)), v, v);
    ++fixed_y;
  }
  for (const auto& r : inst.relief_items) {
    for (const auto& loc : inst.locations) {
      auto it = fs.P.find({r.id, loc});
      if (it == fs.P.end()) {
        throw std::invalid_argument("fix_first_stage: plan lacks P for " + r.id + "/" + loc);
      }
      m.set_bounds(m.variable_id(names::P(r.id, loc)), it->second, it->second);
      ++fixed_p;
    }
  }
  if (fixed_y != fs.Y.size() || fixed_p != fs.P.size()) {
    throw std::invalid_argument("fix_first_stage: plan has entries the instance does not define");
  }
  return m;
}

/// Reads (Y, P) from solver values; Y rounded, P clipped at zero.
inline FirstStage first_stage_from(const ValueMap& values, const Instance& inst) {
  FirstStage fs;
  for (const auto& f : inst.facility_options) {
    auto it = values.find(names::Y(f.size, f.location));
    const double v = it == values.end() ? 0.0 : it->second;
    fs.Y[{f.size, f.location}] = v > 0.5 ? 1 : 0;
  }
  for (const auto& r : inst.relief_items) {
    for (const auto& loc : inst.locations) {
      auto it = values.find(names::P(r.id, loc));
      const double v = it == values.end() ? 0.0 : it->second;
      fs.P[{r.id, loc}] = std::max(v, 0.0);
    }
  }
  return fs;
}

inline FirstStage empty_first_stage(const Instance& inst) {
  return first_stage_from(ValueMap{}, inst);
}

inline nlohmann::json to_json(const FirstStage& fs) {
  nlohmann::json j;
  j["open"] = nlohmann::json::array();
  for (const auto& [key, v] : fs.Y) {
    if (v) j["open"].push_back({{"size", key.first}, {"location", key.second}});
  }
  j["stock"] = nlohmann::json::array();
  for (const auto& [key, v] : fs.P) {
    j["stock"].push_back({{"item", key.first}, {"location", key.second}, {"units", v}});
  }
  return j;
}

/// Inverse of to_json; Y entries not listed as open are zero.
inline FirstStage first_stage_from_json(const nlohmann::json& j, const Instance& inst) {
  FirstStage fs = empty_first_stage(inst);
  for (const auto& o : j.at("open")) {
    std::pair<std::string, std::string> key{o.at("size").get<std::string>(),
                                            o.at("location").get<std::string>()};
    if (!fs.Y.count(key)) throw std::invalid_argument("unknown facility option in plan");
    fs.Y[key] = 1;
  }
  for (const auto& p : j.at("stock")) {
    std::pair<std::string, std::string> key{p.at("item").get<std::string>(),
                                            p.at("location").get<std::string>()};
    if (!fs.P.count(key)) throw std::invalid_argument("unknown stock entry in plan");
    fs.P[key] = p.at("units").get<double>();
  }
  return fs;
}

// ---------------------------------------------------------------------------
// Metrics.

struct ScenarioMetrics {
  std::string scenario;
  CoverageVector coverage;  // over A_s, area order
  double effectiveness = 0.0;
  std::optional<double> gini;  // empty when effectiveness is zero
};

/// Per-area coverage X^rank[a,s] = Σ_{r,n} u[r,a,s] X[r,a,n,s] for a in A_s,
/// then U_s and G_s via the Lorenz module.
inline std::vector<ScenarioMetrics> extract_metrics(const ValueMap& values, const Instance& inst,
                                                    const DemandTable& demand) {
  std::vector<ScenarioMetrics> out;
  for (std::size_t s = 0; s < demand.num_scenarios(); ++s) {
    ScenarioMetrics sm;
    sm.scenario = demand.scenario_id(s);
    double total = 0.0;
    for (std::size_t a : demand.positive_areas(s)) {
      double cov = 0.0;
      for (std::size_t r = 0; r < inst.num_items(); ++r) {
        const double u = demand.u(r, a, s);
        for (std::size_t n = 0; n < inst.num_locations(); ++n) {
          auto it = values.find(names::X(inst.relief_items[r].id, inst.areas[a].id,
                                         inst.locations[n], sm.scenario));
          if (it != values.end()) cov += u * it->second;
        }
      }
      sm.coverage.values.push_back(std::max(cov, 0.0));
      sm.coverage.labels.push_back(inst.areas[a].id);
      total += cov;
    }
    sm.effectiveness = total;
    if (!sm.coverage.values.empty()) {
      LorenzCurve curve = rank_coverages(sm.coverage);
      if (!curve.degenerate) sm.gini = compute_gini(curve).gini;
    }
    out.push_back(std::move(sm));
  }
  return out;
}

/// Per-item fill rates Σ_n X[r,a,n,s] over every (a in A_s, s) pair.
struct ItemCoverage {
  std::string item;
  std::vector<double> fill;  // one entry per positive (area, scenario) pair
  double mean = 0.0;
  double perfect_share = 0.0;  // share of pairs with fill >= 1 - 1e-6
};

inline std::vector<ItemCoverage> item_coverage(const ValueMap& values, const Instance& inst,
                                               const DemandTable& demand) {
  std::vector<ItemCoverage> out;
  for (std::size_t r = 0; r < inst.num_items(); ++r) {
    ItemCoverage ic;
    ic.item = inst.relief_items[r].id;
    std::size_t perfect = 0;
    for (std::size_t s = 0; s < demand.num_scenarios(); ++s) {
      for (std::size_t a : demand.positive_areas(s)) {
        double fill = 0.0;
        for (std::size_t n = 0; n < inst.num_locations(); ++n) {
          auto it = values.find(names::X(ic.item, inst.areas[a].id, inst.locations[n],
                                         demand.scenario_id(s)));
          if (it != values.end()) fill += it->second;
        }
        ic.fill.push_back(fill);
        if (fill >= 1.0 - 1e-6) ++perfect;
      }
    }
    if (!ic.fill.empty()) {
      double sum = 0.0;
      for (double f : ic.fill) sum += f;
      ic.mean = sum / static_cast<double>(ic.fill.size());
      ic.perfect_share = static_cast<double>(perfect) / static_cast<double>(ic.fill.size());
    }
    out.push_back(std::move(ic));
  }
  return out;
}

}  // namespace equilox

#endif  // EQUILOX_MODELS_HPP_
