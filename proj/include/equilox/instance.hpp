#ifndef EQUILOX_INSTANCE_HPP_
#define EQUILOX_INSTANCE_HPP_

// Problem data for the two-stage location-allocation model: areas, candidate
// response facilities, relief items, scenarios, distances and budgets.
// Instances are immutable once loaded; derived tables (demands, shipping
// costs) are computed from them on demand.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace equilox {

struct Area {
  std::string id;
  std::string name;
};

struct FacilityOption {
  std::string location;  // candidate location id (an area id)
  std::string size;      // size-level id
  double capacity_m3 = 0.0;
  double fixed_cost = 0.0;
};

struct ReliefItem {
  std::string id;
  std::string name;
  std::int64_t length_days = 1;
  std::int64_t coverage_people = 1;
  double volume_m3 = 0.0;
  double max_preposition = 0.0;
  /// Unit prepositioning cost per candidate location, in location order.
  std::vector<double> unit_prep_cost;
};

struct Vehicle {
  double capacity_m3 = 0.0;
  double fuel_cost_per_litre = 0.0;
  double km_per_litre = 0.0;
};

struct Scenario {
  std::string id;
  double probability = 0.0;
  std::map<std::string, std::int64_t> victims;  // area id -> displaced people
};

struct Instance {
  std::string name = "instance";
  std::vector<Area> areas;
  std::vector<std::string> locations;  // candidate RF locations (area ids)
  std::vector<FacilityOption> facility_options;
  std::vector<ReliefItem> relief_items;
  Vehicle vehicle;
  std::vector<Scenario> scenarios;
  std::vector<std::vector<double>> distances_km;  // area x area, area order
  double budget_first_stage = 0.0;
  double budget_second_stage = 0.0;
  double min_preposition = 1.0;
  std::optional<std::vector<int>> clusters_k;  // per-scenario k override

  std::size_t num_areas() const { return areas.size(); }
  std::size_t num_locations() const { return locations.size(); }
  std::size_t num_items() const { return relief_items.size(); }
  std::size_t num_scenarios() const { return scenarios.size(); }

  std::optional<std::size_t> area_index(const std::string& id) const {
    for (std::size_t i = 0; i < areas.size(); ++i) {
      if (areas[i].id == id) return i;
    }
    return std::nullopt;
  }
  std::optional<std::size_t> location_index(const std::string& id) const {
    for (std::size_t i = 0; i < locations.size(); ++i) {
      if (locations[i] == id) return i;
    }
    return std::nullopt;
  }

  /// Distinct facility size ids in order of first appearance.
  std::vector<std::string> sizes() const {
    std::vector<std::string> out;
    for (const auto& f : facility_options) {
      if (std::find(out.begin(), out.end(), f.size) == out.end()) {
        out.push_back(f.size);
      }
    }
    return out;
  }
};

/// Malformed instance document (syntax or schema shape).
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Finding {
  std::string field;
  std::string message;
};

/// Instance that parsed but violates one or more data invariants.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(std::vector<Finding> findings)
      : std::runtime_error(describe(findings)), findings_(std::move(findings)) {}
  const std::vector<Finding>& findings() const { return findings_; }

 private:
  static std::string describe(const std::vector<Finding>& findings) {
    std::string out = "invalid instance:";
    for (const auto& f : findings) out += "\n  " + f.field + ": " + f.message;
    return out;
  }
  std::vector<Finding> findings_;
};

inline constexpr double kProbabilityTolerance = 1e-9;

// ---------------------------------------------------------------------------

/// Every violated invariant, one finding each. Empty means valid.
inline std::vector<Finding> validate_instance(const Instance& inst) {
  std::vector<Finding> out;
  auto add = [&out](std::string field, std::string msg) {
    out.push_back({std::move(field), std::move(msg)});
  };
  auto num = [](double v) {
    std::ostringstream os;
    os << v;
    return os.str();
  };

  if (inst.areas.empty()) add("areas", "no areas defined");
  std::set<std::string> area_ids;
  for (std::size_t i = 0; i < inst.areas.size(); ++i) {
    const auto& a = inst.areas[i];
    const std::string field = "areas[" + std::to_string(i) + "]";
    if (a.id.empty()) add(field, "empty area id");
    else if (!area_ids.insert(a.id).second) add(field, "duplicate area id '" + a.id + "'");
  }

  std::set<std::string> loc_ids;
  for (const auto& l : inst.locations) {
    if (!area_ids.count(l)) add("locations", "location '" + l + "' is not an area id");
    if (!loc_ids.insert(l).second) add("locations", "duplicate location '" + l + "'");
  }

  std::set<std::pair<std::string, std::string>> options;
  for (std::size_t i = 0; i < inst.facility_options.size(); ++i) {
    const auto& f = inst.facility_options[i];
    const std::string field = "facility_options[" + std::to_string(i) + "] (" +
                              f.location + "/" + f.size + ")";
    if (!loc_ids.count(f.location)) add(field, "unknown location '" + f.location + "'");
    if (!options.insert({f.location, f.size}).second) {
      add(field, "duplicate (location, size) pair");
    }
    if (!(f.capacity_m3 > 0.0)) add(field, "capacity must be positive, got " + num(f.capacity_m3));
    if (!(f.fixed_cost >= 0.0)) add(field, "fixed cost must be nonnegative, got " + num(f.fixed_cost));
  }

  std::set<std::string> item_ids;
  for (std::size_t i = 0; i < inst.relief_items.size(); ++i) {
    const auto& r = inst.relief_items[i];
    const std::string field = "relief_items[" + std::to_string(i) + "] (" + r.id + ")";
    if (r.id.empty()) add(field, "empty item id");
    else if (!item_ids.insert(r.id).second) add(field, "duplicate item id");
    if (r.length_days < 1) add(field, "length_days must be at least 1");
    if (r.coverage_people < 1) add(field, "coverage_people must be at least 1");
    if (!(r.volume_m3 > 0.0)) add(field, "volume must be positive");
    if (!(r.max_preposition >= 0.0)) add(field, "max_preposition must be nonnegative");
    if (r.unit_prep_cost.size() != inst.locations.size()) {
      add(field, "unit_prep_cost must have one entry per location");
    }
    for (double c : r.unit_prep_cost) {
      if (!(c >= 0.0)) {
        add(field, "unit_prep_cost must be nonnegative");
        break;
      }
    }
  }
  if (inst.relief_items.empty()) add("relief_items", "no relief items defined");

  if (!(inst.vehicle.capacity_m3 > 0.0)) add("vehicle.capacity_m3", "must be positive");
  if (!(inst.vehicle.fuel_cost_per_litre > 0.0)) add("vehicle.fuel_cost_per_litre", "must be positive");
  if (!(inst.vehicle.km_per_litre > 0.0)) add("vehicle.km_per_litre", "must be positive");

  if (inst.scenarios.empty()) add("scenarios", "no scenarios defined");
  std::set<std::string> scen_ids;
  double total_prob = 0.0;
  for (std::size_t i = 0; i < inst.scenarios.size(); ++i) {
    const auto& s = inst.scenarios[i];
    const std::string field = "scenarios[" + std::to_string(i) + "] (" + s.id + ")";
    if (s.id.empty()) add(field, "empty scenario id");
    else if (!scen_ids.insert(s.id).second) add(field, "duplicate scenario id");
    if (!(s.probability > 0.0 && s.probability <= 1.0)) {
      add(field, "probability must lie in (0, 1], got " + num(s.probability));
    }
    total_prob += s.probability;
    for (const auto& a : inst.areas) {
      if (!s.victims.count(a.id)) add(field, "no victims entry for area '" + a.id + "'");
    }
    for (const auto& [area, v] : s.victims) {
      if (!area_ids.count(area)) add(field, "victims keyed by unknown area '" + area + "'");
      if (v < 0) add(field, "negative victims for area '" + area + "'");
    }
  }
  if (!inst.scenarios.empty() && std::fabs(total_prob - 1.0) > kProbabilityTolerance) {
    add("scenarios", "probabilities sum to " + num(total_prob) + ", expected 1");
  }

  const std::size_t n = inst.areas.size();
  bool square = inst.distances_km.size() == n;
  for (const auto& row : inst.distances_km) square = square && row.size() == n;
  if (!square) {
    add("distances_km", "expected a " + std::to_string(n) + "x" + std::to_string(n) + " matrix");
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      if (inst.distances_km[i][i] != 0.0) {
        add("distances_km", "nonzero diagonal at area '" + inst.areas[i].id + "'");
      }
      for (std::size_t j = 0; j < n; ++j) {
        if (!(inst.distances_km[i][j] >= 0.0)) {
          add("distances_km", "negative distance " + inst.areas[i].id + "-" + inst.areas[j].id);
        }
        if (j > i && inst.distances_km[i][j] != inst.distances_km[j][i]) {
          add("distances_km", "asymmetric entry " + inst.areas[i].id + "-" + inst.areas[j].id);
        }
      }
    }
  }

  if (!(inst.budget_first_stage >= 0.0)) add("budgets.first_stage", "must be nonnegative");
  if (!(inst.budget_second_stage >= 0.0)) add("budgets.second_stage", "must be nonnegative");
  if (!(inst.min_preposition >= 0.0)) add("min_preposition", "must be nonnegative");

  if (inst.clusters_k) {
    if (inst.clusters_k->size() != inst.scenarios.size()) {
      add("clusters_k", "expected one entry per scenario");
    }
    for (int k : *inst.clusters_k) {
      if (k < 1) {
        add("clusters_k", "cluster counts must be positive");
        break;
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON schema.

namespace detail {

template <typename T>
T required(const nlohmann::json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) {
    throw ParseError(where + ": missing key '" + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(where + "." + key + ": " + e.what());
  }
}

}  // namespace detail

/// Builds an Instance from a parsed JSON document. Shape errors throw
/// ParseError; data invariants are left to validate_instance.
inline Instance parse_instance(const nlohmann::json& doc) {
  using detail::required;
  if (!doc.is_object()) throw ParseError("instance document must be a JSON object");
  Instance inst;
  if (doc.contains("name")) inst.name = required<std::string>(doc, "name", "instance");

  for (const auto& a : required<nlohmann::json>(doc, "areas", "instance")) {
    Area area;
    area.id = required<std::string>(a, "id", "areas[]");
    area.name = a.contains("name") ? required<std::string>(a, "name", "areas[]") : area.id;
    inst.areas.push_back(std::move(area));
  }
  if (doc.contains("locations")) {
    inst.locations = required<std::vector<std::string>>(doc, "locations", "instance");
  } else {
    for (const auto& a : inst.areas) inst.locations.push_back(a.id);
  }

  for (const auto& f : required<nlohmann::json>(doc, "facility_options", "instance")) {
    FacilityOption opt;
    opt.location = required<std::string>(f, "location", "facility_options[]");
    opt.size = required<std::string>(f, "size", "facility_options[]");
    opt.capacity_m3 = required<double>(f, "capacity_m3", "facility_options[]");
    opt.fixed_cost = required<double>(f, "fixed_cost", "facility_options[]");
    inst.facility_options.push_back(std::move(opt));
  }

  for (const auto& r : required<nlohmann::json>(doc, "relief_items", "instance")) {
    ReliefItem item;
    const std::string where = "relief_items[]";
    item.id = required<std::string>(r, "id", where);
    item.name = r.contains("name") ? required<std::string>(r, "name", where) : item.id;
    item.length_days = required<std::int64_t>(r, "length_days", where);
    item.coverage_people = required<std::int64_t>(r, "coverage_people", where);
    item.volume_m3 = required<double>(r, "volume_m3", where);
    item.max_preposition = required<double>(r, "max_preposition", where);
    const auto& cost = required<nlohmann::json>(r, "unit_prep_cost", where);
    if (cost.is_number()) {
      item.unit_prep_cost.assign(inst.locations.size(), cost.get<double>());
    } else if (cost.is_object()) {
      for (const auto& loc : inst.locations) {
        item.unit_prep_cost.push_back(required<double>(cost, loc.c_str(), where + ".unit_prep_cost"));
      }
    } else {
      throw ParseError(where + ".unit_prep_cost: expected a number or a per-location object");
    }
    inst.relief_items.push_back(std::move(item));
  }

  const auto& v = required<nlohmann::json>(doc, "vehicle", "instance");
  inst.vehicle.capacity_m3 = required<double>(v, "capacity_m3", "vehicle");
  inst.vehicle.fuel_cost_per_litre = required<double>(v, "fuel_cost_per_litre", "vehicle");
  inst.vehicle.km_per_litre = required<double>(v, "km_per_litre", "vehicle");

  for (const auto& s : required<nlohmann::json>(doc, "scenarios", "instance")) {
    Scenario sc;
    sc.id = required<std::string>(s, "id", "scenarios[]");
    sc.probability = required<double>(s, "probability", "scenarios[]");
    sc.victims = required<std::map<std::string, std::int64_t>>(s, "victims", "scenarios[]");
    inst.scenarios.push_back(std::move(sc));
  }

  inst.distances_km = required<std::vector<std::vector<double>>>(doc, "distances_km", "instance");
  const auto& b = required<nlohmann::json>(doc, "budgets", "instance");
  inst.budget_first_stage = required<double>(b, "first_stage", "budgets");
  inst.budget_second_stage = required<double>(b, "second_stage", "budgets");
  if (doc.contains("min_preposition")) {
    inst.min_preposition = required<double>(doc, "min_preposition", "instance");
  }
  if (doc.contains("clusters_k")) {
    inst.clusters_k = required<std::vector<int>>(doc, "clusters_k", "instance");
  }
  return inst;
}

inline nlohmann::json to_json(const Instance& inst) {
  nlohmann::json doc;
  doc["name"] = inst.name;
  for (const auto& a : inst.areas) doc["areas"].push_back({{"id", a.id}, {"name", a.name}});
  doc["locations"] = inst.locations;
  doc["facility_options"] = nlohmann::json::array();
  for (const auto& f : inst.facility_options) {
    doc["facility_options"].push_back({{"location", f.location},
                                       {"size", f.size},
                                       {"capacity_m3", f.capacity_m3},
                                       {"fixed_cost", f.fixed_cost}});
  }
  for (const auto& r : inst.relief_items) {
    nlohmann::json cost = nlohmann::json::object();
    for (std::size_t n = 0; n < inst.locations.size() && n < r.unit_prep_cost.size(); ++n) {
      cost[inst.locations[n]] = r.unit_prep_cost[n];
    }
    doc["relief_items"].push_back({{"id", r.id},
                                   {"name", r.name},
                                   {"length_days", r.length_days},
                                   {"coverage_people", r.coverage_people},
                                   {"volume_m3", r.volume_m3},
                                   {"max_preposition", r.max_preposition},
                                   {"unit_prep_cost", cost}});
  }
  doc["vehicle"] = {{"capacity_m3", inst.vehicle.capacity_m3},
                    {"fuel_cost_per_litre", inst.vehicle.fuel_cost_per_litre},
                    {"km_per_litre", inst.vehicle.km_per_litre}};
  for (const auto& s : inst.scenarios) {
    doc["scenarios"].push_back(
        {{"id", s.id}, {"probability", s.probability}, {"victims", s.victims}});
  }
  doc["distances_km"] = inst.distances_km;
  doc["budgets"] = {{"first_stage", inst.budget_first_stage},
                    {"second_stage", inst.budget_second_stage}};
  doc["min_preposition"] = inst.min_preposition;
  if (inst.clusters_k) doc["clusters_k"] = *inst.clusters_k;
  return doc;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

/// Parses and validates; throws ParseError or ValidationError.
inline Instance load_instance_text(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what());
  }
  Instance inst = parse_instance(doc);
  if (auto findings = validate_instance(inst); !findings.empty()) {
    throw ValidationError(std::move(findings));
  }
  return inst;
}

inline Instance load_instance(const std::string& path) {
  return load_instance_text(read_file(path));
}

// ---------------------------------------------------------------------------
// Derived parameters.

/// Per-scenario demand quantities d[r,a,s], shares u[r,a,s] and the
/// positive-demand area sets A_s. Also used for sampled realizations, so it
/// carries its own scenario ids and probabilities. Demands are integral for
/// instance data; continuous sampling may store fractional values.
class DemandTable {
 public:
  DemandTable() = default;
  DemandTable(std::vector<std::string> scenario_ids,
              std::vector<double> probabilities, std::size_t num_items,
              std::size_t num_areas, std::vector<std::int64_t> demand)
      : DemandTable(std::move(scenario_ids), std::move(probabilities), num_items, num_areas,
                    std::vector<double>(demand.begin(), demand.end())) {}

  DemandTable(std::vector<std::string> scenario_ids,
              std::vector<double> probabilities, std::size_t num_items,
              std::size_t num_areas, std::vector<double> demand)
      : scenario_ids_(std::move(scenario_ids)),
        probabilities_(std::move(probabilities)),
        items_(num_items),
        areas_(num_areas),
        d_(std::move(demand)) {
    const std::size_t S = scenario_ids_.size();
    if (probabilities_.size() != S || d_.size() != S * items_ * areas_) {
      throw std::invalid_argument("DemandTable: inconsistent dimensions");
    }
    u_.assign(d_.size(), 0.0);
    totals_.assign(S, 0.0);
    positive_.resize(S);
    for (double v : d_) {
      if (!(v >= 0.0)) throw std::invalid_argument("DemandTable: demands must be nonnegative");
    }
    for (std::size_t s = 0; s < S; ++s) {
      double total = 0.0;
      for (std::size_t r = 0; r < items_; ++r) {
        for (std::size_t a = 0; a < areas_; ++a) total += d(r, a, s);
      }
      totals_[s] = total;
      for (std::size_t a = 0; a < areas_; ++a) {
        double area_total = 0.0;
        for (std::size_t r = 0; r < items_; ++r) {
          area_total += d(r, a, s);
          if (total > 0) {
            u_[index(r, a, s)] = d(r, a, s) / total;
          }
        }
        if (area_total > 0) positive_[s].push_back(a);
      }
    }
  }

  std::size_t num_scenarios() const { return scenario_ids_.size(); }
  std::size_t num_items() const { return items_; }
  std::size_t num_areas() const { return areas_; }
  const std::string& scenario_id(std::size_t s) const { return scenario_ids_[s]; }
  const std::vector<std::string>& scenario_ids() const { return scenario_ids_; }
  double probability(std::size_t s) const { return probabilities_[s]; }

  double d(std::size_t r, std::size_t a, std::size_t s) const { return d_[index(r, a, s)]; }
  double u(std::size_t r, std::size_t a, std::size_t s) const { return u_[index(r, a, s)]; }
  double total(std::size_t s) const { return totals_[s]; }

  /// Area indices with positive total demand, ascending.
  const std::vector<std::size_t>& positive_areas(std::size_t s) const { return positive_[s]; }

  /// Σ_r u[r,a,s]: the area's share of scenario demand.
  double area_share(std::size_t a, std::size_t s) const {
    double v = 0.0;
    for (std::size_t r = 0; r < items_; ++r) v += u(r, a, s);
    return v;
  }

 private:
  std::size_t index(std::size_t r, std::size_t a, std::size_t s) const {
    return (s * items_ + r) * areas_ + a;
  }

  std::vector<std::string> scenario_ids_;
  std::vector<double> probabilities_;
  std::size_t items_ = 0;
  std::size_t areas_ = 0;
  std::vector<double> d_;
  std::vector<double> u_;
  std::vector<double> totals_;
  std::vector<std::vector<std::size_t>> positive_;
};

/// ceil(length / coverage * victims), computed exactly in integers.
inline std::int64_t item_demand(const ReliefItem& item, std::int64_t victims) {
  const std::int64_t num = item.length_days * victims;
  return (num + item.coverage_people - 1) / item.coverage_people;
}

inline DemandTable derive_demands(const Instance& inst) {
  const std::size_t S = inst.num_scenarios(), R = inst.num_items(), A = inst.num_areas();
  std::vector<std::string> ids;
  std::vector<double> probs;
  std::vector<std::int64_t> d(S * R * A, 0);
  for (std::size_t s = 0; s < S; ++s) {
    ids.push_back(inst.scenarios[s].id);
    probs.push_back(inst.scenarios[s].probability);
    for (std::size_t r = 0; r < R; ++r) {
      for (std::size_t a = 0; a < A; ++a) {
        auto it = inst.scenarios[s].victims.find(inst.areas[a].id);
        const std::int64_t victims = it == inst.scenarios[s].victims.end() ? 0 : it->second;
        d[(s * R + r) * A + a] = item_demand(inst.relief_items[r], victims);
      }
    }
  }
  return DemandTable(std::move(ids), std::move(probs), R, A, std::move(d));
}

/// Per-trip shipping cost c^d[a][n] between area a and candidate location n
/// (fuel cost per km times road distance).
inline std::vector<std::vector<double>> derive_shipping_costs(const Instance& inst) {
  const double per_km = inst.vehicle.fuel_cost_per_litre / inst.vehicle.km_per_litre;
  std::vector<std::vector<double>> cost(inst.num_areas(),
                                        std::vector<double>(inst.num_locations(), 0.0));
  for (std::size_t n = 0; n < inst.num_locations(); ++n) {
    const std::size_t loc_area = inst.area_index(inst.locations[n]).value();
    for (std::size_t a = 0; a < inst.num_areas(); ++a) {
      cost[a][n] = per_km * inst.distances_km[a][loc_area];
    }
  }
  return cost;
}

}  // namespace equilox

#endif  // EQUILOX_INSTANCE_HPP_
