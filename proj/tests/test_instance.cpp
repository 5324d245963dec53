#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "equilox/instance.hpp"
#include "support.hpp"

using namespace equilox;
using equilox::testing::data_path;

namespace {

const Instance& serrana() {
  static const Instance inst = load_instance(data_path("serrana.json"));
  return inst;
}

std::size_t idx(const Instance& inst, const std::string& id) { return inst.area_index(id).value(); }

std::size_t scen(const Instance& inst, const std::string& id) {
  for (std::size_t s = 0; s < inst.num_scenarios(); ++s) {
    if (inst.scenarios[s].id == id) return s;
  }
  throw std::out_of_range(id);
}

std::size_t item(const Instance& inst, const std::string& id) {
  for (std::size_t r = 0; r < inst.num_items(); ++r) {
    if (inst.relief_items[r].id == id) return r;
  }
  throw std::out_of_range(id);
}

bool has_finding(const std::vector<Finding>& fs, const std::string& field_prefix) {
  for (const auto& f : fs) {
    if (f.field.rfind(field_prefix, 0) == 0) return true;
  }
  return false;
}

}  // namespace

TEST(Instance, CaseStudyShape) {
  const Instance& inst = serrana();
  EXPECT_EQ(inst.num_areas(), 13u);
  EXPECT_EQ(inst.num_scenarios(), 18u);
  EXPECT_EQ(inst.num_items(), 6u);
  EXPECT_EQ(inst.facility_options.size(), 52u);
  for (const auto& s : inst.scenarios) EXPECT_NEAR(s.probability, 1.0 / 18.0, 1e-12);
  EXPECT_DOUBLE_EQ(inst.budget_first_stage, 26206190.0);
  EXPECT_DOUBLE_EQ(inst.budget_second_stage, 23415.0);
  EXPECT_DOUBLE_EQ(inst.vehicle.capacity_m3, 12.0);
  EXPECT_TRUE(validate_instance(inst).empty());
  ASSERT_TRUE(inst.clusters_k.has_value());
  EXPECT_EQ(*inst.clusters_k,
            (std::vector<int>{1, 1, 1, 2, 2, 3, 1, 3, 3, 3, 3, 3, 3, 2, 1, 2, 2, 3}));
}

TEST(Instance, DemandOracleCells) {
  const Instance& inst = serrana();
  const DemandTable d = derive_demands(inst);
  const std::size_t ter = idx(inst, "ter"), s2001 = scen(inst, "y2001");
  // Hand evaluation: 7 days x 10028 people / 1 person per unit; 1 x 10028 / 4.
  EXPECT_EQ(d.d(item(inst, "water"), ter, s2001), 70196.0);
  EXPECT_EQ(d.d(item(inst, "food"), ter, s2001), 2507.0);
}

TEST(Instance, YearTwoThousandOnlyHitsTresRios) {
  const Instance& inst = serrana();
  const DemandTable d = derive_demands(inst);
  EXPECT_EQ(d.positive_areas(scen(inst, "y2000")), (std::vector<std::size_t>{idx(inst, "trr")}));
}

TEST(Instance, PositiveAreaCounts) {
  const DemandTable d = derive_demands(serrana());
  std::size_t sum = 0, sum_sq = 0;
  for (std::size_t s = 0; s < d.num_scenarios(); ++s) {
    sum += d.positive_areas(s).size();
    sum_sq += d.positive_areas(s).size() * d.positive_areas(s).size();
  }
  EXPECT_EQ(sum, 74u);
  EXPECT_EQ(sum_sq, 518u);
}

TEST(Instance, DemandInvariants) {
  const Instance& inst = serrana();
  const DemandTable d = derive_demands(inst);
  for (std::size_t s = 0; s < d.num_scenarios(); ++s) {
    double total = 0.0;
    for (std::size_t r = 0; r < d.num_items(); ++r) {
      for (std::size_t a = 0; a < d.num_areas(); ++a) {
        total += d.u(r, a, s);
        const auto v = inst.scenarios[s].victims.at(inst.areas[a].id);
        EXPECT_EQ(d.d(r, a, s) == 0.0, v == 0);
        EXPECT_EQ(d.d(r, a, s), std::floor(d.d(r, a, s)));
      }
    }
    EXPECT_NEAR(total, 1.0, 1e-9);
    for (std::size_t a = 0; a < d.num_areas(); ++a) {
      const bool positive = std::find(d.positive_areas(s).begin(), d.positive_areas(s).end(), a) !=
                            d.positive_areas(s).end();
      EXPECT_EQ(positive, d.area_share(a, s) > 0.0);
    }
  }
}

TEST(InstanceProperty, DemandMonotoneInVictims) {
  std::mt19937_64 rng(3);
  ReliefItem it;
  for (int t = 0; t < 2000; ++t) {
    it.length_days = 1 + static_cast<std::int64_t>(rng() % 10);
    it.coverage_people = 1 + static_cast<std::int64_t>(rng() % 10);
    const std::int64_t v = static_cast<std::int64_t>(rng() % 200000);
    const std::int64_t d = item_demand(it, v);
    EXPECT_LE(d, item_demand(it, v + 1 + static_cast<std::int64_t>(rng() % 50)));
    // Independent oracle via long double ceil.
    const long double exact =
        static_cast<long double>(it.length_days) * v / static_cast<long double>(it.coverage_people);
    EXPECT_EQ(d, static_cast<std::int64_t>(std::ceil(exact - 1e-12L)));
  }
}

TEST(Instance, ShippingCostOracle) {
  const Instance& inst = serrana();
  const auto c = derive_shipping_costs(inst);
  EXPECT_NEAR(c[idx(inst, "ter")][inst.location_index("pet").value()], 97.0736, 1e-6);
  EXPECT_NEAR(c[idx(inst, "ter")][inst.location_index("pet").value()], 3.59 / 2.5 * 67.6, 1e-9);
  for (std::size_t a = 0; a < inst.num_areas(); ++a) {
    EXPECT_EQ(c[a][a], 0.0);
    for (std::size_t b = 0; b < inst.num_areas(); ++b) {
      EXPECT_EQ(c[a][b], c[b][a]);
      EXPECT_GE(c[a][b], 0.0);
    }
  }
}

TEST(Instance, ProbabilitySumMustBeOne) {
  Instance inst = serrana();
  inst.scenarios[0].probability -= 0.1;
  auto fs = validate_instance(inst);
  EXPECT_TRUE(has_finding(fs, "scenarios"));
}

TEST(Instance, EmptyScenarioListRejected) {
  Instance inst = serrana();
  inst.scenarios.clear();
  EXPECT_TRUE(has_finding(validate_instance(inst), "scenarios"));
}

TEST(Instance, NegativeCapacityNamesTheOption) {
  Instance inst = serrana();
  inst.facility_options[5].capacity_m3 = -1.0;
  auto fs = validate_instance(inst);
  ASSERT_EQ(fs.size(), 1u);
  EXPECT_EQ(fs[0].field.rfind("facility_options[5]", 0), 0u) << fs[0].field;
}

TEST(Instance, DuplicateAreaIdIsOneFinding) {
  Instance inst = serrana();
  inst.areas[1].id = inst.areas[0].id;
  // The duplicate also breaks victim keys and locations; only the area
  // finding is under test here.
  auto fs = validate_instance(inst);
  std::size_t dup = 0;
  for (const auto& f : fs) dup += f.message.find("duplicate area id") != std::string::npos;
  EXPECT_EQ(dup, 1u);
}

TEST(Instance, AsymmetricDistanceRejected) {
  Instance inst = serrana();
  inst.distances_km[0][1] += 1.0;
  EXPECT_TRUE(has_finding(validate_instance(inst), "distances_km"));
}

TEST(Instance, JsonRoundTrip) {
  const Instance& inst = serrana();
  const Instance back = parse_instance(to_json(inst));
  EXPECT_EQ(to_json(back).dump(), to_json(inst).dump());
}

TEST(Instance, MalformedJsonIsParseError) {
  EXPECT_THROW(load_instance_text("{\"areas\": ["), ParseError);
  EXPECT_THROW(load_instance_text("[1, 2]"), ParseError);
}

TEST(Instance, ValidationErrorCarriesFindings) {
  nlohmann::json doc = to_json(serrana());
  doc["scenarios"][0]["probability"] = 0.5;
  try {
    load_instance_text(doc.dump());
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_FALSE(e.findings().empty());
  }
}

TEST(Instance, PerLocationPrepCostAccepted) {
  nlohmann::json doc = to_json(load_instance(data_path("tiny.json")));
  doc["relief_items"][0]["unit_prep_cost"] = {{"north", 1.0}, {"river", 2.0}, {"hill", 3.0}};
  const Instance inst = load_instance_text(doc.dump());
  EXPECT_EQ(inst.relief_items[0].unit_prep_cost, (std::vector<double>{1.0, 2.0, 3.0}));
}

TEST(Instance, RealValuedDemandTable) {
  DemandTable d({"x"}, {1.0}, 1, 2, std::vector<double>{0.5, 1.5});
  EXPECT_DOUBLE_EQ(d.u(0, 0, 0), 0.25);
  EXPECT_DOUBLE_EQ(d.total(0), 2.0);
  EXPECT_THROW(DemandTable({"x"}, {1.0}, 1, 2, std::vector<double>{-1.0, 1.0}),
               std::invalid_argument);
}
