#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <tuple>

#include "equilox/model_ir.hpp"
#include "equilox/models.hpp"
#include "support.hpp"

using namespace equilox;

namespace {

ModelIR small_model() {
  ModelIR m("small");
  VarId x = m.add_variable("x", VarKind::kContinuous, 0.0, kInf);
  VarId y = m.add_variable("y", VarKind::kBinary, 0.0, 1.0);
  VarId z = m.add_variable("z", VarKind::kContinuous, -kInf, 4.0);
  VarId w = m.add_variable("w", VarKind::kContinuous, 2.0, 2.0);
  LinearExpr a;
  a.add(x, 1.0).add(y, -2.5).add(z, 1.0);
  m.add_constraint("c1", a, RowSense::kLessEqual, 10.0);
  LinearExpr b;
  b.add(x, 1.0).add(w, 3.0);
  m.add_constraint("c2", b, RowSense::kGreaterEqual, -1.0);
  LinearExpr c;
  c.add(y, 1.0).add(z, 1e-7);
  m.add_constraint("c3", c, RowSense::kEqual, 0.5);
  LinearExpr o;
  o.add(x, 1.0).add(z, 0.1);
  m.set_objective(ObjectiveSense::kMaximize, o);
  return m;
}

using Triple = std::tuple<std::string, std::string, double>;

std::vector<Triple> coefficient_multiset(const ModelIR& m) {
  std::vector<Triple> out;
  for (const auto& c : m.constraints()) {
    for (const auto& t : c.terms) out.emplace_back(c.name, m.variables()[t.var].name, t.coef);
  }
  std::sort(out.begin(), out.end());
  return out;
}

void expect_same_model(const ModelIR& a, const ModelIR& b) {
  EXPECT_EQ(coefficient_multiset(a), coefficient_multiset(b));
  ASSERT_EQ(a.variables().size(), b.variables().size());
  for (const auto& v : a.variables()) {
    const auto id = b.find_variable(v.name);
    ASSERT_TRUE(id.has_value()) << v.name;
    const Variable& w = b.variables()[*id];
    EXPECT_EQ(v.kind, w.kind) << v.name;
    EXPECT_EQ(v.lower, w.lower) << v.name;
    EXPECT_EQ(v.upper, w.upper) << v.name;
  }
  ASSERT_EQ(a.constraints().size(), b.constraints().size());
  for (const auto& c : a.constraints()) {
    const auto id = b.find_constraint(c.name);
    ASSERT_TRUE(id.has_value()) << c.name;
    EXPECT_EQ(c.sense, b.constraints()[*id].sense);
    EXPECT_EQ(c.rhs, b.constraints()[*id].rhs);
  }
  EXPECT_EQ(a.objective().sense, b.objective().sense);
}

}  // namespace

TEST(ModelIR, LinearExprCanonicalMergesAndDropsZeros) {
  LinearExpr e;
  e.add(3, 1.0).add(1, 2.0).add(3, -1.0).add(2, 0.0).add(1, 0.5);
  const auto t = e.canonical();
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(t[0].var, 1u);
  EXPECT_DOUBLE_EQ(t[0].coef, 2.5);
}

TEST(ModelIR, RejectsDuplicatesAndBadDomains) {
  ModelIR m;
  m.add_variable("x", VarKind::kContinuous, 0.0, 1.0);
  EXPECT_THROW(m.add_variable("x", VarKind::kContinuous, 0.0, 1.0), ModelError);
  EXPECT_THROW(m.add_variable("y", VarKind::kContinuous, 2.0, 1.0), ModelError);
  LinearExpr e;
  e.add(7, 1.0);
  EXPECT_THROW(m.add_constraint("c", e, RowSense::kLessEqual, 0.0), ModelError);
}

TEST(ModelIR, FreeMpsRoundTrip) {
  const ModelIR m = small_model();
  expect_same_model(m, parse_mps(to_mps(m, MpsFormat::kFree)));
}

TEST(ModelIR, FixedMpsUsesShortNamesVerbatim) {
  const ModelIR m = small_model();
  const std::string text = to_mps(m, MpsFormat::kFixed);
  EXPECT_NE(text.find(" c1"), std::string::npos);
  expect_same_model(m, parse_mps(text));
}

TEST(ModelIR, FixedMpsFallsBackToPositionalNames) {
  ModelIR m;
  VarId x = m.add_variable("a_long_variable_name", VarKind::kBinary, 0.0, 1.0);
  LinearExpr e;
  e.add(x, 1.0);
  m.add_constraint("row", e, RowSense::kLessEqual, 1.0);
  m.set_objective(ObjectiveSense::kMinimize, e);
  const std::string text = to_mps(m, MpsFormat::kFixed);
  EXPECT_NE(text.find("C0000000"), std::string::npos);
  EXPECT_NE(text.find("R0000000"), std::string::npos);
  const ModelIR back = parse_mps(text);
  EXPECT_EQ(back.variables()[0].kind, VarKind::kBinary);
}

TEST(ModelIR, EmittersAreByteDeterministic) {
  const Instance inst = load_instance(equilox::testing::data_path("tiny.json"));
  const DemandTable d = derive_demands(inst);
  const ModelIR a = build_gini(inst, d);
  const ModelIR b = build_gini(inst, d);
  EXPECT_EQ(to_mps(a, MpsFormat::kFree), to_mps(b, MpsFormat::kFree));
  EXPECT_EQ(to_mps(a, MpsFormat::kFixed), to_mps(b, MpsFormat::kFixed));
  EXPECT_EQ(to_lp(a), to_lp(b));
  EXPECT_EQ(model_hash(a), model_hash(b));
}

TEST(ModelIR, FormulationRoundTripThroughFreeMps) {
  const Instance inst = load_instance(equilox::testing::data_path("tiny.json"));
  const DemandTable d = derive_demands(inst);
  for (Formulation f : {Formulation::kSP, Formulation::kGMD, Formulation::kGini,
                        Formulation::kGiniC}) {
    const ModelIR m = build_model(f, inst, d);
    expect_same_model(m, parse_mps(to_mps(m, MpsFormat::kFree)));
  }
}

TEST(ModelIR, LpTextShape) {
  const std::string lp = to_lp(small_model());
  EXPECT_EQ(lp.rfind("\\", 0), 0u);
  EXPECT_NE(lp.find("Maximize"), std::string::npos);
  EXPECT_NE(lp.find("Subject To"), std::string::npos);
  EXPECT_NE(lp.find("Binaries"), std::string::npos);
  EXPECT_NE(lp.find("End"), std::string::npos);
}

TEST(ModelIR, RelaxedDropsIntegrality) {
  const ModelIR m = small_model();
  const ModelIR r = m.relaxed();
  EXPECT_EQ(m.num_binaries(), 1u);
  EXPECT_EQ(r.num_binaries(), 0u);
  EXPECT_EQ(r.variables()[1].upper, 1.0);
}

TEST(ModelIRProperty, RandomModelsRoundTrip) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> coef(-100.0, 100.0);
  for (int t = 0; t < 50; ++t) {
    ModelIR m("rand");
    const std::size_t nv = 1 + rng() % 20;
    for (std::size_t j = 0; j < nv; ++j) {
      const bool bin = rng() % 3 == 0;
      const double lo = rng() % 2 ? 0.0 : -5.0;
      m.add_variable("v" + std::to_string(j), bin ? VarKind::kBinary : VarKind::kContinuous,
                     lo, rng() % 2 ? kInf : 50.0);
    }
    const std::size_t nr = 1 + rng() % 15;
    for (std::size_t i = 0; i < nr; ++i) {
      LinearExpr e;
      const std::size_t nt = 1 + rng() % 5;
      for (std::size_t k = 0; k < nt; ++k) e.add(rng() % nv, coef(rng));
      m.add_constraint("r" + std::to_string(i), e, static_cast<RowSense>(rng() % 3), coef(rng));
    }
    LinearExpr o;
    o.add(rng() % nv, 1.0);
    m.set_objective(rng() % 2 ? ObjectiveSense::kMaximize : ObjectiveSense::kMinimize, o);
    expect_same_model(m, parse_mps(to_mps(m, MpsFormat::kFree)));
  }
}
