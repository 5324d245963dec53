// Acceptance runner: one PASS/FAIL line per criterion.
//
//   acceptance [--criteria 1,2,...] [--workdir DIR] [--plan-time-limit S]

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "equilox/cluster.hpp"
#include "equilox/instance.hpp"
#include "equilox/lorenz.hpp"
#include "equilox/models.hpp"
#include "equilox/sim.hpp"
#include "equilox/solver.hpp"

namespace fs = std::filesystem;
using namespace equilox;
using json = nlohmann::json;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string data_path(const std::string& f) { return (fs::path(EQUILOX_DATA_DIR) / f).string(); }

std::string fmt(double v, int prec = 6) {
  std::ostringstream os;
  os.precision(prec);
  os << v;
  return os.str();
}

SolveParams exact_params() {
  SolveParams p;
  p.rel_gap = 1e-9;
  p.abs_gap = 1e-9;
  p.threads = 1;
  p.time_limit_s = 600;
  return p;
}

// Small random instance: every location is an area.
Instance random_instance(std::mt19937_64& rng, std::size_t areas, std::size_t scenarios,
                         std::size_t items, bool generous) {
  auto uni = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  Instance inst;
  inst.name = "rand";
  for (std::size_t a = 0; a < areas; ++a) {
    inst.areas.push_back({"a" + std::to_string(a + 1), "Area " + std::to_string(a + 1)});
    inst.locations.push_back(inst.areas.back().id);
  }
  for (std::size_t a = 0; a < areas; ++a) {
    const double cap = generous ? 1e7 : uni(20, 60);
    inst.facility_options.push_back({inst.locations[a], "small", cap, double(uni(500, 1500))});
    if (uni(0, 1)) {
      inst.facility_options.push_back(
          {inst.locations[a], "large", cap * 2.5, double(uni(1500, 3000))});
    }
  }
  for (std::size_t r = 0; r < items; ++r) {
    ReliefItem it;
    it.id = "i" + std::to_string(r + 1);
    it.name = it.id;
    it.length_days = uni(1, 3);
    it.coverage_people = uni(1, 4);
    it.volume_m3 = 0.01 * uni(1, 5);
    it.max_preposition = generous ? 1e9 : uni(300, 1500);
    it.unit_prep_cost.assign(areas, double(uni(1, 4)));
    inst.relief_items.push_back(it);
  }
  inst.vehicle = {10.0, 2.0, 4.0};
  for (std::size_t s = 0; s < scenarios; ++s) {
    Scenario sc;
    sc.id = "s" + std::to_string(s + 1);
    sc.probability = 1.0 / double(scenarios);
    bool any = false;
    for (std::size_t a = 0; a < areas; ++a) {
      const std::int64_t v = uni(0, 2) == 0 ? 0 : uni(10, 600);
      any = any || v > 0;
      sc.victims[inst.areas[a].id] = v;
    }
    if (!any) sc.victims[inst.areas[uni(0, int(areas) - 1)].id] = uni(10, 600);
    inst.scenarios.push_back(sc);
  }
  inst.distances_km.assign(areas, std::vector<double>(areas, 0.0));
  for (std::size_t a = 0; a < areas; ++a) {
    for (std::size_t b = a + 1; b < areas; ++b) {
      inst.distances_km[a][b] = inst.distances_km[b][a] = uni(5, 60);
    }
  }
  inst.budget_first_stage = generous ? 1e12 : uni(2000, 5000);
  inst.budget_second_stage = generous ? 1e12 : uni(5, 40);
  inst.min_preposition = 1.0;
  return inst;
}

// ---------------------------------------------------------------------------

Outcome criterion1() {
  const Instance inst = load_instance(data_path("serrana.json"));
  const DemandTable d = derive_demands(inst);
  SolveParams p;
  p.lp_relaxation = true;
  p.threads = 1;
  std::ostringstream os;
  bool ok = true;
  const std::pair<bool, double> cases[] = {{false, 3.4}, {true, 0.558}};
  for (const auto& [vi, target] : cases) {
    BuildOptions bo;
    bo.valid_inequality = vi;
    const ModelIR m = build_model(Formulation::kGini, inst, d, bo);
    const auto t0 = std::chrono::steady_clock::now();
    const Solution s = solve(m, p);
    const double t = seconds_since(t0);
    const bool good = s.status == SolveStatus::kOptimal &&
                      std::fabs(s.objective - target) <= 0.05 * target && t < 60.0;
    ok = ok && good;
    os << (vi ? "with VI " : "without VI ") << fmt(s.objective) << " (target " << target << ", "
       << fmt(t, 3) << " s)" << (vi ? "" : "; ");
  }
  return {ok, os.str()};
}

Outcome criterion2() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int checked = 0, bad = 0;
  double worst = 0.0;
  while (checked < 200) {
    const std::size_t areas = 3 + rng() % 6;
    const Instance inst = random_instance(rng, areas, 1 + rng() % 2, 1 + rng() % 2, true);
    const DemandTable d = derive_demands(inst);
    ModelIR m = build_gini(inst, d);

    // Random allocation X, then stock that makes it feasible.
    std::map<std::string, double> x;
    std::vector<std::vector<double>> cov(d.num_scenarios(), std::vector<double>(areas, 0.0));
    FirstStage fs = empty_first_stage(inst);
    for (auto& [key, v] : fs.Y) v = key.first == "small" ? 1 : 0;
    for (std::size_t s = 0; s < d.num_scenarios(); ++s) {
      for (std::size_t r = 0; r < inst.num_items(); ++r) {
        for (std::size_t a = 0; a < areas; ++a) {
          std::vector<double> w(inst.num_locations());
          double sum = 0.0;
          for (double& v : w) sum += (v = unit(rng));
          const double total = unit(rng);
          for (std::size_t n = 0; n < w.size(); ++n) {
            const double v = total * w[n] / sum;
            x[names::X(inst.relief_items[r].id, inst.areas[a].id, inst.locations[n],
                       d.scenario_id(s))] = v;
            cov[s][a] += d.u(r, a, s) * v;
          }
        }
      }
    }
    for (std::size_t r = 0; r < inst.num_items(); ++r) {
      for (std::size_t n = 0; n < inst.num_locations(); ++n) {
        double need = 0.0;
        for (std::size_t s = 0; s < d.num_scenarios(); ++s) {
          double used = 0.0;
          for (std::size_t a = 0; a < areas; ++a) {
            used += d.d(r, a, s) * x[names::X(inst.relief_items[r].id, inst.areas[a].id,
                                                inst.locations[n], d.scenario_id(s))];
          }
          need = std::max(need, used);
        }
        fs.P[{inst.relief_items[r].id, inst.locations[n]}] = std::ceil(need) + 1.0;
      }
    }
    m = fix_first_stage(m, inst, fs);
    for (const auto& [name, v] : x) m.set_bounds(m.variable_id(name), v, v);
    const Solution sol = solve(m, exact_params());
    if (sol.status != SolveStatus::kOptimal) {
      ++bad;
      ++checked;
      continue;
    }
    for (std::size_t s = 0; s < d.num_scenarios(); ++s) {
      std::vector<double> expect;
      for (std::size_t a : d.positive_areas(s)) expect.push_back(cov[s][a]);
      std::sort(expect.begin(), expect.end());
      bool same = true;
      for (std::size_t j = 0; j < expect.size(); ++j) {
        const double z = sol.values.at(names::Z(j + 1, d.scenario_id(s)));
        worst = std::max(worst, std::fabs(z - expect[j]));
        same = same && std::fabs(z - expect[j]) <= 1e-6;
      }
      bad += same ? 0 : 1;
    }
    ++checked;
  }
  const double t = seconds_since(t0);
  return {bad == 0 && t < 300.0, std::to_string(checked) + " allocations, " +
                                     std::to_string(bad) + " mismatches, max |Z - sort| " +
                                     fmt(worst, 3) + ", " + fmt(t, 3) + " s"};
}

struct SmallCase {
  Instance inst;
  DemandTable demand;
};

const std::vector<SmallCase>& small_cases() {
  static const std::vector<SmallCase> cases = [] {
    std::vector<SmallCase> out;
    std::mt19937_64 rng(77);
    for (int i = 0; i < 12; ++i) {
      Instance inst = random_instance(rng, 3 + rng() % 3, 1 + rng() % 3, 1 + rng() % 2, false);
      DemandTable d = derive_demands(inst);
      out.push_back({std::move(inst), std::move(d)});
    }
    return out;
  }();
  return cases;
}

Outcome criterion3() {
  const auto t0 = std::chrono::steady_clock::now();
  int bad = 0;
  double worst = 0.0;
  for (const auto& c : small_cases()) {
    const Solution g = solve(build_gini(c.inst, c.demand), exact_params());
    const Solution gc =
        solve(build_ginic(c.inst, c.demand, singleton_clusterings(c.demand)), exact_params());
    if (g.status != SolveStatus::kOptimal || gc.status != SolveStatus::kOptimal) {
      ++bad;
      continue;
    }
    worst = std::max(worst, std::fabs(g.objective - gc.objective));
    bad += std::fabs(g.objective - gc.objective) <= 1e-6 ? 0 : 1;
  }
  const double t = seconds_since(t0);
  return {bad == 0 && t < 600.0, std::to_string(small_cases().size()) + " instances, " +
                                     std::to_string(bad) + " mismatches, max diff " +
                                     fmt(worst, 3) + ", " + fmt(t, 3) + " s"};
}

Outcome criterion4() {
  int bad = 0;
  double worst = 0.0;
  std::ostringstream os;
  for (const auto& c : small_cases()) {
    const ModelIR plain = build_gini(c.inst, c.demand);
    const ModelIR vi = add_valid_inequality(plain, c.inst, c.demand);
    const Solution a = solve(plain, exact_params());
    const Solution b = solve(vi, exact_params());
    SolveParams lp = exact_params();
    lp.lp_relaxation = true;
    const Solution la = solve(plain, lp);
    const Solution lb = solve(vi, lp);
    const bool solved = a.status == SolveStatus::kOptimal && b.status == SolveStatus::kOptimal &&
                        la.status == SolveStatus::kOptimal && lb.status == SolveStatus::kOptimal;
    if (!solved) {
      ++bad;
      continue;
    }
    worst = std::max(worst, std::fabs(a.objective - b.objective));
    const bool ok = std::fabs(a.objective - b.objective) <= 1e-6 && lb.objective <= la.objective + 1e-9;
    bad += ok ? 0 : 1;
  }
  os << small_cases().size() << " instances, " << bad << " violations, max MIP diff "
     << fmt(worst, 3);
  return {bad == 0, os.str()};
}

Outcome criterion5() {
  auto gini = [](std::vector<double> v) { return compute_gini(CoverageVector{std::move(v), {}}).gini; };
  auto pairwise = [](const std::vector<double>& x) {
    double s = 0.0, mean = 0.0;
    for (double v : x) mean += v;
    mean /= double(x.size());
    for (double a : x) {
      for (double b : x) s += std::fabs(a - b);
    }
    return s / (2.0 * double(x.size()) * double(x.size()) * mean);
  };
  int bad = 0;
  bad += std::fabs(gini({0.3, 0.3, 0.3})) <= 1e-12 ? 0 : 1;
  for (std::size_t n = 1; n <= 10; ++n) {
    std::vector<double> v(n, 0.0);
    v[0] = 0.8;
    bad += std::fabs(gini(v) - (1.0 - 1.0 / double(n))) <= 1e-12 ? 0 : 1;
  }
  const std::vector<double> q{0.1, 0.2, 0.3, 0.4};
  bad += std::fabs(gini(q) - 0.25) <= 1e-12 && std::fabs(pairwise(q) - 0.25) <= 1e-12 ? 0 : 1;

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 1000; ++t) {
    std::vector<double> v(2 + rng() % 12);
    for (double& x : v) x = u(rng);
    const double g = gini(v);
    if (std::fabs(g - pairwise(v)) > 1e-9) ++bad;
    const double k = 0.1 + 10.0 * u(rng);
    auto scaled = v;
    for (double& x : scaled) x *= k;
    if (std::fabs(gini(scaled) - g) > 1e-9) ++bad;
    auto perm = v;
    std::shuffle(perm.begin(), perm.end(), rng);
    if (std::fabs(gini(perm) - g) > 1e-9) ++bad;
    auto moved = v;
    std::sort(moved.begin(), moved.end());
    const double delta = (moved.back() - moved.front()) / 2.0 * u(rng);
    moved.back() -= delta;
    moved.front() += delta;
    if (gini(moved) > g + 1e-9) ++bad;
  }
  return {bad == 0, std::to_string(bad) + " failures over fixed cases and 1000 random vectors"};
}

Outcome criterion6() {
  const Instance inst = load_instance(data_path("serrana.json"));
  const DemandTable d = derive_demands(inst);
  std::size_t water = 0, ter = *inst.area_index("ter"), y2001 = 0;
  for (std::size_t r = 0; r < inst.num_items(); ++r) {
    if (inst.relief_items[r].id == "water") water = r;
  }
  for (std::size_t s = 0; s < inst.num_scenarios(); ++s) {
    if (inst.scenarios[s].id == "y2001") y2001 = s;
  }
  const double dem = d.d(water, ter, y2001);
  const double cost = derive_shipping_costs(inst)[ter][*inst.location_index("pet")];
  return {dem == 70196.0 && std::fabs(cost - 97.0736) <= 1e-6,
          "demand " + fmt(dem, 10) + ", shipping cost " + fmt(cost, 10)};
}

// --- simulation ------------------------------------------------------------

int run_command(const std::string& cmd) {
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

struct SimData {
  bool ok = false;
  std::string error;
  double seconds = 0.0;
  json records;
  json manifest;
  fs::path dir;
};

const SimData& simulation(const fs::path& workdir, double plan_time_limit) {
  static SimData data;
  static bool done = false;
  if (done) return data;
  done = true;
  data.dir = workdir / "run";
  // Fresh run: a warm cache would hide the real runtime.
  fs::remove_all(data.dir);
  fs::remove_all(workdir / "cache");
  fs::create_directories(workdir);
  std::ostringstream cmd;
  cmd << EQUILOX_CLI << " simulate " << data_path("serrana.json")
      << " --formulations sp,gmd,gini,ginic --count 20 --repro --seed 1 --ranking-cuts"
      << " --eval-time-limit 300 --time-limit " << plan_time_limit << " --cache "
      << (workdir / "cache").string() << " --out " << data.dir.string() << " > "
      << (workdir / "simulate.log").string() << " 2>&1";
  const auto t0 = std::chrono::steady_clock::now();
  const int code = run_command(cmd.str());
  data.seconds = seconds_since(t0);
  if (code != 0) {
    data.error = "simulate exited with " + std::to_string(code) + "; see " +
                 (workdir / "simulate.log").string();
    return data;
  }
  try {
    std::ifstream r(data.dir / "records.json");
    data.records = json::parse(r);
    std::ifstream m(data.dir / "manifest.json");
    data.manifest = json::parse(m);
    data.ok = true;
  } catch (const std::exception& e) {
    data.error = e.what();
  }
  return data;
}

Outcome criterion7(const fs::path& workdir, double plan_time_limit) {
  const SimData& sim = simulation(workdir, plan_time_limit);
  if (!sim.ok) return {false, sim.error};
  std::map<std::string, std::vector<double>> g;
  std::map<std::string, std::size_t> failed;
  std::ostringstream unproven;
  for (const auto& r : sim.records) {
    const std::string f = r.at("formulation");
    const std::string st = r.at("status");
    if (st != "optimal" && st != "feasible_limit") {
      ++failed[f];
      continue;
    }
    if (st == "feasible_limit") {
      unproven << ' ' << f << '/' << r.at("realization").get<std::string>() << " gap "
               << (r.at("gap").is_null() ? std::string("?") : fmt(r.at("gap").get<double>(), 3));
    }
    if (!r.at("G_star").is_null()) g[f].push_back(r.at("G_star").get<double>());
  }
  for (const auto& p : sim.manifest.at("plans")) {
    const auto& s = p.at("solution");
    if (s.at("status") != "optimal") {
      unproven << " plan " << p.at("formulation").get<std::string>() << " gap "
               << (s.at("gap").is_null() ? std::string("?") : fmt(s.at("gap").get<double>(), 3));
    }
  }
  auto mean = [&](const std::string& f) {
    const auto& v = g[f];
    if (v.empty()) return std::nan("");
    double s = 0.0;
    for (double x : v) s += x;
    return s / double(v.size());
  };
  const double sp = mean("sp"), gmd = mean("gmd"), gini = mean("gini"), ginic = mean("ginic");
  const bool order = gini < gmd && gmd < sp && ginic < gmd;

  // Benefit signs straight from the written matrix.
  std::map<std::string, std::map<std::string, std::string>> cell;
  {
    std::ifstream in(sim.dir / "benefit_inequity.csv");
    std::string line;
    std::getline(in, line);
    std::vector<std::string> cols;
    std::stringstream hs(line);
    for (std::string tok; std::getline(hs, tok, ',');) cols.push_back(tok);
    while (std::getline(in, line)) {
      std::stringstream ls(line);
      std::vector<std::string> v;
      for (std::string tok; std::getline(ls, tok, ',');) v.push_back(tok);
      for (std::size_t j = 2; j < v.size() && j < cols.size(); ++j) cell[v[0]][cols[j]] = v[j];
    }
  }
  bool signs = true;
  std::ostringstream cells;
  for (const char* row : {"sp", "gmd"}) {
    for (const char* col : {"gini", "ginic"}) {
      const std::string c = cell[row][col];
      const bool neg = !c.empty() && c != "undefined" && std::stod(c) < 0.0;
      signs = signs && neg;
      cells << ' ' << row << "->" << col << '=' << (c.empty() ? "?" : c);
    }
  }
  std::size_t nfail = 0;
  for (const auto& [f, n] : failed) nfail += n;
  const bool in_time = sim.seconds <= 7200.0;
  std::ostringstream os;
  os << "mean G* sp " << fmt(sp, 4) << " gmd " << fmt(gmd, 4) << " gini " << fmt(gini, 4)
     << " ginic " << fmt(ginic, 4) << "; inequity benefit" << cells.str() << "; failed " << nfail
     << "; " << fmt(sim.seconds, 5) << " s";
  if (!unproven.str().empty()) os << "; unproven:" << unproven.str();
  return {order && signs && in_time && nfail == 0, os.str()};
}

Outcome criterion8(const fs::path& workdir, double plan_time_limit) {
  const SimData& sim = simulation(workdir, plan_time_limit);
  if (!sim.ok) return {false, sim.error};
  std::size_t n = 0, bad = 0;
  double worst = 0.0;
  for (const auto& r : sim.records) {
    if (r.at("G_star").is_null()) continue;
    const auto cov = r.at("coverage").get<std::vector<double>>();
    const double lorenz = compute_gini(CoverageVector{cov, {}}).gini;
    const double diff = std::fabs(lorenz - r.at("G_star").get<double>());
    worst = std::max(worst, diff);
    bad += diff <= 1e-9 ? 0 : 1;
    ++n;
  }
  return {n > 0 && bad == 0, std::to_string(n) + " records, " + std::to_string(bad) +
                                 " mismatches, max diff " + fmt(worst, 3)};
}

Outcome criterion9(const fs::path& workdir) {
  const std::vector<double> col{0.1827, 0.7873, 0.2420, 0.2813, 0.1935, 0.2404};
  std::vector<EvalRecord> recs;
  for (std::size_t i = 0; i < col.size(); ++i) {
    EvalRecord r;
    r.formulation = "sp";
    r.realization = realization_id(i);
    r.status = SolveStatus::kOptimal;
    r.U_star = col[i];
    r.G_star = 0.0;
    recs.push_back(r);
  }
  const fs::path dir = workdir / "cov";
  summarize({{"sp", recs}}, dir.string());
  std::ifstream in(dir / "summary.csv");
  std::string line;
  double cov = std::nan("");
  while (std::getline(in, line)) {
    if (line.rfind("sp,effectiveness,", 0) != 0) continue;
    std::vector<std::string> v;
    std::stringstream ls(line);
    for (std::string tok; std::getline(ls, tok, ',');) v.push_back(tok);
    cov = std::stod(v.at(5));
  }
  return {std::fabs(cov - 71.96) <= 0.05, "CoV " + fmt(cov, 6) + "% (target 71.96)"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"equilox acceptance checks"};
  std::vector<int> criteria{1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::string workdir = (fs::temp_directory_path() / "equilox-acceptance").string();
  double plan_time_limit = 1800.0;
  app.add_option("--criteria", criteria, "Criteria to run")->delimiter(',');
  app.add_option("--workdir", workdir, "Scratch directory for simulation output");
  app.add_option("--plan-time-limit", plan_time_limit, "Per-formulation plan time limit (s)");
  CLI11_PARSE(app, argc, argv);

  fs::create_directories(workdir);
  bool all = true;
  for (int c : criteria) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      switch (c) {
        case 1: o = criterion1(); break;
        case 2: o = criterion2(); break;
        case 3: o = criterion3(); break;
        case 4: o = criterion4(); break;
        case 5: o = criterion5(); break;
        case 6: o = criterion6(); break;
        case 7: o = criterion7(workdir, plan_time_limit); break;
        case 8: o = criterion8(workdir, plan_time_limit); break;
        case 9: o = criterion9(workdir); break;
        default: o = {false, "unknown criterion"};
      }
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    all = all && o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << c << ": " << o.detail << " ["
              << fmt(seconds_since(t0), 4) << " s]" << std::endl;
  }
  return all ? 0 : 1;
}
