// equilox command-line driver: validate instances, solve one formulation,
// or run the out-of-sample simulation over several formulations.

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "equilox/cluster.hpp"
#include "equilox/instance.hpp"
#include "equilox/lorenz.hpp"
#include "equilox/model_ir.hpp"
#include "equilox/models.hpp"
#include "equilox/sim.hpp"
#include "equilox/solver.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace equilox;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitSolver = 2;
constexpr int kExitUsage = 3;

struct Options {
  std::string instance;
  std::string formulation;
  std::string formulations = "sp,gmd,gini,ginic";
  double time_limit = 3600.0;
  double eval_time_limit = 300.0;
  double gap = 1e-5;
  int jobs = 1;
  int threads = 0;
  std::uint64_t seed = 1;
  std::string clusters;
  bool no_valid_inequality = false;
  bool ranking_cuts = false;
  bool lp_relax = false;
  bool continuous_sampling = false;
  bool common_effectiveness = false;
  bool repro = false;
  bool emit_model = false;
  std::string solver_path;
  std::string out;
  std::string cache = "cache";
  bool no_cache = false;
  std::size_t count = 100;
};

std::string utc_now(const char* pattern) {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, pattern);
  return os.str();
}

std::string num(double v) { return detail::format_number(v); }

SolveParams solve_params(const Options& o) {
  SolveParams p;
  p.time_limit_s = o.time_limit;
  p.rel_gap = o.gap;
  p.threads = o.repro ? 1 : o.threads;
  p.seed = static_cast<int>(o.seed % 2147483647ULL);
  p.lp_relaxation = o.lp_relax;
  p.solver_path = o.solver_path;
  if (p.solver_path.empty()) {
    if (const char* env = std::getenv("EQUILOX_SOLVER")) p.solver_path = env;
  }
  return p;
}

json params_json(const SolveParams& p) {
  return {{"time_limit_s", p.time_limit_s},
          {"rel_gap", p.rel_gap},
          {"threads", p.threads},
          {"seed", p.seed},
          {"lp_relaxation", p.lp_relaxation},
          {"backend", p.solver_path.empty() ? "highs-in-process" : "subprocess"},
          {"solver_path", p.solver_path}};
}

/// `--clusters` value: empty (instance or elbow), "elbow", or k1,k2,...
std::optional<std::vector<int>> cluster_override(const Options& o, const Instance& inst) {
  if (o.clusters == "elbow") return std::nullopt;
  if (o.clusters.empty()) return inst.clusters_k;
  std::vector<int> ks;
  std::stringstream ss(o.clusters);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t used = 0;
      const int k = std::stoi(tok, &used);
      if (used != tok.size() || k < 1) throw std::invalid_argument(tok);
      ks.push_back(k);
    } catch (const std::exception&) {
      throw CLI::ValidationError("--clusters", "'" + tok + "' is not a positive integer");
    }
  }
  if (ks.size() != inst.num_scenarios()) {
    throw CLI::ValidationError("--clusters", "expected " + std::to_string(inst.num_scenarios()) +
                                                 " values, got " + std::to_string(ks.size()));
  }
  return ks;
}

std::string default_out(const std::string& tag) {
  return (fs::path("out") / (utc_now("%Y%m%dT%H%M%SZ") + "-" + tag)).string();
}

struct Manifest {
  json doc;
  fs::path dir;

  Manifest(const std::string& command, const Options& o, const std::vector<std::string>& argv) {
    doc["command"] = command;
    doc["argv"] = argv;
    doc["started_utc"] = utc_now("%Y-%m-%dT%H:%M:%SZ");
    doc["instance_path"] = o.instance;
    doc["artifacts"] = json::array();
  }

  void artifact(const fs::path& p) { doc["artifacts"].push_back(p.filename().string()); }

  void write(const std::string& file, const std::string& text) {
    write_text_file((dir / file).string(), text);
    artifact(dir / file);
  }

  void finish(int exit_code) {
    doc["exit_code"] = exit_code;
    doc["finished_utc"] = utc_now("%Y-%m-%dT%H:%M:%SZ");
    fs::create_directories(dir);
    write_text_file((dir / "manifest.json").string(), doc.dump(2) + "\n");
  }
};

Instance load_into(Manifest& m, const Options& o) {
  const std::string text = read_file(o.instance);
  m.doc["instance_hash"] = hex64(fnv1a(text));
  return load_instance_text(text);
}

json clusters_json(const std::vector<Clustering>& cs, const Instance& inst) {
  json out = json::array();
  for (const auto& c : cs) {
    json clusters = json::array();
    for (std::size_t w = 0; w < c.k; ++w) {
      json ids = json::array();
      for (std::size_t a : c.members(w)) ids.push_back(inst.areas[a].id);
      clusters.push_back(ids);
    }
    out.push_back({{"scenario", c.scenario}, {"k", c.k}, {"clusters", clusters}, {"wss_by_k", c.wss_by_k}});
  }
  return out;
}

std::string solution_csv(const ModelIR& model, const Solution& sol) {
  std::ostringstream os;
  os << "variable,value\n";
  for (const auto& v : model.variables()) {
    auto it = sol.values.find(v.name);
    if (it == sol.values.end()) continue;
    os << '"' << v.name << "\"," << num(it->second) << '\n';
  }
  return os.str();
}

std::string metrics_csv(const std::vector<ScenarioMetrics>& ms, const DemandTable& d) {
  std::ostringstream os;
  os << "scenario,probability,areas,effectiveness,gini\n";
  for (std::size_t s = 0; s < ms.size(); ++s) {
    os << ms[s].scenario << ',' << num(d.probability(s)) << ',' << ms[s].coverage.values.size()
       << ',' << num(ms[s].effectiveness) << ',' << (ms[s].gini ? num(*ms[s].gini) : "") << '\n';
  }
  return os.str();
}

std::string item_csv(const std::vector<ItemCoverage>& ic) {
  std::ostringstream os;
  os << "item,mean_fill,perfect_share\n";
  for (const auto& c : ic) os << c.item << ',' << num(c.mean) << ',' << num(c.perfect_share) << '\n';
  return os.str();
}

json solution_summary(const Solution& s) {
  auto n = [](double v) -> json { return std::isnan(v) ? json(nullptr) : json(v); };
  return {{"status", to_string(s.status)}, {"objective", n(s.objective)},
          {"best_bound", n(s.best_bound)}, {"gap", n(s.gap)},
          {"wall_time_s", s.wall_time_s},  {"from_cache", s.from_cache},
          {"message", s.message}};
}

int solver_exit(const Solution& s) { return s.has_values() ? kExitOk : kExitSolver; }

// ---------------------------------------------------------------------------

int cmd_validate(const Options& o, const std::vector<std::string>& argv) {
  Manifest m("validate", o, argv);
  m.dir = o.out.empty() ? default_out("validate") : o.out;
  int code = kExitOk;
  json findings = json::array();
  try {
    const std::string text = read_file(o.instance);
    m.doc["instance_hash"] = hex64(fnv1a(text));
    Instance inst = parse_instance(json::parse(text));
    for (const auto& f : validate_instance(inst)) {
      findings.push_back({{"field", f.field}, {"message", f.message}});
      std::cout << f.field << ": " << f.message << '\n';
    }
    if (!findings.empty()) code = kExitValidation;
    else std::cout << "ok: " << inst.num_areas() << " areas, " << inst.num_scenarios()
                   << " scenarios, " << inst.facility_options.size() << " facility options\n";
  } catch (const std::exception& e) {
    findings.push_back({{"field", ""}, {"message", e.what()}});
    std::cout << "error: " << e.what() << '\n';
    code = kExitValidation;
  }
  m.doc["findings"] = findings;
  m.finish(code);
  return code;
}

int cmd_run(const Options& o, const std::vector<std::string>& argv) {
  const auto f = parse_formulation(o.formulation);
  if (!f) {
    std::cerr << "unknown formulation '" << o.formulation << "' (expected sp, gmd, gini, ginic)\n";
    return kExitUsage;
  }
  Manifest m("run", o, argv);
  m.dir = o.out.empty() ? default_out(o.formulation) : o.out;
  fs::create_directories(m.dir);
  m.doc["formulation"] = o.formulation;

  Instance inst;
  try {
    inst = load_into(m, o);
  } catch (const std::exception& e) {
    std::cerr << e.what() << '\n';
    m.doc["error"] = e.what();
    m.finish(kExitValidation);
    return kExitValidation;
  }
  const DemandTable demand = derive_demands(inst);
  const SolveParams params = solve_params(o);
  m.doc["solver"] = params_json(params);
  m.doc["seed"] = o.seed;

  BuildOptions bo;
  bo.valid_inequality = !o.no_valid_inequality;
  bo.ranking_cuts = o.ranking_cuts;
  bo.clusters = cluster_override(o, inst);
  bo.cluster_seed = o.seed;
  m.doc["valid_inequality"] = *f == Formulation::kGini && bo.valid_inequality;
  m.doc["ranking_cuts"] = bo.ranking_cuts;

  ModelIR model;
  if (*f == Formulation::kGiniC) {
    const auto cs = cluster_scenarios(demand, bo.clusters, bo.cluster_seed);
    m.doc["clusters"] = {{"source", bo.clusters ? "fixed" : "elbow"}, {"seed", bo.cluster_seed}};
    m.write("clusters.json", clusters_json(cs, inst).dump(2) + "\n");
    model = build_ginic(inst, demand, cs);
  } else {
    model = build_model(*f, inst, demand, bo);
  }
  m.doc["model"] = {{"name", model.name()},
                    {"hash", model_hash(model)},
                    {"variables", model.variables().size()},
                    {"binaries", model.num_binaries()},
                    {"constraints", model.constraints().size()},
                    {"nonzeros", model.num_nonzeros()}};
  if (o.emit_model) {
    m.write("model.mps", to_mps(model, MpsFormat::kFree));
    m.write("model.lp", to_lp(model));
  }

  const Solution sol =
      solve_cached(model, params, o.no_cache ? std::string{} : o.cache);
  m.doc["solution"] = solution_summary(sol);
  std::cout << o.formulation << (o.lp_relax ? " (LP relaxation)" : "") << ": "
            << to_string(sol.status);
  if (sol.has_values()) std::cout << ", objective " << num(sol.objective) << ", gap " << num(sol.gap);
  std::cout << ", " << std::fixed << std::setprecision(1) << sol.wall_time_s << " s\n"
            << std::defaultfloat;
  if (!sol.has_values()) {
    std::cerr << sol.message << '\n';
    m.finish(kExitSolver);
    return kExitSolver;
  }
  if (!o.lp_relax) {
    const FirstStage plan = first_stage_from(sol.values, inst);
    const auto metrics = extract_metrics(sol.values, inst, demand);
    m.write("solution.csv", solution_csv(model, sol));
    m.write("metrics.csv", metrics_csv(metrics, demand));
    m.write("first_stage.json", to_json(plan).dump(2) + "\n");
    m.write("coverage_by_item.csv", item_csv(item_coverage(sol.values, inst, demand)));
    double eu = 0.0, eg = 0.0, pg = 0.0;
    for (std::size_t s = 0; s < metrics.size(); ++s) {
      eu += demand.probability(s) * metrics[s].effectiveness;
      if (metrics[s].gini) {
        eg += demand.probability(s) * *metrics[s].gini;
        pg += demand.probability(s);
      }
    }
    json open = json::array();
    for (const auto& [key, v] : plan.Y) {
      if (v) open.push_back(key.second + ":" + key.first);
    }
    m.doc["plan"] = {{"facilities_opened", plan.open_count()},
                     {"open", open},
                     {"total_stock", plan.total_stock()},
                     {"expected_effectiveness", eu},
                     {"expected_gini", pg > 0 ? json(eg / pg) : json(nullptr)}};
    std::cout << "facilities opened: " << plan.open_count() << " [";
    for (std::size_t i = 0; i < open.size(); ++i) std::cout << (i ? ", " : "") << open[i].get<std::string>();
    std::cout << "], expected effectiveness " << num(eu);
    if (pg > 0) std::cout << ", expected Gini " << num(eg / pg);
    std::cout << '\n';
  }
  m.finish(kExitOk);
  std::cout << "wrote " << m.dir.string() << '\n';
  return kExitOk;
}

int cmd_simulate(const Options& o, const std::vector<std::string>& argv) {
  std::vector<Formulation> forms;
  {
    std::stringstream ss(o.formulations);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      const auto f = parse_formulation(tok);
      if (!f) {
        std::cerr << "unknown formulation '" << tok << "'\n";
        return kExitUsage;
      }
      forms.push_back(*f);
    }
  }
  if (forms.empty() || o.count < 1) {
    std::cerr << "need at least one formulation and --count >= 1\n";
    return kExitUsage;
  }
  Manifest m("simulate", o, argv);
  m.dir = o.out.empty() ? default_out("simulate") : o.out;
  fs::create_directories(m.dir);
  m.doc["formulations"] = o.formulations;
  m.doc["count"] = o.count;
  m.doc["seed"] = o.seed;
  m.doc["continuous_sampling"] = o.continuous_sampling;
  m.doc["common_effectiveness"] = o.common_effectiveness;

  Instance inst;
  try {
    inst = load_into(m, o);
  } catch (const std::exception& e) {
    std::cerr << e.what() << '\n';
    m.doc["error"] = e.what();
    m.finish(kExitValidation);
    return kExitValidation;
  }
  SolveParams params = solve_params(o);
  params.lp_relaxation = false;
  m.doc["solver"] = params_json(params);

  BuildOptions bo;
  bo.valid_inequality = !o.no_valid_inequality;
  bo.ranking_cuts = o.ranking_cuts;
  bo.clusters = cluster_override(o, inst);
  bo.cluster_seed = o.seed;
  m.doc["ranking_cuts"] = bo.ranking_cuts;

  EvalOptions eo;
  eo.params = params;
  eo.ranking_time_limit_s = o.eval_time_limit;
  eo.common_effectiveness = o.common_effectiveness;
  eo.valid_inequality = bo.valid_inequality;
  eo.ranking_cuts = bo.ranking_cuts;
  eo.cluster_seed = o.seed;
  eo.jobs = o.jobs;
  eo.cache_dir = o.no_cache ? std::string{} : o.cache;
  m.doc["evaluation"] = {{"ranking_time_limit_s", eo.ranking_time_limit_s},
                         {"jobs", eo.jobs},
                         {"cache", eo.cache_dir},
                         {"realization_clusters", "elbow"}};
  eo.on_plan = [](Formulation f, const Solution& s) {
    std::cerr << "plan " << to_string(f) << ": " << to_string(s.status) << ", objective "
              << num(s.objective) << ", gap " << num(s.gap) << ", " << std::fixed
              << std::setprecision(1) << s.wall_time_s << " s" << std::defaultfloat
              << (s.from_cache ? " (cached)" : "") << std::endl;
  };
  eo.on_record = [](const EvalRecord& r) {
    std::cerr << "  " << r.formulation << ' ' << r.realization << ' ' << to_string(r.status)
              << " U* " << num(r.U_star) << " G* " << (r.G_star ? num(*r.G_star) : "-")
              << ' ' << std::fixed << std::setprecision(1) << r.wall_time_s << " s"
              << std::defaultfloat << std::endl;
  };

  SimulationRun run;
  try {
    run = simulate(inst, forms, o.count, o.seed, o.continuous_sampling, bo, params, eo);
  } catch (const SimulationError& e) {
    std::cerr << e.what() << '\n';
    m.doc["error"] = e.what();
    m.finish(kExitSolver);
    return kExitSolver;
  }
  json plans = json::array();
  for (const auto& pr : run.plans) {
    const std::string name = to_string(pr.formulation);
    m.write("first_stage_" + name + ".json", to_json(pr.plan).dump(2) + "\n");
    plans.push_back({{"formulation", name},
                     {"plan_hash", plan_hash(pr.plan)},
                     {"facilities_opened", pr.plan.open_count()},
                     {"solution", solution_summary(pr.solution)}});
  }
  m.doc["plans"] = plans;
  SimulationReport rep = summarize(run.groups, m.dir.string());
  for (const auto& f : rep.files) m.artifact(f);

  std::size_t failed = 0;
  for (const auto& [name, recs] : run.groups) {
    std::size_t bad = 0, unproven = 0;
    for (const auto& r : recs) {
      if (!r.valid()) ++bad;
      else if (r.status == SolveStatus::kFeasibleLimit) ++unproven;
    }
    failed += bad;
    const Stats g = describe(metric_values(recs, Metric::kInequity), false);
    const Stats u = describe(metric_values(recs, Metric::kEffectiveness), true);
    std::cout << std::left << std::setw(6) << name << " mean G* " << num(g.mean) << "  mean U* "
              << num(u.mean) << "  failed " << bad << "  unproven " << unproven << '\n';
  }
  m.doc["failed_realizations"] = failed;
  m.finish(kExitOk);
  std::cout << "wrote " << m.dir.string() << '\n';
  return kExitOk;
}

int cmd_replay(const std::string& manifest_path, const std::string& out);

int dispatch(std::vector<std::string> args) {
  CLI::App app{"equilox: equitable two-stage relief prepositioning"};
  app.require_subcommand(1);
  Options o;
  const std::vector<std::string> argv = args;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--time-limit", o.time_limit, "Solver time limit in seconds")
        ->check(CLI::PositiveNumber);
    sub->add_option("--gap", o.gap, "Relative MIP gap")->check(CLI::Range(0.0, 0.999999));
    sub->add_option("--threads", o.threads, "Solver threads (0: solver default)");
    sub->add_option("--seed", o.seed, "Seed for sampling, clustering and the solver");
    sub->add_option("--clusters", o.clusters,
                    "ginic cluster counts k1,k2,... per scenario, or 'elbow'");
    sub->add_flag("--no-valid-inequality", o.no_valid_inequality,
                  "Omit the upper-bounding Lorenz cut from gini");
    sub->add_flag("--ranking-cuts", o.ranking_cuts,
                  "Add partial-sum cuts on the ranked coverages (gini, ginic)");
    sub->add_flag("--repro", o.repro, "Single-threaded solves with fixed seeds");
    sub->add_option("--solver-path", o.solver_path,
                    "External HiGHS-compatible executable (env EQUILOX_SOLVER)");
    sub->add_option("--out", o.out, "Output directory (default out/<timestamp>-<tag>)");
    sub->add_option("--cache", o.cache, "Solution cache directory");
    sub->add_flag("--no-cache", o.no_cache, "Do not read or write the solution cache");
  };

  auto* validate = app.add_subcommand("validate", "Check an instance file");
  validate->add_option("instance", o.instance, "Instance JSON")->required();
  validate->add_option("--out", o.out, "Output directory for the manifest");

  auto* run = app.add_subcommand("run", "Solve one formulation on an instance");
  run->add_option("instance", o.instance, "Instance JSON")->required();
  run->add_option("formulation,--formulation", o.formulation, "sp | gmd | gini | ginic")
      ->required();
  run->add_flag("--lp-relax", o.lp_relax, "Solve the LP relaxation and report its value only");
  run->add_flag("--emit-model", o.emit_model, "Also write model.mps and model.lp");
  common(run);

  auto* sim = app.add_subcommand("simulate", "Out-of-sample evaluation of several formulations");
  sim->add_option("instance", o.instance, "Instance JSON")->required();
  sim->add_option("--formulations,--formulation", o.formulations, "Comma-separated list");
  sim->add_option("--count", o.count, "Number of realizations")->check(CLI::PositiveNumber);
  sim->add_option("--jobs", o.jobs, "Parallel realization solves")->check(CLI::PositiveNumber);
  sim->add_option("--eval-time-limit", o.eval_time_limit,
                  "Time limit for gini/ginic realization solves")
      ->check(CLI::PositiveNumber);
  sim->add_flag("--continuous-sampling", o.continuous_sampling,
                "Sample real-valued instead of integer demands");
  sim->add_flag("--common-effectiveness", o.common_effectiveness,
                "Re-solve every plan with the plain effectiveness objective");
  common(sim);

  std::string manifest_path;
  auto* replay = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
  replay->add_option("manifest", manifest_path, "manifest.json")->required();
  replay->add_option("--out", o.out, "Output directory for the replayed run")->required();

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend() - 1);
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }
  if (o.repro && o.jobs > 1) o.threads = 1;

  try {
    if (validate->parsed()) return cmd_validate(o, argv);
    if (run->parsed()) {
      if (o.formulation.empty()) {
        std::cerr << "run: a formulation is required\n";
        return kExitUsage;
      }
      return cmd_run(o, argv);
    }
    if (sim->parsed()) return cmd_simulate(o, argv);
    if (replay->parsed()) return cmd_replay(manifest_path, o.out);
  } catch (const CLI::ValidationError& e) {
    std::cerr << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitSolver;
  }
  return kExitUsage;
}

/// Re-parses the recorded argv with a different --out.
int cmd_replay(const std::string& manifest_path, const std::string& out) {
  json doc;
  try {
    doc = json::parse(read_file(manifest_path));
  } catch (const std::exception& e) {
    std::cerr << "cannot read manifest: " << e.what() << '\n';
    return kExitUsage;
  }
  std::vector<std::string> args = doc.at("argv").get<std::vector<std::string>>();
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--out" && i + 1 < args.size()) {
      args.erase(args.begin() + static_cast<long>(i), args.begin() + static_cast<long>(i) + 2);
      break;
    }
    if (args[i].rfind("--out=", 0) == 0) {
      args.erase(args.begin() + static_cast<long>(i));
      break;
    }
  }
  args.push_back("--out");
  args.push_back(out);
  return dispatch(args);
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return dispatch(args);
}
