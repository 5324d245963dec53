#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "support.hpp"

namespace fs = std::filesystem;
using equilox::testing::data_path;
using equilox::testing::temp_dir;

namespace {

struct Result {
  int code = -1;
  std::string out;
};

Result run(const std::string& args) {
  const std::string cmd = std::string(EQUILOX_CLI) + " " + args + " 2>&1";
  Result r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, p)) r.out.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json manifest(const fs::path& dir) {
  return nlohmann::json::parse(slurp(dir / "manifest.json"));
}

}  // namespace

TEST(Cli, ValidateGoodAndBadInstances) {
  const fs::path dir = temp_dir("cli-validate");
  Result ok = run("validate " + data_path("tiny.json") + " --out " + (dir / "ok").string());
  EXPECT_EQ(ok.code, 0) << ok.out;
  EXPECT_EQ(manifest(dir / "ok")["exit_code"], 0);

  nlohmann::json doc = nlohmann::json::parse(slurp(data_path("tiny.json")));
  doc["scenarios"][0]["probability"] = 0.9;
  const fs::path bad = dir / "bad.json";
  std::ofstream(bad) << doc.dump();
  Result r = run("validate " + bad.string() + " --out " + (dir / "bad").string());
  EXPECT_EQ(r.code, 1) << r.out;
  EXPECT_NE(r.out.find("scenarios"), std::string::npos) << r.out;
  fs::remove_all(dir);
}

TEST(Cli, UsageErrorsExitThree) {
  EXPECT_EQ(run("").code, 3);
  EXPECT_EQ(run("frobnicate").code, 3);
  EXPECT_EQ(run("run " + data_path("tiny.json") + " lorenz --no-cache").code, 3);
  EXPECT_EQ(run("run " + data_path("tiny.json") + " ginic --clusters 1,2,3 --no-cache").code, 3);
  EXPECT_EQ(run("validate /nonexistent/instance.json --out /tmp/equilox-none").code, 1);
}

TEST(Cli, RunWritesArtifactsAndIsDeterministic) {
  const fs::path dir = temp_dir("cli-run");
  const std::string base = "run " + data_path("tiny.json") + " gini --repro --no-cache --out ";
  Result a = run(base + (dir / "a").string() + " --emit-model");
  ASSERT_EQ(a.code, 0) << a.out;
  EXPECT_NE(a.out.find("facilities opened"), std::string::npos);
  for (const char* f : {"manifest.json", "solution.csv", "metrics.csv", "first_stage.json",
                        "coverage_by_item.csv", "model.mps", "model.lp"}) {
    EXPECT_TRUE(fs::exists(dir / "a" / f)) << f;
  }
  Result b = run(base + (dir / "b").string() + " --emit-model");
  ASSERT_EQ(b.code, 0) << b.out;
  for (const char* f : {"solution.csv", "metrics.csv", "first_stage.json", "model.mps"}) {
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
  }
  const auto m = manifest(dir / "a");
  EXPECT_EQ(m["command"], "run");
  EXPECT_EQ(m["exit_code"], 0);
  EXPECT_TRUE(m.contains("instance_hash"));
  EXPECT_EQ(m["instance_hash"], manifest(dir / "b")["instance_hash"]);

  Result c = run("replay " + (dir / "a" / "manifest.json").string() + " --out " +
                 (dir / "c").string());
  ASSERT_EQ(c.code, 0) << c.out;
  EXPECT_EQ(slurp(dir / "a" / "first_stage.json"), slurp(dir / "c" / "first_stage.json"));
  fs::remove_all(dir);
}

TEST(Cli, GiniCWritesClusters) {
  const fs::path dir = temp_dir("cli-ginic");
  Result r = run("run " + data_path("tiny.json") + " ginic --clusters 1,2 --no-cache --out " +
                 dir.string());
  ASSERT_EQ(r.code, 0) << r.out;
  const auto cs = nlohmann::json::parse(slurp(dir / "clusters.json"));
  ASSERT_EQ(cs.size(), 2u);
  fs::remove_all(dir);
}

TEST(Cli, RankingCutsRecordedInManifest) {
  const fs::path dir = temp_dir("cli-cuts");
  Result r = run("run " + data_path("tiny.json") + " gini --ranking-cuts --no-cache --out " +
                 dir.string());
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(manifest(dir)["ranking_cuts"], true);
  fs::remove_all(dir);
}

TEST(Cli, LpRelaxReportsBoundOnly) {
  const fs::path dir = temp_dir("cli-lp");
  Result r = run("run " + data_path("tiny.json") + " --formulation sp --lp-relax --no-cache --out " +
                 dir.string());
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_FALSE(fs::exists(dir / "first_stage.json"));
  fs::remove_all(dir);
}

TEST(Cli, SimulateSmall) {
  const fs::path dir = temp_dir("cli-sim");
  const std::string args = "simulate " + data_path("tiny.json") +
                           " --formulations sp,gini --count 2 --repro --cache " +
                           (dir / "cache").string() + " --out ";
  Result a = run(args + (dir / "a").string());
  ASSERT_EQ(a.code, 0) << a.out;
  for (const char* f : {"scatter.csv", "records.csv", "summary.csv", "hist_gini.csv",
                        "hist_eff.csv", "benefit_inequity.csv", "benefit_effectiveness.csv",
                        "first_stage_sp.json", "first_stage_gini.json"}) {
    EXPECT_TRUE(fs::exists(dir / "a" / f)) << f;
  }
  // Second run is served from the cache and must agree byte for byte.
  Result b = run(args + (dir / "b").string());
  ASSERT_EQ(b.code, 0) << b.out;
  EXPECT_EQ(slurp(dir / "a" / "scatter.csv"), slurp(dir / "b" / "scatter.csv"));
  EXPECT_EQ(slurp(dir / "a" / "summary.csv").substr(0, 40),
            slurp(dir / "b" / "summary.csv").substr(0, 40));
  fs::remove_all(dir);
}
