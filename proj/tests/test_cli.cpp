#include <sstream>

#include "doctest.h"
#include "esim/cli.hpp"
#include "esim/harness.hpp"
#include "fixtures.hpp"

using namespace esim;
namespace fs = std::filesystem;
using fixtures::scratch;
using fixtures::write_text;

namespace {

int cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  return run_cli(args, out, err);
}

// One small generated and trained setup shared by the tests below.
struct Workspace {
  fs::path root;
  fs::path config;

  Workspace() : root(scratch("cli_ws")) {
    write_text(root / "spec.json", R"({"capacity_cells": 4, "coverage_cells": 2, "days": 3})");
    config = root / "config.json";
    write_text(config, R"({"runs": 4, "max_steps": 60, "energy": {"max_epochs": 20, "patience": 5},
                           "rate": {"trees": 20}})");
    const auto c = config.string();
    REQUIRE(cli({"generate", "--spec", (root / "spec.json").string(), "--out", (root / "gen").string(), "--config", c}) == 0);
    REQUIRE(cli({"train", "--data", (root / "gen/unbiased").string(), "--data", (root / "gen/es").string(), "--out",
                 (root / "models").string(), "--config", c}) == 0);
  }

  std::vector<std::string> with(std::vector<std::string> args) const {
    args.push_back("--config");
    args.push_back(config.string());
    return args;
  }
  std::string data() const { return (root / "gen/unbiased").string(); }
  std::string models() const { return (root / "models").string(); }
};

const Workspace& workspace() {
  static const Workspace ws;
  return ws;
}

double total_shutdown(const fs::path& kpis) {
  double sum = 0;
  for (const auto& [key, v] : parse_kpi_table(fixtures::slurp(kpis), "kpis")) {
    if (key.kpi == kKpiShutdown) sum += v;
  }
  return sum;
}

}  // namespace

TEST_CASE("generate") {
  const auto& ws = workspace();
  CHECK(fs::exists(ws.root / "gen/truth.csv"));
  CHECK(fs::exists(ws.root / "gen/es/energy.csv"));
  CHECK(cli(ws.with({"generate", "--spec", (ws.root / "nope.json").string(), "--out", (ws.root / "x").string()})) != 0);
  CHECK(cli({"generate"}) != 0);
}

TEST_CASE("train") {
  const auto& ws = workspace();
  CHECK(fs::exists(ws.root / "models/energy_model.json"));
  CHECK(fs::exists(ws.root / "models/rate_model.json"));
  REQUIRE(cli(ws.with({"train", "--data", ws.data(), "--out", (ws.root / "m2").string()})) == 0);
  REQUIRE(cli(ws.with({"train", "--data", ws.data(), "--out", (ws.root / "m3").string()})) == 0);
  CHECK(fixtures::same_tree(ws.root / "m2", ws.root / "m3"));

  const auto bad = ws.root / "corrupt";
  fs::create_directories(bad);
  for (const auto* f : {"engineering.csv", "mr.csv", "energy.csv"}) fs::copy_file(fs::path(ws.data()) / f, bad / f);
  write_text(bad / "kpi.csv", "cell_id,day\n1,zero\n");
  CHECK(cli(ws.with({"train", "--data", bad.string(), "--out", (ws.root / "m4").string()})) != 0);
}

TEST_CASE("simulate, overrides and benchmark") {
  const auto& ws = workspace();
  const auto out = ws.root / "sim";
  REQUIRE(cli(ws.with({"simulate", "--data", ws.data(), "--models", ws.models(), "--out", out.string()})) == 0);
  CHECK(fs::exists(out / "abm_summary.csv"));
  CHECK(fs::exists(out / "abm_runs.csv"));
  const double base = total_shutdown(out / "kpis.csv");
  CHECK(base > 0);

  // entry threshold 0 for every capacity cell: nobody may leave
  std::string csv = "cell_id,entry_dl\n";
  for (int id = 3; id <= 6; ++id) csv += std::to_string(id) + ",0\n";
  write_text(ws.root / "overrides.csv", csv);
  const auto flipped = ws.root / "sim_flipped";
  REQUIRE(cli(ws.with({"simulate", "--data", ws.data(), "--models", ws.models(), "--overrides",
                       (ws.root / "overrides.csv").string(), "--out", flipped.string()})) == 0);
  CHECK(total_shutdown(flipped / "kpis.csv") == 0);

  write_text(ws.root / "unknown.csv", "cell_id,entry_dl\n99,10\n");
  CHECK(cli(ws.with({"simulate", "--data", ws.data(), "--models", ws.models(), "--overrides",
                     (ws.root / "unknown.csv").string(), "--out", (ws.root / "bad").string()})) != 0);

  REQUIRE(cli(ws.with({"benchmark", "--data", ws.data(), "--models", ws.models(), "--out",
                       (ws.root / "bench").string()})) == 0);
  CHECK(fs::exists(ws.root / "bench/benchmark.csv"));
}

TEST_CASE("compare") {
  const auto& ws = workspace();
  const auto sim = ws.root / "cmp_sim";
  const auto bench = ws.root / "cmp_bench";
  REQUIRE(cli(ws.with({"simulate", "--data", ws.data(), "--models", ws.models(), "--out", sim.string()})) == 0);
  REQUIRE(cli(ws.with({"benchmark", "--data", ws.data(), "--models", ws.models(), "--out", bench.string()})) == 0);
  const auto truth = (ws.root / "gen/truth.csv").string();
  const auto abm = (sim / "kpis.csv").string();
  const auto b = (bench / "kpis.csv").string();

  REQUIRE(cli({"compare", "--abm", abm, "--benchmark", abm, "--truth", truth, "--out", (ws.root / "c1").string()}) == 0);
  auto report = parse_kpi_table(fixtures::slurp(abm), "abm");
  CHECK(fixtures::slurp(ws.root / "c1/report.json").find("\"gain_mae\": 0.0") != std::string::npos);

  REQUIRE(cli({"compare", "--abm", truth, "--benchmark", b, "--truth", truth, "--out", (ws.root / "c2").string()}) == 0);
  CHECK(fixtures::slurp(ws.root / "c2/report.json").find("\"gain_mae\": 1.0") != std::string::npos);

  auto fewer = report;
  fewer.erase(fewer.begin());
  write_text(ws.root / "fewer.csv", serialize_kpi_table(fewer));
  CHECK(cli({"compare", "--abm", (ws.root / "fewer.csv").string(), "--benchmark", b, "--truth", truth, "--out",
             (ws.root / "c3").string()}) != 0);
}

TEST_CASE("configuration file and flags") {
  const auto& ws = workspace();
  const auto m = parse_manifest(R"({"seed": 9, "runs": 3, "rate": {"trees": 7}})");
  CHECK(m.abm.seed == 9);
  CHECK(m.abm.runs == 3);
  CHECK(m.rate.trees == 7);
  CHECK_THROWS(parse_manifest("{not json"));
  CHECK(cli({"simulate", "--data", ws.data(), "--models", ws.models(), "--out", (ws.root / "r0").string(), "--runs",
             "0"}) != 0);
}
