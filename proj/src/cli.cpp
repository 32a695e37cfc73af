#include "esim/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "esim/csv.hpp"
#include "esim/datamodel.hpp"
#include "esim/error.hpp"
#include "esim/harness.hpp"
#include "esim/rules.hpp"
#include "json.hpp"

namespace esim {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
}

template <typename T>
void read_if(const json& j, const char* key, T& target) {
  if (j.contains(key) && !j.at(key).is_null()) target = j.at(key).get<T>();
}

}  // namespace

RunManifest parse_manifest(const std::string& json_text) {
  try {
    const auto j = json::parse(json_text);
    RunManifest m;
    read_if(j, "data", m.data);
    read_if(j, "models", m.models);
    read_if(j, "out", m.out);
    read_if(j, "seed", m.abm.seed);
    read_if(j, "runs", m.abm.runs);
    read_if(j, "max_steps", m.abm.max_steps);
    read_if(j, "threads", m.abm.threads);
    read_if(j, "train_fraction", m.train_fraction);
    if (j.contains("energy")) {
      const auto& e = j.at("energy");
      read_if(e, "learning_rate", m.energy.learning_rate);
      read_if(e, "batch_size", m.energy.batch_size);
      read_if(e, "max_epochs", m.energy.max_epochs);
      read_if(e, "patience", m.energy.patience);
      read_if(e, "hidden", m.energy.hidden);
    }
    if (j.contains("rate")) {
      const auto& r = j.at("rate");
      read_if(r, "trees", m.rate.trees);
      read_if(r, "max_depth", m.rate.max_depth);
      read_if(r, "learning_rate", m.rate.learning_rate);
    }
    return m;
  } catch (const json::exception& e) {
    throw InvalidConfig(std::string("malformed configuration: ") + e.what());
  }
}

namespace {

ScenarioSpec parse_scenario_spec(const std::string& text) {
  try {
    const auto j = json::parse(text);
    ScenarioSpec s;
    read_if(j, "capacity_cells", s.capacity_cells);
    read_if(j, "coverage_cells", s.coverage_cells);
    read_if(j, "days", s.days);
    read_if(j, "seed", s.seed);
    read_if(j, "traffic_scale", s.traffic_scale);
    read_if(j, "reports_per_cell_hour", s.reports_per_cell_hour);
    read_if(j, "carriers_per_radio", s.carriers_per_radio);
    return s;
  } catch (const json::exception& e) {
    throw InvalidSpec(std::string("malformed scenario spec: ") + e.what());
  }
}

/// Per-cell threshold and A4 overrides; blank fields keep the configured value.
void apply_overrides(NetworkConfig& network, const std::string& path) {
  const auto table = csv::Table::read(path);
  table.require({"cell_id"});
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto row = table.row(i);
    const auto id = CellId(static_cast<std::int32_t>(row.integer("cell_id")));
    if (!network.find_cell(id)) throw BadReference(fmt::format("{}: row {}: unknown cell {}", path, i + 1, raw(id)));
    const std::pair<const char*, double ShutdownThresholds::*> fields[] = {
        {"entry_ue", &ShutdownThresholds::entry_ue}, {"entry_dl", &ShutdownThresholds::entry_dl},
        {"entry_ul", &ShutdownThresholds::entry_ul}, {"leave_ue", &ShutdownThresholds::leave_ue},
        {"leave_dl", &ShutdownThresholds::leave_dl}, {"leave_ul", &ShutdownThresholds::leave_ul}};
    for (const auto& [column, member] : fields) {
      const auto value = row.opt_num(column);
      if (!value) continue;
      const auto it = network.energy_saving.find(id);
      if (it == network.energy_saving.end()) row.fail(fmt::format("cell {} is not a capacity cell", raw(id)));
      it->second.*member = *value;
    }
    if (const auto v = row.opt_num("a4_threshold_dbm")) network.mobility[id].threshold_dbm = *v;
    if (const auto v = row.opt_num("a4_hysteresis_db")) network.mobility[id].hysteresis_db = *v;
  }
  network.validate();
}

struct Inputs {
  Datasets data;
  TrafficModel traffic;
  HandoverTable handover;
  EnergyModel energy;
  RateModel rate;
};

Inputs load_inputs(const RunManifest& m, const std::string& overrides) {
  if (m.data.empty()) throw InvalidConfig("no dataset directory given (--data)");
  if (m.models.empty()) throw InvalidConfig("no model directory given (--models)");
  Inputs in;
  in.data = parse_datasets(DatasetPaths::in_directory(m.data));
  if (!overrides.empty()) apply_overrides(in.data.network, overrides);
  in.traffic = fit_traffic_model(in.data.kpis);
  in.handover = build_handover_table(in.data.network, in.data.reports);
  in.energy = load_energy_model(read_file((fs::path(m.models) / "energy_model.json").string()));
  in.rate = load_rate_model(read_file((fs::path(m.models) / "rate_model.json").string()));
  return in;
}

void require_out(const RunManifest& m) {
  if (m.out.empty()) throw InvalidConfig("no output directory given (--out)");
}

// ---------------------------------------------------------------------------

int cmd_generate(const RunManifest& m, const std::string& spec_path, std::optional<std::uint64_t> seed,
                 std::ostream& out) {
  require_out(m);
  auto spec = parse_scenario_spec(read_file(spec_path));
  if (seed) spec.seed = *seed;
  const auto scenario = generate_scenario(spec);
  write_scenario(scenario, m.out);
  auto cfg = m.abm;
  cfg.seed = spec.seed;
  const auto truth = ground_truth_replay(scenario, scenario.network, cfg);
  write_file(fs::path(m.out) / "truth.csv", serialize_kpi_table(truth));
  out << fmt::format("generated {} capacity and {} coverage cells over {} days in {}\n", spec.capacity_cells,
                     spec.coverage_cells, spec.days, m.out);
  return 0;
}

int cmd_train(const RunManifest& m, const std::vector<std::string>& data_dirs, std::ostream& out) {
  require_out(m);
  if (data_dirs.empty()) throw InvalidConfig("no dataset directory given (--data)");
  std::vector<Datasets> sets;
  for (const auto& dir : data_dirs) sets.push_back(parse_datasets(DatasetPaths::in_directory(dir)));
  const auto& network = sets.front().network;
  for (const auto& s : sets) {
    if (!(s.network == network)) throw InvalidConfig("training datasets describe different networks");
  }

  std::set<int> days;
  for (const auto& s : sets) {
    for (const auto& k : s.kpis) days.insert(k.day);
  }
  if (days.empty()) throw EmptyTrainingSet("no KPI records");
  const auto n_train =
      std::max<std::size_t>(1, static_cast<std::size_t>(m.train_fraction * static_cast<double>(days.size())));
  const int last_train_day = *std::next(days.begin(), static_cast<std::ptrdiff_t>(std::min(n_train, days.size()) - 1));

  const auto schema = fit_schema(network);
  std::vector<EnergySample> energy_train, energy_test;
  std::vector<RateSample> rate_train, rate_test;
  for (const auto& s : sets) {
    for (auto& e : energy_samples(s, schema)) (e.day <= last_train_day ? energy_train : energy_test).push_back(e);
    for (auto& r : rate_samples(s, default_rate_bin_edges())) {
      (r.day <= last_train_day ? rate_train : rate_test).push_back(r);
    }
  }

  auto hyper = m.energy;
  hyper.seed = m.abm.seed;
  const auto energy = train_energy_model(energy_train, schema, hyper);
  const auto rate = train_rate_model(rate_train, m.rate, kLowLoadCutoff, default_rate_bin_edges(), m.abm.threads);
  write_file(fs::path(m.out) / "energy_model.json", save_energy_model(energy));
  write_file(fs::path(m.out) / "rate_model.json", save_rate_model(rate));

  json report{{"train_days_through", last_train_day},
              {"energy", {{"train_samples", energy_train.size()}, {"test_samples", energy_test.size()},
                          {"epochs", energy.epochs}, {"best_validation_loss", energy.best_validation_loss}}},
              {"rate", {{"train_samples", rate_train.size()}, {"test_samples", rate_test.size()}}}};
  if (!energy_test.empty()) {
    std::vector<double> pred, truth;
    for (const auto& e : energy_test) {
      pred.push_back(predict_energy(energy, e.features).mu);
      truth.push_back(e.energy_wh);
    }
    const auto metrics = mae_mape(pred, truth);
    report["energy"]["test_mae_wh"] = metrics.mae;
    report["energy"]["test_mape_percent"] = metrics.mape;
  }
  std::vector<double> pred, truth;
  for (const auto& r : rate_test) {
    if (!r.avg_mbps || !rate.cells.count(r.cell)) continue;
    pred.push_back(expected_rate(rate, r.cell, r.dl_prb_load, r.rrc_ues).avg_mbps);
    truth.push_back(*r.avg_mbps);
  }
  if (!pred.empty()) report["rate"]["test_mae_mbps"] = mae_mape(pred, truth).mae;
  write_file(fs::path(m.out) / "train_report.json", report.dump(2) + "\n");
  out << fmt::format("trained on {} energy and {} rate samples; models in {}\n", energy_train.size(),
                     rate_train.size(), m.out);
  return 0;
}

int cmd_simulate(const RunManifest& m, const std::string& overrides, std::ostream& out) {
  require_out(m);
  const auto in = load_inputs(m, overrides);
  const auto day = simulate_day(in.traffic, in.data.network, in.handover, m.abm);
  const auto kpis = abm_kpis(day, in.data.network, KpiModels{&in.energy, &in.rate}, m.abm.seed);
  write_file(fs::path(m.out) / "abm_summary.csv", serialize_summary(day));
  write_file(fs::path(m.out) / "abm_runs.csv", serialize_runs(day));
  write_file(fs::path(m.out) / "kpis.csv", serialize_kpi_table(kpis));
  std::size_t stable = 0, total = 0;
  for (const auto& h : day.hours) {
    total += h.runs();
    stable += static_cast<std::size_t>(std::count(h.stable.begin(), h.stable.end(), 1));
  }
  out << fmt::format("simulated 24 hours x {} runs; {} of {} runs reached a stable configuration\n", m.abm.runs,
                     stable, total);
  return 0;
}

int cmd_benchmark(const RunManifest& m, const std::string& overrides, std::ostream& out) {
  require_out(m);
  const auto in = load_inputs(m, overrides);
  const auto bench = run_benchmark(in.traffic, in.data.network, in.handover);
  const auto kpis = benchmark_kpis(bench, in.data.network, KpiModels{&in.energy, &in.rate});
  write_file(fs::path(m.out) / "benchmark.csv", serialize_benchmark(bench));
  write_file(fs::path(m.out) / "kpis.csv", serialize_kpi_table(kpis));
  out << "benchmark written to " << m.out << "\n";
  return 0;
}

int cmd_compare(const RunManifest& m, const std::string& abm_path, const std::string& bench_path,
                const std::string& truth_path, std::ostream& out) {
  require_out(m);
  const auto abm = parse_kpi_table(read_file(abm_path), abm_path);
  const auto bench = parse_kpi_table(read_file(bench_path), bench_path);
  const auto truth = parse_kpi_table(read_file(truth_path), truth_path);
  const auto report = compare(abm, bench, truth);
  write_file(fs::path(m.out) / "report.json", serialize_report(report));
  write_file(fs::path(m.out) / "profiles.csv", serialize_profiles(report));
  for (const auto& k : report.kpis) {
    out << fmt::format("{:<14} MAE abm {:.4g} benchmark {:.4g}", k.kpi, k.abm.mae, k.benchmark.mae);
    if (k.gain_mae) out << fmt::format(" gain {:.2f}%", 100.0 * *k.gain_mae);
    out << "\n";
  }
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Carrier-shutdown network simulator"};
  app.require_subcommand(1);

  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> runs, max_steps, threads;
  std::optional<std::string> out_dir;
  app.add_option("--config", config, "JSON configuration file (default: $ESIM_CONFIG)");
  app.add_option("--seed", seed, "Random seed");
  app.add_option("--runs", runs, "Monte-Carlo runs per hour");
  app.add_option("--max-steps", max_steps, "Maximum steps per run");
  app.add_option("--threads", threads, "Worker threads (0: all cores)");
  app.add_option("--out", out_dir, "Output directory");

  std::string spec_path, overrides, abm_path, bench_path, truth_path;
  std::vector<std::string> data_dirs;
  std::optional<std::string> data, models;

  auto* generate = app.add_subcommand("generate", "Generate a synthetic scenario")->fallthrough();
  generate->add_option("--spec", spec_path, "Scenario spec (JSON)")->required();

  auto* train = app.add_subcommand("train", "Train the energy and rate models")->fallthrough();
  train->add_option("--data", data_dirs, "Dataset directory (repeatable)");

  auto* simulate = app.add_subcommand("simulate", "Run the agent-based simulation")->fallthrough();
  auto* benchmark = app.add_subcommand("benchmark", "Run the deterministic benchmark")->fallthrough();
  for (auto* sub : {simulate, benchmark}) {
    sub->add_option("--data", data, "Dataset directory");
    sub->add_option("--models", models, "Model directory");
    sub->add_option("--overrides", overrides, "Per-cell threshold and A4 overrides (CSV)");
  }

  auto* cmp = app.add_subcommand("compare", "Score ABM and benchmark KPIs against the truth")->fallthrough();
  cmp->add_option("--abm", abm_path, "ABM kpis.csv")->required();
  cmp->add_option("--benchmark", bench_path, "Benchmark kpis.csv")->required();
  cmp->add_option("--truth", truth_path, "Ground-truth KPIs")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    RunManifest m;
    if (config.empty()) {
      if (const char* env = std::getenv(kConfigEnv)) config = env;
    }
    if (!config.empty()) m = parse_manifest(read_file(config));
    if (seed) m.abm.seed = *seed;
    if (runs) m.abm.runs = *runs;
    if (max_steps) m.abm.max_steps = *max_steps;
    if (threads) m.abm.threads = *threads;
    if (out_dir) m.out = *out_dir;
    if (data) m.data = *data;
    if (models) m.models = *models;
    m.abm.validate();

    if (*generate) return cmd_generate(m, spec_path, seed, out);
    if (*train) {
      if (data_dirs.empty() && !m.data.empty()) data_dirs.push_back(m.data);
      return cmd_train(m, data_dirs, out);
    }
    if (*simulate) return cmd_simulate(m, overrides, out);
    if (*benchmark) return cmd_benchmark(m, overrides, out);
    if (*cmp) return cmd_compare(m, abm_path, bench_path, truth_path, out);
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace esim
