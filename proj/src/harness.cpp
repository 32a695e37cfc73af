#include "esim/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <numbers>
#include <set>

#include <fmt/format.h>

#include "esim/csv.hpp"
#include "esim/error.hpp"
#include "esim/rules.hpp"
#include "json.hpp"

namespace esim {

using csv::format_number;
using json = nlohmann::json;

void ScenarioSpec::validate() const {
  if (capacity_cells < 1) throw InvalidSpec("at least one capacity cell is required");
  if (coverage_cells < 1) throw InvalidSpec("at least one coverage cell is required");
  if (days < 1) throw InvalidSpec("at least one day is required");
  if (reports_per_cell_hour < 1) throw InvalidSpec("reports_per_cell_hour must be >= 1");
  if (carriers_per_radio < 1 || carriers_per_radio > kDefaultMaxCarriers) {
    throw InvalidSpec(fmt::format("carriers_per_radio must be in 1..{}", kDefaultMaxCarriers));
  }
  if (!(traffic_scale >= 0.0)) throw InvalidSpec("traffic_scale must be >= 0");
}

// ---------------------------------------------------------------------------
// Ground-truth laws

double ScenarioLaws::energy_wh(const RadioUnit& ru, std::span<const CarrierLoad> carriers) const {
  double e = idle_w.at(ru.id);
  for (const auto& c : carriers) {
    const double off = std::clamp(c.cs_minutes / 60.0, 0.0, 1.0);
    const double load = std::clamp(c.dl_prb_load, 0.0, 1.0);
    e += (1.0 - off) * (carrier_static_w + slope_w.at(c.cell) * load) + off * carrier_sleep_w;
  }
  return e;
}

double ScenarioLaws::rate_mbps(CellId cell, double dl_prb_load, double ues) const {
  const double rmax = rate_max_mbps.at(cell);
  if (dl_prb_load < kLowLoadCutoff) return 0.625 * rmax;
  const double load = std::min(dl_prb_load, 1.0);
  return rmax * (1.0 - 0.75 * load) / (1.0 + 0.02 * std::max(0.0, ues));
}

double ScenarioLaws::draw_rate_mbps(CellId cell, double dl_prb_load, double ues, Rng& rng) const {
  if (dl_prb_load < kLowLoadCutoff) {
    std::uniform_real_distribution<double> u(0.25, 1.0);
    return u(rng) * rate_max_mbps.at(cell);
  }
  std::normal_distribution<double> noise(0.0, 0.02);
  return std::max(0.0, rate_mbps(cell, dl_prb_load, ues) * (1.0 + noise(rng)));
}

// ---------------------------------------------------------------------------
// Generator

namespace {

constexpr double kA4Threshold = -100.0;
constexpr double kA4Hysteresis = 2.0;
constexpr double kLognormalShape = 0.8;
constexpr double kRateSamplesPerHour = 1000.0;

double diurnal(double hour, double phase) {
  return 0.5 + 0.45 * std::sin(2.0 * std::numbers::pi * (hour - 10.0 - phase) / 24.0);
}

HourlyGaussian gaussian(double mean) { return HourlyGaussian{mean, 0.2 * mean + 0.5}; }

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

// RN counters for a lognormal per-UE rate distribution whose 5th percentile
// is `p5`.
std::array<double, kRateBinCount> rate_bins(double p5, const std::vector<double>& edges) {
  std::array<double, kRateBinCount> bins{};
  if (!(p5 > 0.0)) return bins;
  const double mu = std::log(p5) + 1.6448536269514722 * kLognormalShape;
  for (int g = 0; g < kRateBinCount; ++g) {
    const double lo = edges[g] > 0.0 ? normal_cdf((std::log(edges[g]) - mu) / kLognormalShape) : 0.0;
    const double hi = g + 1 == kRateBinCount ? 1.0 : normal_cdf((std::log(edges[g + 1]) - mu) / kLognormalShape);
    bins[g] = std::round(kRateSamplesPerHour * (hi - lo));
  }
  return bins;
}

struct CellHour {
  double ues = 0.0;
  double dl = 0.0;
  double ul = 0.0;
  double cs = 0.0;
};

CellKpiRecord make_kpi(const SyntheticScenario& s, const Cell& cell, int day, int hour, const CellHour& v,
                       const std::vector<double>& edges, Rng& rng) {
  CellKpiRecord k;
  k.cell = cell.id;
  k.day = day;
  k.hour = hour;
  k.working_day = true;
  k.rrc_ues = v.ues;
  k.dl_prbs = v.dl;
  k.ul_prbs = v.ul;
  k.cs_minutes = v.cs;
  const double on = 1.0 - v.cs / 60.0;
  if (on <= 0.0) return k;
  const double load = v.dl / cell.n_dl_prb;
  const double rate = s.laws.draw_rate_mbps(cell.id, load, v.ues, rng);
  k.t_dl_minus = on * (60.0 + 3000.0 * std::min(load, 1.0));
  k.t_dl = k.t_dl_minus + on * 20.0;
  k.v_dl = rate * 1e6 * k.t_dl_minus / 0.95;
  k.v_dl_minus = 0.05 * k.v_dl;
  k.t_ul = on * (30.0 + 1500.0 * std::min(v.ul / cell.n_ul_prb, 1.0));
  k.v_ul = 0.3 * rate * 1e6 * k.t_ul;
  k.rate_bins = rate_bins(s.laws.rate_ce_fraction * rate, edges);
  return k;
}

void add_energy(SyntheticScenario& s, Datasets& data, int day, int hour, const std::map<CellId, CellHour>& values,
                Rng& rng) {
  std::normal_distribution<double> noise(0.0, s.laws.energy_noise_w);
  for (const auto& ru : s.network.radio_units) {
    std::vector<CarrierLoad> carriers;
    for (auto id : ru.cell_ids) {
      const auto& v = values.at(id);
      carriers.push_back(CarrierLoad{id, v.dl / s.network.cell(id).n_dl_prb, v.cs});
    }
    const double e = s.laws.energy_wh(ru, carriers) + noise(rng);
    data.energy.push_back(RadioEnergyRecord{ru.id, day, hour, std::max(0.0, e)});
  }
}

}  // namespace

SyntheticScenario generate_scenario(const ScenarioSpec& spec) {
  spec.validate();
  SyntheticScenario s;
  s.spec = spec;
  auto rng = make_stream(spec.seed, {0x7363656e6172696fULL});
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
  auto& net = s.network;

  const std::array<double, 3> capacity_freqs{1800.0, 2100.0, 2600.0};
  const std::array<double, 3> pmax_tiers{40.0, 43.0, 46.0};
  const std::array<double, 3> slopes{70.0, 140.0, 280.0};
  const std::array<const char*, 2> tx_modes{"MIMO2x2", "MIMO4x4"};

  std::map<CellId, std::array<double, 3>> peaks;  // ues, dl fraction, phase
  for (int k = 0; k < spec.coverage_cells; ++k) {
    const auto id = CellId(1 + k);
    const auto ru = RadioId(1 + k);
    net.cells.push_back(Cell{id, ru, 800.0, 10.0, 43.0, 50, 50});
    net.radio_units.push_back(RadioUnit{ru, "RT-L", 2, tx_modes[0], {id}});
    net.coverage_cells.push_back(id);
    s.laws.idle_w[ru] = 90.0;
    s.laws.slope_w[id] = slopes[1];
    s.laws.rate_max_mbps[id] = uniform(50.0, 90.0);
    peaks[id] = {uniform(15.0, 40.0), uniform(0.25, 0.5), uniform(-1.5, 1.5)};
  }
  int next_ru = spec.coverage_cells + 1;
  for (int i = 0; i < spec.capacity_cells; ++i) {
    const auto id = CellId(1 + spec.coverage_cells + i);
    if (i % spec.carriers_per_radio == 0) {
      const auto ru = RadioId(next_ru++);
      const bool type_b = unit(rng) < 0.5;
      net.radio_units.push_back(
          RadioUnit{ru, type_b ? "RT-B" : "RT-A", type_b ? 8 : 4, tx_modes[unit(rng) < 0.5 ? 0 : 1], {}});
      s.laws.idle_w[ru] = type_b ? 170.0 : 130.0;
    }
    auto& ru = net.radio_units.back();
    ru.cell_ids.push_back(id);
    const auto tier = static_cast<std::size_t>(std::min(2.0, std::floor(3.0 * unit(rng))));
    net.cells.push_back(Cell{id, ru.id, capacity_freqs[i % 3], 20.0, pmax_tiers[tier], 100, 100});
    net.capacity_cells.push_back(id);
    const auto coverage = CellId(1 + i % spec.coverage_cells);
    net.pairing[id] = coverage;
    A4Params a4;
    a4.threshold_dbm = kA4Threshold;
    a4.hysteresis_db = kA4Hysteresis;
    net.mobility[id] = a4;
    const auto& cov = net.cell(coverage);
    const double n_entry = 100.0 + cov.n_dl_prb;
    net.energy_saving[id] = ShutdownThresholds{25.0, 0.3 * n_entry, 0.3 * n_entry, 70.0, 0.9 * cov.n_dl_prb,
                                               0.9 * cov.n_ul_prb};
    s.laws.slope_w[id] = slopes[tier];
    s.laws.rate_max_mbps[id] = uniform(120.0, 200.0);
    peaks[id] = {uniform(10.0, 50.0), uniform(0.25, 0.7), uniform(-1.5, 1.5)};
  }
  net.validate();

  for (const auto& cell : net.cells) {
    const auto& [peak_ues, peak_dl, phase] = peaks.at(cell.id);
    for (int h = 1; h <= kHoursPerDay; ++h) {
      const double p = spec.traffic_scale * diurnal(h, phase);
      const double dl = p * peak_dl * cell.n_dl_prb;
      s.truth_traffic.set(cell.id, h, HourlyTraffic{gaussian(p * peak_ues), gaussian(dl), gaussian(0.4 * dl)});
    }
  }

  // Measurement reports
  std::vector<MeasurementReport> reports;
  long ue = 0;
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int d = 0; d < spec.days; ++d) {
    for (int h = 1; h <= kHoursPerDay; ++h) {
      for (auto c : net.capacity_cells) {
        const auto paired = net.pairing.at(c);
        for (int n = 0; n < spec.reports_per_cell_hour; ++n) {
          MeasurementReport mr;
          mr.timestamp = static_cast<long>(d) * 86400 + (h - 1) * 3600 + static_cast<long>(unit(rng) * 3599.0);
          mr.ue_id = ++ue;
          mr.serving_cell = c;
          mr.rsrp_dbm[c] = std::round((-85.0 + 4.0 * normal(rng)) * 10.0) / 10.0;
          mr.rsrp_dbm[paired] = std::round(std::max(-97.0, -92.0 + 3.0 * normal(rng)) * 10.0) / 10.0;
          if (spec.coverage_cells > 1) {
            auto other = CellId(1 + static_cast<int>(unit(rng) * (spec.coverage_cells - 1)));
            if (other >= paired) other = CellId(raw(other) + 1);
            mr.rsrp_dbm[other] = std::round((-103.0 + 5.0 * normal(rng)) * 10.0) / 10.0;
          }
          reports.push_back(std::move(mr));
        }
      }
    }
  }

  const auto edges = default_rate_bin_edges();
  s.unbiased.network = net;
  s.unbiased.reports = reports;
  for (int d = 0; d < spec.days; ++d) {
    for (int h = 1; h <= kHoursPerDay; ++h) {
      std::map<CellId, CellHour> values;
      for (const auto& cell : net.cells) {
        const auto& t = s.truth_traffic.at(cell.id, h);
        CellHour v;
        v.ues = std::max(0.0, t.ues.mean + t.ues.stddev * normal(rng));
        v.dl = std::clamp(t.dl_prbs.mean + t.dl_prbs.stddev * normal(rng), 0.0, double(cell.n_dl_prb));
        v.ul = std::clamp(t.ul_prbs.mean + t.ul_prbs.stddev * normal(rng), 0.0, double(cell.n_ul_prb));
        values[cell.id] = v;
        s.unbiased.kpis.push_back(make_kpi(s, cell, d, h, v, edges, rng));
      }
      add_energy(s, s.unbiased, d, h, values, rng);
    }
  }

  // Energy-saving campaign: one realized simulation run per day.
  s.es.network = net;
  s.es.reports = reports;
  const auto table = build_handover_table(net, reports);
  for (int d = 0; d < spec.days; ++d) {
    AbmConfig cfg;
    cfg.runs = 1;
    cfg.seed = spec.seed * 1000003ULL + static_cast<std::uint64_t>(d);
    cfg.threads = 1;
    const auto day = simulate_day(s.truth_traffic, net, table, cfg);
    for (const auto& out : day.hours) {
      std::map<CellId, CellHour> values;
      for (std::size_t i = 0; i < net.cells.size(); ++i) {
        const auto& cell = net.cells[i];
        const CellHour v{out.ues[i][0], out.dl_prbs[i][0], out.ul_prbs[i][0], out.cs_minutes[i][0]};
        values[cell.id] = v;
        s.es.kpis.push_back(make_kpi(s, cell, d, out.hour, v, edges, rng));
      }
      add_energy(s, s.es, d, out.hour, values, rng);
    }
  }
  return s;
}

void write_scenario(const SyntheticScenario& scenario, const std::string& dir) {
  write_datasets(scenario.unbiased, (std::filesystem::path(dir) / "unbiased").string());
  write_datasets(scenario.es, (std::filesystem::path(dir) / "es").string());
}

// ---------------------------------------------------------------------------
// KPI tables

std::string serialize_kpi_table(const KpiTable& table) {
  std::string out = "kpi,entity,hour,value\n";
  for (const auto& [key, value] : table) {
    out += fmt::format("{},{},{},{}\n", key.kpi, key.entity, key.hour, format_number(value));
  }
  return out;
}

KpiTable parse_kpi_table(std::string_view text, const std::string& name) {
  const auto table = csv::Table::parse(text, name);
  table.require({"kpi", "entity", "hour", "value"});
  KpiTable out;
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto row = table.row(i);
    KpiKey key{row.str("kpi"), static_cast<std::int32_t>(row.integer("entity")), static_cast<int>(row.integer("hour"))};
    if (!out.emplace(std::move(key), row.num("value")).second) row.fail("duplicate key");
  }
  return out;
}

ErrorMetrics mae_mape(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size()) {
    throw LengthMismatch(fmt::format("prediction has {} entries, truth has {}", pred.size(), truth.size()));
  }
  if (pred.empty()) throw EmptySeries("cannot score an empty series");
  ErrorMetrics m;
  double abs_sum = 0.0;
  double pct_sum = 0.0;
  std::size_t pct_n = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double e = std::abs(pred[i] - truth[i]);
    abs_sum += e;
    if (truth[i] == 0.0) {
      ++m.skipped;
    } else {
      pct_sum += e / std::abs(truth[i]);
      ++pct_n;
    }
  }
  m.mae = abs_sum / static_cast<double>(pred.size());
  m.mape_defined = pct_n > 0;
  m.mape = pct_n > 0 ? 100.0 * pct_sum / static_cast<double>(pct_n) : 0.0;
  return m;
}

const KpiComparison& EvalReport::at(const std::string& kpi) const {
  const auto it = std::find_if(kpis.begin(), kpis.end(), [&](const KpiComparison& k) { return k.kpi == kpi; });
  if (it == kpis.end()) throw KeyMismatch("report has no KPI '" + kpi + "'");
  return *it;
}

namespace {

void require_same_keys(const KpiTable& a, const KpiTable& truth, const char* label) {
  if (a.size() == truth.size() &&
      std::equal(a.begin(), a.end(), truth.begin(), [](const auto& x, const auto& y) { return x.first == y.first; })) {
    return;
  }
  for (const auto& [key, _] : truth) {
    if (!a.count(key)) {
      throw KeyMismatch(fmt::format("{} has no value for {} entity {} hour {}", label, key.kpi, key.entity, key.hour));
    }
  }
  for (const auto& [key, _] : a) {
    if (!truth.count(key)) {
      throw KeyMismatch(fmt::format("{} has an extra value for {} entity {} hour {}", label, key.kpi, key.entity,
                                    key.hour));
    }
  }
}

std::optional<double> gain(double abm, double bench) {
  if (!(bench > 0.0)) return std::nullopt;
  return (bench - abm) / bench;
}

}  // namespace

EvalReport compare(const KpiTable& abm, const KpiTable& benchmark, const KpiTable& truth) {
  require_same_keys(abm, truth, "ABM output");
  require_same_keys(benchmark, truth, "benchmark output");

  struct Series {
    std::vector<double> truth, abm, bench;
    std::map<int, std::array<double, 4>> hours;  // sums of truth, abm, bench and count
  };
  std::map<std::string, Series> by_kpi;
  for (const auto& [key, t] : truth) {
    auto& s = by_kpi[key.kpi];
    const double a = abm.at(key);
    const double b = benchmark.at(key);
    s.truth.push_back(t);
    s.abm.push_back(a);
    s.bench.push_back(b);
    auto& h = s.hours[key.hour];
    h[0] += t;
    h[1] += a;
    h[2] += b;
    h[3] += 1.0;
  }

  EvalReport report;
  for (const auto& [kpi, s] : by_kpi) {
    KpiComparison c;
    c.kpi = kpi;
    c.points = s.truth.size();
    c.abm = mae_mape(s.abm, s.truth);
    c.benchmark = mae_mape(s.bench, s.truth);
    c.gain_mae = gain(c.abm.mae, c.benchmark.mae);
    if (c.abm.mape_defined && c.benchmark.mape_defined) c.gain_mape = gain(c.abm.mape, c.benchmark.mape);
    report.kpis.push_back(c);
    for (const auto& [hour, sums] : s.hours) {
      report.profiles.push_back(ProfilePoint{kpi, hour, sums[0] / sums[3], sums[1] / sums[3], sums[2] / sums[3]});
    }
  }
  return report;
}

std::string serialize_report(const EvalReport& report) {
  const auto metrics = [](const ErrorMetrics& m) {
    return json{{"mae", m.mae},
                {"mape_percent", m.mape_defined ? json(m.mape) : json(nullptr)},
                {"mape_skipped_zero_truth", m.skipped}};
  };
  const auto optional = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json kpis = json::array();
  for (const auto& k : report.kpis) {
    kpis.push_back(json{{"kpi", k.kpi},
                        {"points", k.points},
                        {"abm", metrics(k.abm)},
                        {"benchmark", metrics(k.benchmark)},
                        {"gain_mae", optional(k.gain_mae)},
                        {"gain_mape", optional(k.gain_mape)}});
  }
  return json{{"kpis", kpis}}.dump(2) + "\n";
}

std::string serialize_profiles(const EvalReport& report) {
  std::string out = "kpi,hour,truth,abm,benchmark\n";
  for (const auto& p : report.profiles) {
    out += fmt::format("{},{},{},{},{}\n", p.kpi, p.hour, format_number(p.truth), format_number(p.abm),
                       format_number(p.benchmark));
  }
  return out;
}

// ---------------------------------------------------------------------------
// KPI pipelines

namespace {

std::vector<CarrierLoad> carriers_of(const NetworkConfig& network, const RadioUnit& ru,
                                     const std::map<CellId, std::size_t>& index,
                                     const std::function<std::pair<double, double>(std::size_t)>& load_cs) {
  std::vector<CarrierLoad> carriers;
  for (auto id : ru.cell_ids) {
    const auto [dl, cs] = load_cs(index.at(id));
    carriers.push_back(CarrierLoad{id, std::clamp(dl / network.cell(id).n_dl_prb, 0.0, 1.0), cs});
  }
  return carriers;
}

std::map<CellId, std::size_t> index_cells(const std::vector<CellId>& cells) {
  std::map<CellId, std::size_t> index;
  for (std::size_t i = 0; i < cells.size(); ++i) index[cells[i]] = i;
  return index;
}

// Shared by the estimate and the ground truth: everything but energy and rate.
void traffic_kpis(const DayOutputs& day, const NetworkConfig& network, KpiTable& out) {
  for (const auto& h : day.hours) {
    for (std::size_t i = 0; i < day.cells.size(); ++i) {
      const auto id = day.cells[i];
      if (network.is_capacity(id)) out[{kKpiShutdown, raw(id), h.hour}] = h.mean_cs(i);
      out[{kKpiLoad, raw(id), h.hour}] = h.mean_dl(i) / network.cell(id).n_dl_prb;
    }
  }
}

}  // namespace

KpiTable abm_kpis(const DayOutputs& day, const NetworkConfig& network, const KpiModels& models, std::uint64_t seed) {
  KpiTable out;
  traffic_kpis(day, network, out);
  const auto index = index_cells(day.cells);
  for (const auto& h : day.hours) {
    if (models.energy) {
      for (const auto& ru : network.radio_units) {
        double sum = 0.0;
        for (std::size_t r = 0; r < h.runs(); ++r) {
          const auto carriers = carriers_of(network, ru, index, [&](std::size_t i) {
            return std::pair{h.dl_prbs[i][r], h.cs_minutes[i][r]};
          });
          sum += predict_energy(*models.energy, encode_features(models.energy->schema, network, ru, carriers)).mu;
        }
        out[{kKpiEnergy, raw(ru.id), h.hour}] = sum / static_cast<double>(h.runs());
      }
    }
    if (models.rate) {
      for (std::size_t i = 0; i < day.cells.size(); ++i) {
        const auto id = day.cells[i];
        auto rng = make_stream(seed, {static_cast<std::uint64_t>(h.hour), static_cast<std::uint64_t>(raw(id))});
        double sum = 0.0;
        std::size_t active = 0;
        for (std::size_t r = 0; r < h.runs(); ++r) {
          if (h.cs_minutes[i][r] >= 60.0) continue;
          const double load = std::clamp(h.dl_prbs[i][r] / network.cell(id).n_dl_prb, 0.0, 1.0);
          sum += predict_rate(*models.rate, id, load, h.ues[i][r], rng).avg_mbps;
          ++active;
        }
        out[{kKpiRate, raw(id), h.hour}] = active > 0 ? sum / static_cast<double>(active) : 0.0;
      }
    }
  }
  return out;
}

KpiTable benchmark_kpis(const BenchmarkOutputs& bench, const NetworkConfig& network, const KpiModels& models) {
  KpiTable out;
  const auto index = index_cells(bench.cells);
  for (const auto& h : bench.hours) {
    for (std::size_t i = 0; i < bench.cells.size(); ++i) {
      const auto id = bench.cells[i];
      const auto& cell = network.cell(id);
      if (network.is_capacity(id)) out[{kKpiShutdown, raw(id), h.hour}] = h.cs_minutes[i];
      out[{kKpiLoad, raw(id), h.hour}] = h.load[i].dl_prbs / cell.n_dl_prb;
      if (models.rate) {
        const double load = std::clamp(h.load[i].dl_prbs / cell.n_dl_prb, 0.0, 1.0);
        out[{kKpiRate, raw(id), h.hour}] =
            h.cs_minutes[i] >= 60.0 ? 0.0 : expected_rate(*models.rate, id, load, h.load[i].ues).avg_mbps;
      }
    }
    if (models.energy) {
      for (const auto& ru : network.radio_units) {
        const auto carriers = carriers_of(network, ru, index, [&](std::size_t i) {
          return std::pair{h.load[i].dl_prbs, h.cs_minutes[i]};
        });
        out[{kKpiEnergy, raw(ru.id), h.hour}] =
            predict_energy(*models.energy, encode_features(models.energy->schema, network, ru, carriers)).mu;
      }
    }
  }
  return out;
}

KpiTable ground_truth_replay(const SyntheticScenario& scenario, const NetworkConfig& network, const AbmConfig& cfg) {
  auto truth_cfg = cfg;
  truth_cfg.runs = 10 * cfg.runs;
  const auto table = build_handover_table(network, scenario.unbiased.reports);
  const auto day = simulate_day(scenario.truth_traffic, network, table, truth_cfg);

  KpiTable out;
  traffic_kpis(day, network, out);
  const auto index = index_cells(day.cells);
  const auto& laws = scenario.laws;
  for (const auto& h : day.hours) {
    for (const auto& ru : network.radio_units) {
      double sum = 0.0;
      for (std::size_t r = 0; r < h.runs(); ++r) {
        const auto carriers = carriers_of(network, ru, index, [&](std::size_t i) {
          return std::pair{h.dl_prbs[i][r], h.cs_minutes[i][r]};
        });
        sum += laws.energy_wh(ru, carriers);
      }
      out[{kKpiEnergy, raw(ru.id), h.hour}] = sum / static_cast<double>(h.runs());
    }
    for (std::size_t i = 0; i < day.cells.size(); ++i) {
      const auto id = day.cells[i];
      double sum = 0.0;
      std::size_t active = 0;
      for (std::size_t r = 0; r < h.runs(); ++r) {
        if (h.cs_minutes[i][r] >= 60.0) continue;
        sum += laws.rate_mbps(id, h.dl_prbs[i][r] / network.cell(id).n_dl_prb, h.ues[i][r]);
        ++active;
      }
      out[{kKpiRate, raw(id), h.hour}] = active > 0 ? sum / static_cast<double>(active) : 0.0;
    }
  }
  return out;
}

}  // namespace esim
