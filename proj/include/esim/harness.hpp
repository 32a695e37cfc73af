#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "esim/abm.hpp"
#include "esim/datamodel.hpp"
#include "esim/energymodel.hpp"
#include "esim/ratemodel.hpp"

namespace esim {

// ---------------------------------------------------------------------------
// Synthetic scenario

struct ScenarioSpec {
  int capacity_cells = 30;
  int coverage_cells = 20;
  int days = 5;
  std::uint64_t seed = 1;
  double traffic_scale = 1.0;  // multiplies every traffic mean
  int reports_per_cell_hour = 3;
  int carriers_per_radio = 3;  // capacity cells grouped per radio unit

  void validate() const;  // throws InvalidSpec
};

/// Ground-truth laws behind the generated files.
struct ScenarioLaws {
  std::map<RadioId, double> idle_w;
  std::map<CellId, double> slope_w;  // full-load increment of a carrier
  std::map<CellId, double> rate_max_mbps;
  double carrier_static_w = 55.0;
  double carrier_sleep_w = 8.0;
  double energy_noise_w = 5.0;
  double rate_ce_fraction = 0.15;

  /// Noise-free hourly energy of a radio unit.
  double energy_wh(const RadioUnit& ru, std::span<const CarrierLoad> carriers) const;
  /// Noise-free mean UE rate; below the low-load cutoff this is the mean of
  /// the uniform law.
  double rate_mbps(CellId cell, double dl_prb_load, double ues) const;
  /// One realization of the rate law.
  double draw_rate_mbps(CellId cell, double dl_prb_load, double ues, Rng& rng) const;
};

struct SyntheticScenario {
  ScenarioSpec spec;
  NetworkConfig network;
  TrafficModel truth_traffic;
  ScenarioLaws laws;
  Datasets unbiased;  // energy saving disabled
  Datasets es;        // energy saving enabled, one realized run per day
};

SyntheticScenario generate_scenario(const ScenarioSpec& spec);

/// Writes unbiased/ and es/ dataset directories below `dir`.
void write_scenario(const SyntheticScenario& scenario, const std::string& dir);

// ---------------------------------------------------------------------------
// KPI tables and metrics

struct KpiKey {
  std::string kpi;
  std::int32_t entity = 0;  // cell id, or radio unit id for energy
  int hour = 1;

  auto operator<=>(const KpiKey&) const = default;
};

using KpiTable = std::map<KpiKey, double>;

inline const char* const kKpiShutdown = "shutdown_min";
inline const char* const kKpiLoad = "dl_load";
inline const char* const kKpiEnergy = "energy_wh";
inline const char* const kKpiRate = "rate_avg_mbps";

std::string serialize_kpi_table(const KpiTable& table);
KpiTable parse_kpi_table(std::string_view text, const std::string& name);

struct ErrorMetrics {
  double mae = 0.0;
  double mape = 0.0;           // percent, over non-zero truths
  std::size_t skipped = 0;     // zero-truth entries left out of the MAPE
  bool mape_defined = false;   // false when every truth is zero
};

ErrorMetrics mae_mape(std::span<const double> pred, std::span<const double> truth);

struct KpiComparison {
  std::string kpi;
  std::size_t points = 0;
  ErrorMetrics abm;
  ErrorMetrics benchmark;
  std::optional<double> gain_mae;   // (benchmark - abm) / benchmark
  std::optional<double> gain_mape;
};

struct ProfilePoint {
  std::string kpi;
  int hour = 1;
  double truth = 0.0;
  double abm = 0.0;
  double benchmark = 0.0;
};

struct EvalReport {
  std::vector<KpiComparison> kpis;
  std::vector<ProfilePoint> profiles;  // per-hour means over entities

  const KpiComparison& at(const std::string& kpi) const;
};

/// Throws KeyMismatch unless all three tables hold the same keys.
EvalReport compare(const KpiTable& abm, const KpiTable& benchmark, const KpiTable& truth);

std::string serialize_report(const EvalReport& report);    // JSON summary
std::string serialize_profiles(const EvalReport& report);  // CSV series

// ---------------------------------------------------------------------------
// KPI pipelines

struct KpiModels {
  const EnergyModel* energy = nullptr;
  const RateModel* rate = nullptr;
};

/// Per-hour KPIs from ABM outputs: means over runs. Rates average over the
/// runs in which the cell is active and are 0 when it never is.
KpiTable abm_kpis(const DayOutputs& day, const NetworkConfig& network, const KpiModels& models,
                  std::uint64_t seed);

KpiTable benchmark_kpis(const BenchmarkOutputs& bench, const NetworkConfig& network, const KpiModels& models);

/// Reference "measured" KPIs: a simulation with the true traffic and
/// 10 x cfg.runs runs, evaluated with the ground-truth laws.
KpiTable ground_truth_replay(const SyntheticScenario& scenario, const NetworkConfig& network, const AbmConfig& cfg);

}  // namespace esim
