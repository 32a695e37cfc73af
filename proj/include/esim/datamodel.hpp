#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "esim/ids.hpp"
#include "esim/random.hpp"

namespace esim {

inline constexpr int kRateBinCount = 15;
inline constexpr int kDefaultMaxCarriers = 6;
inline constexpr double kDefaultSigmaFloor = 1e-6;

// ---------------------------------------------------------------------------
// Engineering parameters

struct Cell {
  CellId id{};
  RadioId radio_unit{};
  double frequency_mhz = 0.0;
  double bandwidth_mhz = 0.0;
  double max_tx_power_dbm = 0.0;
  int n_dl_prb = 0;
  int n_ul_prb = 0;

  bool operator==(const Cell&) const = default;
};

struct RadioUnit {
  RadioId id{};
  std::string radio_type;
  int n_trx = 0;
  std::string carrier_tx_mode;
  std::vector<CellId> cell_ids;

  bool operator==(const RadioUnit&) const = default;
};

/// A4 inter-frequency handover parameters configured in a serving cell.
/// Offsets are per neighbour; a neighbour without an entry has offset 0.
struct A4Params {
  double threshold_dbm = 0.0;
  double hysteresis_db = 0.0;
  std::map<CellId, double> freq_offset_db;
  std::map<CellId, double> cell_offset_db;

  double freq_offset(CellId neighbor) const;
  double cell_offset(CellId neighbor) const;

  bool operator==(const A4Params&) const = default;
};

/// Carrier shutdown entry (chi) and leaving (psi) thresholds of a capacity
/// cell. PRB thresholds refer to the capacity cell together with its paired
/// coverage cell for entry, and to the coverage cell alone for leaving.
struct ShutdownThresholds {
  double entry_ue = 0.0;
  double entry_dl = 0.0;
  double entry_ul = 0.0;
  double leave_ue = 0.0;
  double leave_dl = 0.0;
  double leave_ul = 0.0;

  bool operator==(const ShutdownThresholds&) const = default;
};

struct NetworkConfig {
  std::vector<RadioUnit> radio_units;
  std::vector<Cell> cells;
  std::vector<CellId> capacity_cells;
  std::vector<CellId> coverage_cells;
  std::map<CellId, CellId> pairing;
  std::map<CellId, A4Params> mobility;
  std::map<CellId, ShutdownThresholds> energy_saving;
  int max_carriers_per_radio = kDefaultMaxCarriers;

  const Cell* find_cell(CellId id) const;
  const Cell& cell(CellId id) const;  // throws BadReference
  const RadioUnit& radio_unit(RadioId id) const;
  bool is_capacity(CellId id) const;
  CellId paired_coverage(CellId capacity) const;

  /// Checks every structural invariant; throws BadReference or InvalidConfig.
  void validate() const;

  bool operator==(const NetworkConfig&) const = default;
};

// ---------------------------------------------------------------------------
// Cell-level KPIs and measurement reports

struct CellKpiRecord {
  CellId cell{};
  int day = 0;
  int hour = 1;  // 1..24
  bool working_day = true;
  double rrc_ues = 0.0;
  double dl_prbs = 0.0;
  double ul_prbs = 0.0;
  double v_dl = 0.0;        // bits
  double v_dl_minus = 0.0;  // bits
  double t_dl = 0.0;        // seconds
  double t_dl_minus = 0.0;  // seconds
  double v_ul = 0.0;
  double t_ul = 0.0;
  std::array<double, kRateBinCount> rate_bins{};
  double cs_minutes = 0.0;

  bool operator==(const CellKpiRecord&) const = default;
};

struct RadioEnergyRecord {
  RadioId radio_unit{};
  int day = 0;
  int hour = 1;
  double energy_wh = 0.0;

  bool operator==(const RadioEnergyRecord&) const = default;
};

struct MeasurementReport {
  long timestamp = 0;  // seconds since the start of day 0
  long ue_id = 0;
  CellId serving_cell{};
  std::map<CellId, double> rsrp_dbm;  // serving cell and reported neighbours

  /// Hour of day, 1..24, derived from the timestamp.
  int hour() const;

  bool operator==(const MeasurementReport&) const = default;
};

// ---------------------------------------------------------------------------
// Dataset files

struct DatasetPaths {
  std::string engineering;
  std::string kpi;
  std::string mr;
  std::string energy;  // optional: empty or missing file yields no records

  /// The conventional file names inside one dataset directory.
  static DatasetPaths in_directory(const std::string& dir);
};

struct Datasets {
  NetworkConfig network;
  std::vector<CellKpiRecord> kpis;
  std::vector<RadioEnergyRecord> energy;
  std::vector<MeasurementReport> reports;

  bool operator==(const Datasets&) const = default;
};

struct ParseOptions {
  int max_carriers_per_radio = kDefaultMaxCarriers;
};

Datasets parse_datasets(const DatasetPaths& paths, const ParseOptions& options = {});

// Parsers over already-loaded text; parse_datasets is built on these.
NetworkConfig parse_engineering(std::string_view text, const std::string& name,
                                const ParseOptions& options = {});
std::vector<CellKpiRecord> parse_kpis(std::string_view text, const std::string& name,
                                      const NetworkConfig& network);
std::vector<RadioEnergyRecord> parse_energy(std::string_view text, const std::string& name,
                                            const NetworkConfig& network);
std::vector<MeasurementReport> parse_reports(std::string_view text, const std::string& name,
                                             const NetworkConfig& network);

std::string serialize_engineering(const NetworkConfig& network);
std::string serialize_kpis(std::span<const CellKpiRecord> kpis);
std::string serialize_energy(std::span<const RadioEnergyRecord> energy);
std::string serialize_reports(std::span<const MeasurementReport> reports);

/// Writes the four files named by DatasetPaths::in_directory(dir).
void write_datasets(const Datasets& data, const std::string& dir);

// ---------------------------------------------------------------------------
// Traffic model

struct HourlyGaussian {
  double mean = 0.0;
  double stddev = kDefaultSigmaFloor;

  bool operator==(const HourlyGaussian&) const = default;
};

struct HourlyTraffic {
  HourlyGaussian ues;
  HourlyGaussian dl_prbs;
  HourlyGaussian ul_prbs;

  bool operator==(const HourlyTraffic&) const = default;
};

/// Unbiased per-cell, per-hour traffic distributions.
class TrafficModel {
 public:
  using Day = std::array<HourlyTraffic, kHoursPerDay>;

  void set(CellId cell, int hour, const HourlyTraffic& traffic);
  const HourlyTraffic& at(CellId cell, int hour) const;  // throws NoSamples
  bool contains(CellId cell) const { return cells_.count(cell) != 0; }
  const std::map<CellId, Day>& cells() const { return cells_; }

  bool operator==(const TrafficModel&) const = default;

 private:
  std::map<CellId, Day> cells_;
};

/// Fits mean and (n-1) sample standard deviation per (cell, hour) over the
/// working-day records; the deviation is floored at sigma_floor. Every cell
/// that appears in the records must have samples for all 24 hours.
TrafficModel fit_traffic_model(std::span<const CellKpiRecord> kpis,
                               double sigma_floor = kDefaultSigmaFloor);

/// UE count and PRB usage of one cell.
struct Load {
  double ues = 0.0;
  double dl_prbs = 0.0;
  double ul_prbs = 0.0;

  bool operator==(const Load&) const = default;
};

/// One random realization of every cell's inputs for an hour, ordered like
/// network.cells. UE counts are rounded to whole UEs; PRBs are clamped to the
/// cell's capacity.
std::vector<Load> draw_inputs(const TrafficModel& traffic, const NetworkConfig& network, int hour,
                              Rng& rng);

}  // namespace esim
