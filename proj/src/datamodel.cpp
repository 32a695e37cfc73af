#include "esim/datamodel.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "esim/csv.hpp"
#include "esim/error.hpp"

namespace esim {

namespace fs = std::filesystem;
using csv::format_number;

// ---------------------------------------------------------------------------
// Engineering parameters

double A4Params::freq_offset(CellId neighbor) const {
  const auto it = freq_offset_db.find(neighbor);
  return it == freq_offset_db.end() ? 0.0 : it->second;
}

double A4Params::cell_offset(CellId neighbor) const {
  const auto it = cell_offset_db.find(neighbor);
  return it == cell_offset_db.end() ? 0.0 : it->second;
}

const Cell* NetworkConfig::find_cell(CellId id) const {
  const auto it = std::find_if(cells.begin(), cells.end(), [id](const Cell& c) { return c.id == id; });
  return it == cells.end() ? nullptr : &*it;
}

const Cell& NetworkConfig::cell(CellId id) const {
  if (const auto* c = find_cell(id)) return *c;
  throw BadReference("unknown cell " + to_string(id));
}

const RadioUnit& NetworkConfig::radio_unit(RadioId id) const {
  const auto it = std::find_if(radio_units.begin(), radio_units.end(),
                               [id](const RadioUnit& r) { return r.id == id; });
  if (it == radio_units.end()) throw BadReference("unknown radio unit " + to_string(id));
  return *it;
}

bool NetworkConfig::is_capacity(CellId id) const {
  return std::find(capacity_cells.begin(), capacity_cells.end(), id) != capacity_cells.end();
}

CellId NetworkConfig::paired_coverage(CellId capacity) const {
  const auto it = pairing.find(capacity);
  if (it == pairing.end()) throw BadReference("capacity cell " + to_string(capacity) + " has no pairing");
  return it->second;
}

void NetworkConfig::validate() const {
  std::set<CellId> ids;
  for (const auto& c : cells) {
    if (!ids.insert(c.id).second) throw InvalidConfig("duplicate cell id " + to_string(c.id));
    if (!(c.bandwidth_mhz > 0.0)) throw InvalidConfig("cell " + to_string(c.id) + ": bandwidth must be > 0");
    if (c.n_dl_prb <= 0 || c.n_ul_prb <= 0) {
      throw InvalidConfig("cell " + to_string(c.id) + ": PRB counts must be > 0");
    }
  }
  const auto require_cell = [&](CellId id, const char* what) {
    if (ids.count(id) == 0) throw BadReference(fmt::format("{} references unknown cell {}", what, raw(id)));
  };

  std::set<CellId> capacity(capacity_cells.begin(), capacity_cells.end());
  std::set<CellId> coverage(coverage_cells.begin(), coverage_cells.end());
  for (auto id : capacity) {
    require_cell(id, "capacity set");
    if (coverage.count(id)) throw InvalidConfig("cell " + to_string(id) + " is both capacity and coverage");
  }
  for (auto id : coverage) require_cell(id, "coverage set");
  if (capacity.size() + coverage.size() != ids.size()) {
    throw InvalidConfig("every cell must be either a capacity or a coverage cell");
  }

  for (const auto& [cap, cov] : pairing) {
    require_cell(cap, "pairing");
    require_cell(cov, "pairing");
    if (!capacity.count(cap)) throw InvalidConfig("pairing source " + to_string(cap) + " is not a capacity cell");
    if (!coverage.count(cov)) throw BadReference("pairing target " + to_string(cov) + " is not a coverage cell");
  }
  for (auto id : capacity) {
    if (!pairing.count(id)) throw BadReference("capacity cell " + to_string(id) + " has no paired coverage cell");
    if (!energy_saving.count(id)) {
      throw InvalidConfig("capacity cell " + to_string(id) + " has no shutdown thresholds");
    }
  }
  for (const auto& [id, a4] : mobility) {
    require_cell(id, "mobility parameters");
    if (a4.hysteresis_db < 0.0) throw InvalidConfig("cell " + to_string(id) + ": A4 hysteresis must be >= 0");
  }
  for (const auto& [id, th] : energy_saving) {
    require_cell(id, "energy saving parameters");
    for (double v : {th.entry_ue, th.entry_dl, th.entry_ul, th.leave_ue, th.leave_dl, th.leave_ul}) {
      if (!(v >= 0.0)) throw InvalidConfig("cell " + to_string(id) + ": thresholds must be >= 0");
    }
  }

  std::set<RadioId> radios;
  for (const auto& ru : radio_units) {
    if (!radios.insert(ru.id).second) throw InvalidConfig("duplicate radio unit " + to_string(ru.id));
    if (ru.cell_ids.empty() || static_cast<int>(ru.cell_ids.size()) > max_carriers_per_radio) {
      throw InvalidConfig(fmt::format("radio unit {} operates {} carriers, allowed 1..{}", raw(ru.id),
                                      ru.cell_ids.size(), max_carriers_per_radio));
    }
    for (auto id : ru.cell_ids) {
      require_cell(id, "radio unit");
      if (cell(id).radio_unit != ru.id) {
        throw InvalidConfig("cell " + to_string(id) + " listed under the wrong radio unit");
      }
    }
  }
  for (const auto& c : cells) {
    if (!radios.count(c.radio_unit)) {
      throw BadReference(fmt::format("cell {} references unknown radio unit {}", raw(c.id), raw(c.radio_unit)));
    }
  }
}

// ---------------------------------------------------------------------------
// Measurement reports

int MeasurementReport::hour() const {
  const long seconds_of_day = ((timestamp % 86400) + 86400) % 86400;
  return static_cast<int>(seconds_of_day / 3600) + 1;
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::map<CellId, double> parse_cell_values(const csv::Table::Row& row, std::string_view column,
                                           char pair_sep) {
  std::map<CellId, double> out;
  const auto text = row.opt_str(column);
  if (!text) return out;
  for (auto item : csv::split(*text, pair_sep)) {
    if (item.empty()) continue;
    const auto colon = item.find(':');
    if (colon == std::string_view::npos) row.fail(fmt::format("column '{}': expected cellid:value", column));
    const auto id = csv::to_long(item.substr(0, colon));
    const auto value = csv::to_double(item.substr(colon + 1));
    if (!id || !value) row.fail(fmt::format("column '{}': bad entry '{}'", column, item));
    out[CellId(static_cast<std::int32_t>(*id))] = *value;
  }
  return out;
}

std::string format_cell_values(const std::map<CellId, double>& values) {
  std::string out;
  for (const auto& [id, v] : values) {
    if (!out.empty()) out += ';';
    out += fmt::format("{}:{}", raw(id), format_number(v));
  }
  return out;
}

int parse_hour(const csv::Table::Row& row) {
  const long hour = row.integer("hour");
  if (hour < 1 || hour > kHoursPerDay) row.fail(fmt::format("hour {} outside 1..24", hour));
  return static_cast<int>(hour);
}

}  // namespace

NetworkConfig parse_engineering(std::string_view text, const std::string& name, const ParseOptions& options) {
  const auto table = csv::Table::parse(text, name);
  table.require({"cell_id", "radio_unit_id", "radio_type", "n_trx", "carrier_tx_mode", "frequency_mhz",
                 "bandwidth_mhz", "max_tx_power_dbm", "n_dl_prb", "n_ul_prb", "role", "paired_cell",
                 "a4_threshold_dbm", "a4_hysteresis_db", "entry_ue", "entry_dl", "entry_ul", "leave_ue",
                 "leave_dl", "leave_ul"});

  NetworkConfig net;
  net.max_carriers_per_radio = options.max_carriers_per_radio;
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto row = table.row(i);
    Cell cell;
    cell.id = CellId(static_cast<std::int32_t>(row.integer("cell_id")));
    cell.radio_unit = RadioId(static_cast<std::int32_t>(row.integer("radio_unit_id")));
    cell.frequency_mhz = row.num("frequency_mhz");
    cell.bandwidth_mhz = row.num("bandwidth_mhz");
    cell.max_tx_power_dbm = row.num("max_tx_power_dbm");
    cell.n_dl_prb = static_cast<int>(row.integer("n_dl_prb"));
    cell.n_ul_prb = static_cast<int>(row.integer("n_ul_prb"));
    if (!(cell.bandwidth_mhz > 0.0)) row.fail("bandwidth_mhz must be > 0");
    if (cell.n_dl_prb <= 0 || cell.n_ul_prb <= 0) row.fail("PRB counts must be > 0");
    if (net.find_cell(cell.id)) row.fail("duplicate cell_id " + to_string(cell.id));

    const auto& radio_type = row.str("radio_type");
    const auto n_trx = static_cast<int>(row.integer("n_trx"));
    const auto& tx_mode = row.str("carrier_tx_mode");
    auto ru = std::find_if(net.radio_units.begin(), net.radio_units.end(),
                           [&](const RadioUnit& r) { return r.id == cell.radio_unit; });
    if (ru == net.radio_units.end()) {
      net.radio_units.push_back(RadioUnit{cell.radio_unit, radio_type, n_trx, tx_mode, {}});
      ru = std::prev(net.radio_units.end());
    } else if (ru->radio_type != radio_type || ru->n_trx != n_trx || ru->carrier_tx_mode != tx_mode) {
      row.fail("radio unit " + to_string(cell.radio_unit) + " attributes differ between its cells");
    }
    ru->cell_ids.push_back(cell.id);

    const auto& role = row.str("role");
    if (role == "capacity") {
      net.capacity_cells.push_back(cell.id);
      const auto paired = row.opt_integer("paired_cell");
      if (!paired) row.fail("capacity cell without paired_cell");
      net.pairing[cell.id] = CellId(static_cast<std::int32_t>(*paired));
      ShutdownThresholds th;
      th.entry_ue = row.num("entry_ue");
      th.entry_dl = row.num("entry_dl");
      th.entry_ul = row.num("entry_ul");
      th.leave_ue = row.num("leave_ue");
      th.leave_dl = row.num("leave_dl");
      th.leave_ul = row.num("leave_ul");
      for (double v : {th.entry_ue, th.entry_dl, th.entry_ul, th.leave_ue, th.leave_dl, th.leave_ul}) {
        if (!(v >= 0.0)) row.fail("shutdown thresholds must be >= 0");
      }
      net.energy_saving[cell.id] = th;
    } else if (role == "coverage") {
      net.coverage_cells.push_back(cell.id);
    } else {
      row.fail("role must be 'capacity' or 'coverage', found '" + role + "'");
    }

    const auto threshold = row.opt_num("a4_threshold_dbm");
    const auto hysteresis = row.opt_num("a4_hysteresis_db");
    if (threshold || hysteresis) {
      if (!threshold || !hysteresis) row.fail("a4_threshold_dbm and a4_hysteresis_db go together");
      if (*hysteresis < 0.0) row.fail("a4_hysteresis_db must be >= 0");
      A4Params a4;
      a4.threshold_dbm = *threshold;
      a4.hysteresis_db = *hysteresis;
      a4.freq_offset_db = parse_cell_values(row, "a4_freq_offsets", ';');
      a4.cell_offset_db = parse_cell_values(row, "a4_cell_offsets", ';');
      net.mobility[cell.id] = std::move(a4);
    } else if (role == "capacity") {
      row.fail("capacity cell without A4 parameters");
    }
    net.cells.push_back(cell);
  }
  net.validate();
  return net;
}

std::vector<CellKpiRecord> parse_kpis(std::string_view text, const std::string& name, const NetworkConfig& network) {
  const auto table = csv::Table::parse(text, name);
  table.require({"cell_id", "day", "hour", "rrc_ues", "dl_prbs", "ul_prbs", "v_dl", "v_dl_minus", "t_dl_minus",
                 "cs_minutes"});
  std::vector<std::string> bin_columns;
  for (int g = 1; g <= kRateBinCount; ++g) bin_columns.push_back(fmt::format("rn_{}", g));
  for (const auto& column : bin_columns) {
    if (!table.has_column(column)) throw MissingColumn(fmt::format("{}: missing column '{}'", name, column));
  }

  std::vector<CellKpiRecord> out;
  out.reserve(table.size());
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto row = table.row(i);
    CellKpiRecord k;
    k.cell = CellId(static_cast<std::int32_t>(row.integer("cell_id")));
    if (!network.find_cell(k.cell)) throw BadReference(fmt::format("{}: row {}: unknown cell {}", name, i + 1, raw(k.cell)));
    k.day = static_cast<int>(row.integer("day"));
    k.hour = parse_hour(row);
    k.working_day = row.opt_integer("working_day").value_or(1) != 0;
    k.rrc_ues = row.num("rrc_ues");
    k.dl_prbs = row.num("dl_prbs");
    k.ul_prbs = row.num("ul_prbs");
    k.v_dl = row.num("v_dl");
    k.v_dl_minus = row.num("v_dl_minus");
    k.t_dl = row.opt_num("t_dl").value_or(0.0);
    k.t_dl_minus = row.num("t_dl_minus");
    k.v_ul = row.opt_num("v_ul").value_or(0.0);
    k.t_ul = row.opt_num("t_ul").value_or(0.0);
    for (int g = 0; g < kRateBinCount; ++g) k.rate_bins[g] = row.num(bin_columns[g]);
    k.cs_minutes = row.num("cs_minutes");

    if (k.v_dl < k.v_dl_minus) row.fail("v_dl must be >= v_dl_minus");
    if (!(k.cs_minutes >= 0.0 && k.cs_minutes <= 60.0)) row.fail("cs_minutes outside [0, 60]");
    for (double v : {k.rrc_ues, k.dl_prbs, k.ul_prbs, k.v_dl, k.v_dl_minus, k.t_dl, k.t_dl_minus, k.v_ul, k.t_ul}) {
      if (!(v >= 0.0)) row.fail("counters must be >= 0");
    }
    for (double v : k.rate_bins) {
      if (!(v >= 0.0)) row.fail("rate bin counters must be >= 0");
    }
    out.push_back(k);
  }
  return out;
}

std::vector<RadioEnergyRecord> parse_energy(std::string_view text, const std::string& name,
                                            const NetworkConfig& network) {
  const auto table = csv::Table::parse(text, name);
  table.require({"radio_unit_id", "day", "hour", "energy_wh"});
  std::vector<RadioEnergyRecord> out;
  out.reserve(table.size());
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto row = table.row(i);
    RadioEnergyRecord e;
    e.radio_unit = RadioId(static_cast<std::int32_t>(row.integer("radio_unit_id")));
    const bool known = std::any_of(network.radio_units.begin(), network.radio_units.end(),
                                   [&](const RadioUnit& r) { return r.id == e.radio_unit; });
    if (!known) throw BadReference(fmt::format("{}: row {}: unknown radio unit {}", name, i + 1, raw(e.radio_unit)));
    e.day = static_cast<int>(row.integer("day"));
    e.hour = parse_hour(row);
    e.energy_wh = row.num("energy_wh");
    if (!(e.energy_wh >= 0.0)) row.fail("energy_wh must be >= 0");
    out.push_back(e);
  }
  return out;
}

std::vector<MeasurementReport> parse_reports(std::string_view text, const std::string& name,
                                             const NetworkConfig& network) {
  const auto table = csv::Table::parse(text, name);
  table.require({"timestamp", "ue_id", "serving_cell", "rsrp"});
  std::vector<MeasurementReport> out;
  out.reserve(table.size());
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto row = table.row(i);
    MeasurementReport mr;
    mr.timestamp = row.integer("timestamp");
    mr.ue_id = row.integer("ue_id");
    mr.serving_cell = CellId(static_cast<std::int32_t>(row.integer("serving_cell")));
    if (!network.find_cell(mr.serving_cell)) {
      throw BadReference(fmt::format("{}: row {}: unknown serving cell {}", name, i + 1, raw(mr.serving_cell)));
    }
    mr.rsrp_dbm = parse_cell_values(row, "rsrp", ';');
    if (!mr.rsrp_dbm.count(mr.serving_cell)) row.fail("serving cell missing from rsrp list");
    out.push_back(std::move(mr));
  }
  return out;
}

DatasetPaths DatasetPaths::in_directory(const std::string& dir) {
  const fs::path base(dir);
  return DatasetPaths{(base / "engineering.csv").string(), (base / "kpi.csv").string(),
                      (base / "mr.csv").string(), (base / "energy.csv").string()};
}

Datasets parse_datasets(const DatasetPaths& paths, const ParseOptions& options) {
  Datasets data;
  data.network = parse_engineering(slurp(paths.engineering), paths.engineering, options);
  data.kpis = parse_kpis(slurp(paths.kpi), paths.kpi, data.network);
  data.reports = parse_reports(slurp(paths.mr), paths.mr, data.network);
  if (!paths.energy.empty() && fs::exists(paths.energy)) {
    data.energy = parse_energy(slurp(paths.energy), paths.energy, data.network);
  }
  return data;
}

// ---------------------------------------------------------------------------
// Serialization

std::string serialize_engineering(const NetworkConfig& network) {
  std::string out =
      "cell_id,radio_unit_id,radio_type,n_trx,carrier_tx_mode,frequency_mhz,bandwidth_mhz,max_tx_power_dbm,"
      "n_dl_prb,n_ul_prb,role,paired_cell,a4_threshold_dbm,a4_hysteresis_db,a4_freq_offsets,a4_cell_offsets,"
      "entry_ue,entry_dl,entry_ul,leave_ue,leave_dl,leave_ul\n";
  for (const auto& c : network.cells) {
    const auto& ru = network.radio_unit(c.radio_unit);
    const bool capacity = network.is_capacity(c.id);
    std::string paired;
    std::string thresholds = ",,,,,";
    if (capacity) {
      paired = std::to_string(raw(network.paired_coverage(c.id)));
      const auto& th = network.energy_saving.at(c.id);
      thresholds = fmt::format("{},{},{},{},{},{}", format_number(th.entry_ue), format_number(th.entry_dl),
                               format_number(th.entry_ul), format_number(th.leave_ue), format_number(th.leave_dl),
                               format_number(th.leave_ul));
    }
    std::string a4 = ",,,";
    if (const auto it = network.mobility.find(c.id); it != network.mobility.end()) {
      a4 = fmt::format("{},{},{},{}", format_number(it->second.threshold_dbm), format_number(it->second.hysteresis_db),
                       format_cell_values(it->second.freq_offset_db), format_cell_values(it->second.cell_offset_db));
    }
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", raw(c.id), raw(c.radio_unit), ru.radio_type,
                       ru.n_trx, ru.carrier_tx_mode, format_number(c.frequency_mhz), format_number(c.bandwidth_mhz),
                       format_number(c.max_tx_power_dbm), c.n_dl_prb, c.n_ul_prb, capacity ? "capacity" : "coverage",
                       paired, a4, thresholds);
  }
  return out;
}

std::string serialize_kpis(std::span<const CellKpiRecord> kpis) {
  std::string out =
      "cell_id,day,hour,working_day,rrc_ues,dl_prbs,ul_prbs,v_dl,v_dl_minus,t_dl,t_dl_minus,v_ul,t_ul";
  for (int g = 1; g <= kRateBinCount; ++g) out += fmt::format(",rn_{}", g);
  out += ",cs_minutes\n";
  for (const auto& k : kpis) {
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{}", raw(k.cell), k.day, k.hour, k.working_day ? 1 : 0,
                       format_number(k.rrc_ues), format_number(k.dl_prbs), format_number(k.ul_prbs),
                       format_number(k.v_dl), format_number(k.v_dl_minus), format_number(k.t_dl),
                       format_number(k.t_dl_minus), format_number(k.v_ul), format_number(k.t_ul));
    for (double v : k.rate_bins) out += "," + format_number(v);
    out += "," + format_number(k.cs_minutes) + "\n";
  }
  return out;
}

std::string serialize_energy(std::span<const RadioEnergyRecord> energy) {
  std::string out = "radio_unit_id,day,hour,energy_wh\n";
  for (const auto& e : energy) {
    out += fmt::format("{},{},{},{}\n", raw(e.radio_unit), e.day, e.hour, format_number(e.energy_wh));
  }
  return out;
}

std::string serialize_reports(std::span<const MeasurementReport> reports) {
  std::string out = "timestamp,ue_id,serving_cell,rsrp\n";
  for (const auto& mr : reports) {
    out += fmt::format("{},{},{},{}\n", mr.timestamp, mr.ue_id, raw(mr.serving_cell), format_cell_values(mr.rsrp_dbm));
  }
  return out;
}

void write_datasets(const Datasets& data, const std::string& dir) {
  fs::create_directories(dir);
  const auto paths = DatasetPaths::in_directory(dir);
  const auto write = [](const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path);
    out << content;
  };
  write(paths.engineering, serialize_engineering(data.network));
  write(paths.kpi, serialize_kpis(data.kpis));
  write(paths.mr, serialize_reports(data.reports));
  write(paths.energy, serialize_energy(data.energy));
}

// ---------------------------------------------------------------------------
// Traffic model

void TrafficModel::set(CellId cell, int hour, const HourlyTraffic& traffic) {
  if (hour < 1 || hour > kHoursPerDay) throw InvalidConfig(fmt::format("hour {} outside 1..24", hour));
  cells_[cell][hour - 1] = traffic;
}

const HourlyTraffic& TrafficModel::at(CellId cell, int hour) const {
  const auto it = cells_.find(cell);
  if (it == cells_.end() || hour < 1 || hour > kHoursPerDay) {
    throw NoSamples(fmt::format("no traffic distribution for cell {} hour {}", raw(cell), hour));
  }
  return it->second[hour - 1];
}

namespace {

HourlyGaussian fit_gaussian(const std::vector<double>& samples, double sigma_floor) {
  const double n = static_cast<double>(samples.size());
  double sum = 0.0;
  for (double v : samples) sum += v;
  const double mean = sum / n;
  double sd = 0.0;
  if (samples.size() > 1) {
    double ss = 0.0;
    for (double v : samples) ss += (v - mean) * (v - mean);
    sd = std::sqrt(ss / (n - 1.0));
  }
  return HourlyGaussian{mean, std::max(sd, sigma_floor)};
}

}  // namespace

TrafficModel fit_traffic_model(std::span<const CellKpiRecord> kpis, double sigma_floor) {
  struct Samples {
    std::vector<double> ues, dl, ul;
  };
  std::map<CellId, std::array<Samples, kHoursPerDay>> grouped;
  std::set<CellId> seen;
  for (const auto& k : kpis) {
    seen.insert(k.cell);
    if (!k.working_day) continue;
    auto& s = grouped[k.cell][k.hour - 1];
    s.ues.push_back(k.rrc_ues);
    s.dl.push_back(k.dl_prbs);
    s.ul.push_back(k.ul_prbs);
  }

  TrafficModel model;
  for (auto cell : seen) {
    const auto it = grouped.find(cell);
    for (int h = 1; h <= kHoursPerDay; ++h) {
      if (it == grouped.end() || it->second[h - 1].ues.empty()) {
        throw NoSamples(fmt::format("no working-day samples for cell {} hour {}", raw(cell), h));
      }
      const auto& s = it->second[h - 1];
      model.set(cell, h,
                HourlyTraffic{fit_gaussian(s.ues, sigma_floor), fit_gaussian(s.dl, sigma_floor),
                              fit_gaussian(s.ul, sigma_floor)});
    }
  }
  return model;
}

std::vector<Load> draw_inputs(const TrafficModel& traffic, const NetworkConfig& network, int hour, Rng& rng) {
  std::vector<Load> out;
  out.reserve(network.cells.size());
  std::normal_distribution<double> normal(0.0, 1.0);
  for (const auto& cell : network.cells) {
    const auto& t = traffic.at(cell.id, hour);
    const double ues = t.ues.mean + t.ues.stddev * normal(rng);
    const double dl = t.dl_prbs.mean + t.dl_prbs.stddev * normal(rng);
    const double ul = t.ul_prbs.mean + t.ul_prbs.stddev * normal(rng);
    out.push_back(Load{std::max(0.0, std::round(ues)), std::clamp(dl, 0.0, static_cast<double>(cell.n_dl_prb)),
                       std::clamp(ul, 0.0, static_cast<double>(cell.n_ul_prb))});
  }
  return out;
}

}  // namespace esim
