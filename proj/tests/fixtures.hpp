#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "esim/abm.hpp"
#include "esim/datamodel.hpp"
#include "esim/harness.hpp"
#include "esim/rules.hpp"

namespace fixtures {

using namespace esim;

inline ShutdownThresholds loose_thresholds() {
  // Entry always holds for light cells; leaving never triggers.
  return ShutdownThresholds{1000, 1000, 1000, 1e9, 1e9, 1e9};
}

/// Coverage cells 1..coverage on 800 MHz, capacity cells coverage+1.. on
/// 1800 MHz paired round-robin. One radio unit per cell, 100/100 PRBs.
inline NetworkConfig micro_network(int capacity, int coverage, const ShutdownThresholds& th = loose_thresholds()) {
  NetworkConfig net;
  auto add = [&](int id, double freq) {
    const auto cell = CellId(id);
    const auto ru = RadioId(id);
    net.cells.push_back(Cell{cell, ru, freq, 10.0, 43.0, 100, 100});
    net.radio_units.push_back(RadioUnit{ru, "RT", 2, "MIMO2x2", {cell}});
  };
  for (int b = 1; b <= coverage; ++b) {
    add(b, 800.0);
    net.coverage_cells.push_back(CellId(b));
  }
  for (int i = 0; i < capacity; ++i) {
    const int id = coverage + 1 + i;
    add(id, 1800.0);
    net.capacity_cells.push_back(CellId(id));
    net.pairing[CellId(id)] = CellId(1 + i % coverage);
    net.energy_saving[CellId(id)] = th;
    net.mobility[CellId(id)] = A4Params{-100.0, 0.0, {}, {}};
  }
  net.validate();
  return net;
}

/// Same transfer probabilities in every hour.
inline HandoverTable constant_handover(const std::map<CellId, std::vector<HandoverTarget>>& targets) {
  HandoverTable table;
  for (auto& m : table) m.targets = targets;
  return table;
}

/// Every capacity cell hands all its UEs to its paired coverage cell.
inline HandoverTable to_paired(const NetworkConfig& net) {
  std::map<CellId, std::vector<HandoverTarget>> targets;
  for (auto c : net.capacity_cells) {
    std::vector<HandoverTarget> row;
    for (auto j : handover_candidates(net, c)) row.push_back({j, j == net.paired_coverage(c) ? 1.0 : 0.0});
    targets[c] = row;
  }
  return constant_handover(targets);
}

/// Degenerate traffic: every draw returns `loads[cell]` in every hour.
inline TrafficModel fixed_traffic(const std::map<CellId, Load>& loads) {
  TrafficModel tm;
  for (const auto& [id, l] : loads) {
    for (int h = 1; h <= kHoursPerDay; ++h) {
      tm.set(id, h, HourlyTraffic{{l.ues, 1e-9}, {l.dl_prbs, 1e-9}, {l.ul_prbs, 1e-9}});
    }
  }
  return tm;
}

inline std::vector<Load> loads_in_order(const NetworkConfig& net, const std::map<CellId, Load>& loads) {
  std::vector<Load> out;
  for (const auto& c : net.cells) out.push_back(loads.at(c.id));
  return out;
}

inline double sum_ues(const RunState& s) {
  double t = 0;
  for (const auto& l : s.load) t += l.ues;
  return t;
}
inline double sum_dl(const RunState& s) {
  double t = 0;
  for (const auto& l : s.load) t += l.dl_prbs;
  return t;
}
inline double sum_ul(const RunState& s) {
  double t = 0;
  for (const auto& l : s.load) t += l.ul_prbs;
  return t;
}

/// MAE of one KPI between two tables over the keys of `truth`.
inline double kpi_mae(const KpiTable& est, const KpiTable& truth, const std::string& kpi) {
  double sum = 0.0;
  int n = 0;
  for (const auto& [key, v] : truth) {
    if (key.kpi != kpi) continue;
    sum += std::abs(est.at(key) - v);
    ++n;
  }
  return n ? sum / n : 0.0;
}

}  // namespace fixtures

#include <filesystem>
#include <fstream>
#include <sstream>

namespace fixtures {

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

/// Relative paths of every regular file below `root`, sorted.
inline std::vector<std::string> files_below(const std::filesystem::path& root) {
  std::vector<std::string> out;
  for (const auto& e : std::filesystem::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out.push_back(std::filesystem::relative(e.path(), root).string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// True when both trees hold the same files with the same bytes.
inline bool same_tree(const std::filesystem::path& a, const std::filesystem::path& b) {
  const auto fa = files_below(a);
  if (fa.empty() || fa != files_below(b)) return false;
  for (const auto& f : fa) {
    if (slurp(a / f) != slurp(b / f)) return false;
  }
  return true;
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("esim_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

}  // namespace fixtures
