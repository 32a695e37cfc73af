#include "esim/rules.hpp"

#include <algorithm>
#include <optional>
#include <set>

#include "esim/error.hpp"

namespace esim {

bool check_shutdown_entry(double ues, double dl_capacity, double dl_coverage, double ul_capacity,
                          double ul_coverage, const ShutdownThresholds& th) {
  return ues < th.entry_ue && dl_capacity + dl_coverage < th.entry_dl && ul_capacity + ul_coverage < th.entry_ul;
}

bool check_wakeup(double coverage_ues, double coverage_dl, double coverage_ul, const ShutdownThresholds& th) {
  return coverage_ues > th.leave_ue || coverage_dl > th.leave_dl || coverage_ul > th.leave_ul;
}

bool a4_qualifies(double rsrp_dbm, const A4Params& a4, CellId neighbor) {
  return rsrp_dbm + a4.freq_offset(neighbor) + a4.cell_offset(neighbor) - a4.hysteresis_db > a4.threshold_dbm;
}

const std::vector<HandoverTarget>& HandoverModel::of(CellId capacity) const {
  const auto it = targets.find(capacity);
  if (it == targets.end()) throw BadReference("no handover targets for cell " + to_string(capacity));
  return it->second;
}

bool HandoverModel::feasible(std::span<const HandoverTarget> targets) {
  return std::any_of(targets.begin(), targets.end(), [](const HandoverTarget& t) { return t.probability > 0.0; });
}

std::vector<CellId> handover_candidates(const NetworkConfig& network, CellId capacity) {
  const double frequency = network.cell(network.paired_coverage(capacity)).frequency_mhz;
  std::vector<CellId> out;
  for (const auto& cell : network.cells) {
    if (cell.id != capacity && cell.frequency_mhz == frequency) out.push_back(cell.id);
  }
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

// Target credited by one report, or nullopt when no candidate qualifies.
std::optional<CellId> attribute(const MeasurementReport& report, const std::vector<CellId>& candidates,
                                const A4Params& a4) {
  std::optional<CellId> best;
  double best_biased = 0.0;
  for (auto j : candidates) {  // ascending ids, so ties keep the lowest
    const auto it = report.rsrp_dbm.find(j);
    if (it == report.rsrp_dbm.end() || !a4_qualifies(it->second, a4, j)) continue;
    const double biased = it->second + a4.freq_offset(j) + a4.cell_offset(j);
    if (!best || biased > best_biased) {
      best = j;
      best_biased = biased;
    }
  }
  return best;
}

}  // namespace

HandoverModel build_handover_model(const NetworkConfig& network, std::span<const MeasurementReport> reports,
                                   int hour) {
  std::map<CellId, std::map<CellId, double>> counts;
  std::map<CellId, std::vector<CellId>> candidates;
  for (auto c : network.capacity_cells) {
    candidates[c] = handover_candidates(network, c);
    auto& row = counts[c];
    for (auto j : candidates[c]) row[j] = 0.0;
  }

  for (const auto& report : reports) {
    if (hour != 0 && report.hour() != hour) continue;
    const auto cand = candidates.find(report.serving_cell);
    if (cand == candidates.end()) continue;
    const auto mob = network.mobility.find(report.serving_cell);
    if (mob == network.mobility.end()) continue;
    if (const auto target = attribute(report, cand->second, mob->second)) counts[report.serving_cell][*target] += 1.0;
  }

  HandoverModel model;
  for (const auto& [c, row] : counts) {
    double total = 0.0;
    for (const auto& [j, n] : row) total += n;
    auto& out = model.targets[c];
    for (const auto& [j, n] : row) out.push_back(HandoverTarget{j, total > 0.0 ? n / total : 0.0});
  }
  return model;
}

HandoverTable build_handover_table(const NetworkConfig& network, std::span<const MeasurementReport> reports) {
  const auto pooled = build_handover_model(network, reports, 0);
  std::array<std::set<CellId>, kHoursPerDay> reported;
  for (const auto& r : reports) reported[r.hour() - 1].insert(r.serving_cell);

  HandoverTable table;
  for (int h = 1; h <= kHoursPerDay; ++h) {
    table[h - 1] = build_handover_model(network, reports, h);
    for (auto& [c, targets] : table[h - 1].targets) {
      if (!reported[h - 1].count(c)) targets = pooled.targets.at(c);
    }
  }
  return table;
}

}  // namespace esim
