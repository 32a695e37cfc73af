#pragma once

#include <array>
#include <map>
#include <span>
#include <vector>

#include "esim/datamodel.hpp"

namespace esim {

/// Entry rule of a capacity cell: all three loads strictly below the entry
/// thresholds. PRB sums combine the capacity cell and its coverage cell.
bool check_shutdown_entry(double ues, double dl_capacity, double dl_coverage, double ul_capacity,
                          double ul_coverage, const ShutdownThresholds& th);

/// Leaving rule evaluated on the paired coverage cell: any counter strictly
/// above its threshold.
bool check_wakeup(double coverage_ues, double coverage_dl, double coverage_ul, const ShutdownThresholds& th);

/// A4 entering condition of serving cell parameters `a4` for neighbour n.
bool a4_qualifies(double rsrp_dbm, const A4Params& a4, CellId neighbor);

struct HandoverTarget {
  CellId cell{};
  double probability = 0.0;

  bool operator==(const HandoverTarget&) const = default;
};

/// Transfer probabilities of one hour. Each capacity cell maps to its
/// candidate targets (cells on the frequency of its coverage cell) sorted by
/// id; probabilities are all zero or sum to one.
struct HandoverModel {
  std::map<CellId, std::vector<HandoverTarget>> targets;

  const std::vector<HandoverTarget>& of(CellId capacity) const;  // throws BadReference
  static bool feasible(std::span<const HandoverTarget> targets);

  bool operator==(const HandoverModel&) const = default;
};

/// Candidate set of a capacity cell: every other cell on its coverage cell's
/// frequency, sorted by id.
std::vector<CellId> handover_candidates(const NetworkConfig& network, CellId capacity);

/// Empirical model from the reports whose hour equals `hour` (reports of
/// other hours are ignored). Pass hour = 0 to pool all hours.
HandoverModel build_handover_model(const NetworkConfig& network, std::span<const MeasurementReport> reports,
                                   int hour);

using HandoverTable = std::array<HandoverModel, kHoursPerDay>;

/// One model per hour. A capacity cell without any report in an hour takes its
/// pooled all-hours distribution for that hour.
HandoverTable build_handover_table(const NetworkConfig& network, std::span<const MeasurementReport> reports);

}  // namespace esim
