#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "esim/datamodel.hpp"
#include "esim/random.hpp"
#include "esim/rules.hpp"

namespace esim {

struct AbmConfig {
  int runs = 100;
  int max_steps = 400;
  std::uint64_t seed = 1;
  int threads = 0;  // 0: hardware concurrency

  void validate() const;  // throws InvalidConfig
};

/// Dense, index-based view of a network used by the simulation loop. Cell
/// indices follow NetworkConfig::cells; capacity slots follow capacity_cells.
struct Topology {
  struct Target {
    int cell = 0;
    double probability = 0.0;
  };

  std::vector<CellId> cells;
  std::vector<int> slot_cell;
  std::vector<int> slot_coverage;
  std::vector<ShutdownThresholds> thresholds;
  std::vector<int> cell_slot;  // -1 for coverage cells
  std::array<std::vector<std::vector<Target>>, kHoursPerDay> handover;  // [hour - 1][slot]

  std::size_t num_cells() const { return cells.size(); }
  std::size_t num_slots() const { return slot_cell.size(); }
  int cell_index(CellId id) const;  // throws BadReference
  int slot_of(CellId id) const;     // throws BadReference for non-capacity cells
  const std::vector<Target>& targets(int hour, int slot) const { return handover[hour - 1][slot]; }

 private:
  friend Topology compile(const NetworkConfig&, const HandoverTable&);
  std::map<CellId, int> index_;
};

Topology compile(const NetworkConfig& network, const HandoverTable& handover);

/// UEs and PRBs that originated in one cell and currently sit in another.
struct Holding {
  int origin = 0;
  Load load;

  bool operator==(const Holding&) const = default;
};

struct RunState {
  std::vector<std::uint8_t> active;           // per slot, 1 = active
  std::vector<Load> load;                     // per cell, predicted counters
  std::vector<double> cs_minutes;             // per cell
  std::vector<std::vector<Holding>> holdings;  // per cell, sorted by origin

  bool operator==(const RunState&) const = default;
};

enum class Action : std::uint8_t { shutdown, reactivate };

struct Move {
  int origin = 0;
  int from = 0;
  int to = 0;
  Load load;

  bool operator==(const Move&) const = default;
};

struct ReplayEntry {
  int step = 0;  // 0 for moves made while rolling into the hour
  Action action = Action::shutdown;
  int slot = 0;
  std::vector<Move> moves;

  bool operator==(const ReplayEntry&) const = default;
};

struct ReplayMemory {
  std::vector<Load> initial;  // drawn per-cell inputs at the start of the run
  std::vector<ReplayEntry> entries;

  bool operator==(const ReplayMemory&) const = default;
};

/// All capacity cells active, every cell holding its own drawn load.
RunState initial_state(const Topology& topo, std::span<const Load> drawn);

/// Applies a logged action. Live runs and replays share this path.
void apply(const Topology& topo, const ReplayEntry& entry, std::span<const Load> initial, RunState& state);

RunState replay(const Topology& topo, const ReplayMemory& memory);

struct EligibleSets {
  std::vector<int> shutdown;  // slots
  std::vector<int> wakeup;    // slots

  bool empty() const { return shutdown.empty() && wakeup.empty(); }
};

/// Shutdown candidates use the drawn inputs; wakeup candidates use the current
/// predicted counters of their coverage cell.
EligibleSets eligible_sets(const Topology& topo, const RunState& state, std::span<const Load> drawn);

/// Load distances of the candidates, shutdown set first, then wakeup set.
std::vector<double> load_distances(const Topology& topo, const EligibleSets& sets, const RunState& state,
                                   std::span<const Load> drawn);

/// Normalized distances; uniform when they sum to zero.
std::vector<double> agent_selection_pmf(std::span<const double> distances);

/// Index drawn from agent_selection_pmf(distances). Throws EmptyCandidateSet.
std::size_t select_index(std::span<const double> distances, Rng& rng);

/// Selected slot from the union of both sets.
int select_agent(const Topology& topo, const EligibleSets& sets, const RunState& state,
                 std::span<const Load> drawn, Rng& rng);

/// Draws a target for every UE of the shutting cell. Returns nullopt when no
/// active target has a positive probability.
std::optional<ReplayEntry> plan_shutdown(const Topology& topo, const RunState& state, int slot, int hour, Rng& rng);

/// Moves that return every UE that originated in the slot's cell. Throws
/// InconsistentReplay when a host holds less than it should.
ReplayEntry plan_reactivation(const Topology& topo, const RunState& state, int slot);

enum class TransferOutcome { done, aborted };

TransferOutcome transfer_users(const Topology& topo, int slot, int hour, int step, RunState& state,
                               ReplayMemory& memory, Rng& rng);
void reactivate(const Topology& topo, int slot, int step, RunState& state, ReplayMemory& memory);

struct RunResult {
  RunState state;
  ReplayMemory memory;
  int steps = 0;
  bool stable = false;
};

using StepObserver = std::function<void(int step, const RunState& state)>;

/// One Monte-Carlo run. The state first rolls from all-active into `start` by
/// shutting its inactive slots in ascending order without rule checks; a slot
/// whose transfer aborts stays active. The run then iterates up to max_steps.
/// `steps` is the step at which stability was detected, or max_steps when the
/// run was capped.
RunResult run_monte_carlo(const Topology& topo, std::span<const Load> drawn, std::span<const std::uint8_t> start,
                          int hour, int max_steps, Rng& rng, const StepObserver& observer = {});

struct HourlyOutputs {
  int hour = 1;
  // [cell][run]
  std::vector<std::vector<double>> ues;
  std::vector<std::vector<double>> dl_prbs;
  std::vector<std::vector<double>> ul_prbs;
  std::vector<std::vector<double>> cs_minutes;
  // [run]
  std::vector<std::vector<std::uint8_t>> configs;
  std::vector<int> steps;
  std::vector<std::uint8_t> stable;

  std::size_t runs() const { return steps.size(); }
  double mean_ues(std::size_t cell) const;
  double mean_dl(std::size_t cell) const;
  double mean_ul(std::size_t cell) const;
  double mean_cs(std::size_t cell) const;
};

struct DayOutputs {
  std::vector<CellId> cells;
  std::vector<HourlyOutputs> hours;
};

/// Starting configurations for `hour`: stable finals of the previous hour,
/// or all its finals when none was stable.
std::vector<std::vector<std::uint8_t>> starting_pool(const HourlyOutputs& previous);

/// All runs of one hour. Each run starts from a uniformly drawn member of
/// `pool`, or all-active when the pool is empty.
HourlyOutputs simulate_hour(const TrafficModel& traffic, const NetworkConfig& network, const Topology& topo,
                            const AbmConfig& cfg, int hour, const std::vector<std::vector<std::uint8_t>>& pool);

DayOutputs simulate_day(const TrafficModel& traffic, const NetworkConfig& network, const HandoverTable& handover,
                        const AbmConfig& cfg);

struct BenchmarkHour {
  int hour = 1;
  std::vector<Load> load;          // per cell
  std::vector<double> cs_minutes;  // per cell
  std::vector<std::uint8_t> config;
};

struct BenchmarkOutputs {
  std::vector<CellId> cells;
  std::vector<BenchmarkHour> hours;
};

/// Deterministic expert benchmark on the Gaussian means.
BenchmarkOutputs run_benchmark(const TrafficModel& traffic, const NetworkConfig& network,
                               const HandoverTable& handover);

/// Per (hour, cell) mean and standard deviation of every output.
std::string serialize_summary(const DayOutputs& day);
/// One row per (hour, run, cell).
std::string serialize_runs(const DayOutputs& day);
std::string serialize_benchmark(const BenchmarkOutputs& bench);

}  // namespace esim
