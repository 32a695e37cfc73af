#include "esim/abm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "esim/csv.hpp"
#include "esim/error.hpp"
#include "esim/parallel.hpp"

namespace esim {

using csv::format_number;

void AbmConfig::validate() const {
  if (runs < 1) throw InvalidConfig("runs must be >= 1");
  if (max_steps < 1) throw InvalidConfig("max_steps must be >= 1");
  if (threads < 0) throw InvalidConfig("threads must be >= 0");
}

// ---------------------------------------------------------------------------
// Topology

int Topology::cell_index(CellId id) const {
  const auto it = index_.find(id);
  if (it == index_.end()) throw BadReference("unknown cell " + to_string(id));
  return it->second;
}

int Topology::slot_of(CellId id) const {
  const int slot = cell_slot[cell_index(id)];
  if (slot < 0) throw BadReference("cell " + to_string(id) + " is not a capacity cell");
  return slot;
}

Topology compile(const NetworkConfig& network, const HandoverTable& handover) {
  Topology topo;
  for (std::size_t i = 0; i < network.cells.size(); ++i) {
    topo.cells.push_back(network.cells[i].id);
    topo.index_[network.cells[i].id] = static_cast<int>(i);
  }
  topo.cell_slot.assign(topo.cells.size(), -1);
  for (auto c : network.capacity_cells) {
    const int slot = static_cast<int>(topo.slot_cell.size());
    topo.slot_cell.push_back(topo.cell_index(c));
    topo.slot_coverage.push_back(topo.cell_index(network.paired_coverage(c)));
    topo.thresholds.push_back(network.energy_saving.at(c));
    topo.cell_slot[topo.cell_index(c)] = slot;
  }
  for (int h = 0; h < kHoursPerDay; ++h) {
    auto& hour = topo.handover[h];
    hour.resize(topo.num_slots());
    for (std::size_t s = 0; s < topo.num_slots(); ++s) {
      const auto it = handover[h].targets.find(topo.cells[topo.slot_cell[s]]);
      if (it == handover[h].targets.end()) continue;
      for (const auto& t : it->second) {
        hour[s].push_back(Topology::Target{topo.cell_index(t.cell), t.probability});
      }
    }
  }
  return topo;
}

// ---------------------------------------------------------------------------
// State and replay

namespace {

Load& operator+=(Load& a, const Load& b) {
  a.ues += b.ues;
  a.dl_prbs += b.dl_prbs;
  a.ul_prbs += b.ul_prbs;
  return a;
}

Load scaled(const Load& a, double f) { return Load{a.ues * f, a.dl_prbs * f, a.ul_prbs * f}; }

bool is_zero(const Load& a) { return a.ues == 0.0 && a.dl_prbs == 0.0 && a.ul_prbs == 0.0; }

// Loads are always the ordered sum of holdings, so any sequence of moves that
// restores the holdings restores the loads bit for bit.
void recompute(RunState& state, int cell) {
  Load total;
  for (const auto& h : state.holdings[cell]) total += h.load;
  state.load[cell] = total;
}

void deposit(std::vector<Holding>& holdings, int origin, const Load& load) {
  auto it = std::lower_bound(holdings.begin(), holdings.end(), origin,
                             [](const Holding& h, int o) { return h.origin < o; });
  if (it != holdings.end() && it->origin == origin) {
    it->load += load;
  } else {
    holdings.insert(it, Holding{origin, load});
  }
}

// Active targets with their masked weights.
double masked_weights(const Topology& topo, const RunState& state, int hour, int slot,
                      std::vector<double>& weights) {
  const auto& targets = topo.targets(hour, slot);
  weights.resize(targets.size());
  double total = 0.0;
  for (std::size_t k = 0; k < targets.size(); ++k) {
    const int ts = topo.cell_slot[targets[k].cell];
    const bool available = ts < 0 || state.active[ts] != 0;
    weights[k] = available ? targets[k].probability : 0.0;
    total += weights[k];
  }
  return total;
}

std::size_t draw_weighted(std::span<const double> weights, double total, Rng& rng) {
  std::uniform_real_distribution<double> uniform(0.0, total);
  const double u = uniform(rng);
  double cumulative = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (weights[k] <= 0.0) continue;
    cumulative += weights[k];
    last_positive = k;
    if (u < cumulative) return k;
  }
  return last_positive;
}

}  // namespace

RunState initial_state(const Topology& topo, std::span<const Load> drawn) {
  if (drawn.size() != topo.num_cells()) {
    throw InvalidConfig(fmt::format("expected {} drawn loads, got {}", topo.num_cells(), drawn.size()));
  }
  RunState state;
  state.active.assign(topo.num_slots(), 1);
  state.load.assign(drawn.begin(), drawn.end());
  state.cs_minutes.assign(topo.num_cells(), 0.0);
  state.holdings.resize(topo.num_cells());
  for (std::size_t i = 0; i < topo.num_cells(); ++i) {
    state.holdings[i] = {Holding{static_cast<int>(i), drawn[i]}};
    recompute(state, static_cast<int>(i));
  }
  return state;
}

void apply(const Topology& topo, const ReplayEntry& entry, std::span<const Load> initial, RunState& state) {
  const int cell = topo.slot_cell[entry.slot];
  if (entry.action == Action::shutdown) {
    if (!state.active[entry.slot]) throw InconsistentReplay("shutdown of an inactive cell");
    state.holdings[cell].clear();
    for (const auto& m : entry.moves) {
      if (m.from != cell) throw InconsistentReplay("shutdown move from a different cell");
      deposit(state.holdings[m.to], m.origin, m.load);
    }
    recompute(state, cell);
    for (const auto& m : entry.moves) recompute(state, m.to);
    state.active[entry.slot] = 0;
    state.cs_minutes[cell] = 60.0;
  } else {
    if (state.active[entry.slot]) throw InconsistentReplay("reactivation of an active cell");
    Load back;
    for (const auto& m : entry.moves) {
      back.ues += m.load.ues;
      back.dl_prbs += m.load.dl_prbs;
      back.ul_prbs += m.load.ul_prbs;
    }
    const auto near = [](double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(b)); };
    const auto& own = initial[cell];
    if (!near(back.ues, own.ues) || !near(back.dl_prbs, own.dl_prbs) || !near(back.ul_prbs, own.ul_prbs)) {
      throw InconsistentReplay(fmt::format("hosts hold {} UEs of cell {}, expected {}", back.ues,
                                           raw(topo.cells[cell]), own.ues));
    }
    for (const auto& m : entry.moves) {
      auto& host = state.holdings[m.from];
      const auto it = std::find_if(host.begin(), host.end(), [&](const Holding& h) { return h.origin == m.origin; });
      if (it == host.end() || it->load != m.load) {
        throw InconsistentReplay(fmt::format("cell {} does not hold the UEs of cell {}", raw(topo.cells[m.from]),
                                             raw(topo.cells[m.origin])));
      }
      host.erase(it);
      recompute(state, m.from);
    }
    deposit(state.holdings[cell], cell, initial[cell]);
    recompute(state, cell);
    state.active[entry.slot] = 1;
    state.cs_minutes[cell] = 0.0;
  }
}

RunState replay(const Topology& topo, const ReplayMemory& memory) {
  auto state = initial_state(topo, memory.initial);
  for (const auto& entry : memory.entries) apply(topo, entry, memory.initial, state);
  return state;
}

// ---------------------------------------------------------------------------
// Rules, selection and transfer

EligibleSets eligible_sets(const Topology& topo, const RunState& state, std::span<const Load> drawn) {
  EligibleSets sets;
  for (std::size_t s = 0; s < topo.num_slots(); ++s) {
    const int c = topo.slot_cell[s];
    const int b = topo.slot_coverage[s];
    const auto& th = topo.thresholds[s];
    if (state.active[s]) {
      if (check_shutdown_entry(drawn[c].ues, drawn[c].dl_prbs, drawn[b].dl_prbs, drawn[c].ul_prbs, drawn[b].ul_prbs,
                               th)) {
        sets.shutdown.push_back(static_cast<int>(s));
      }
    } else if (check_wakeup(state.load[b].ues, state.load[b].dl_prbs, state.load[b].ul_prbs, th)) {
      sets.wakeup.push_back(static_cast<int>(s));
    }
  }
  return sets;
}

std::vector<double> load_distances(const Topology& topo, const EligibleSets& sets, const RunState& state,
                                   std::span<const Load> drawn) {
  std::vector<double> d;
  d.reserve(sets.shutdown.size() + sets.wakeup.size());
  for (int s : sets.shutdown) {
    const int c = topo.slot_cell[s];
    const int b = topo.slot_coverage[s];
    d.push_back(topo.thresholds[s].entry_dl - (drawn[c].dl_prbs + drawn[b].dl_prbs));
  }
  for (int s : sets.wakeup) {
    const int b = topo.slot_coverage[s];
    d.push_back(std::max(0.0, state.load[b].dl_prbs - topo.thresholds[s].leave_dl));
  }
  return d;
}

std::vector<double> agent_selection_pmf(std::span<const double> distances) {
  if (distances.empty()) throw EmptyCandidateSet("no candidate agents");
  const double total = std::accumulate(distances.begin(), distances.end(), 0.0);
  std::vector<double> pmf(distances.size());
  for (std::size_t i = 0; i < distances.size(); ++i) {
    pmf[i] = total > 0.0 ? distances[i] / total : 1.0 / static_cast<double>(distances.size());
  }
  return pmf;
}

std::size_t select_index(std::span<const double> distances, Rng& rng) {
  if (distances.empty()) throw EmptyCandidateSet("no candidate agents");
  const double total = std::accumulate(distances.begin(), distances.end(), 0.0);
  if (!(total > 0.0)) {
    std::uniform_int_distribution<std::size_t> uniform(0, distances.size() - 1);
    return uniform(rng);
  }
  return draw_weighted(distances, total, rng);
}

int select_agent(const Topology& topo, const EligibleSets& sets, const RunState& state, std::span<const Load> drawn,
                 Rng& rng) {
  const auto d = load_distances(topo, sets, state, drawn);
  const auto i = select_index(d, rng);
  return i < sets.shutdown.size() ? sets.shutdown[i] : sets.wakeup[i - sets.shutdown.size()];
}

std::optional<ReplayEntry> plan_shutdown(const Topology& topo, const RunState& state, int slot, int hour, Rng& rng) {
  std::vector<double> weights;
  const double total = masked_weights(topo, state, hour, slot, weights);
  if (!(total > 0.0)) return std::nullopt;

  const auto& targets = topo.targets(hour, slot);
  const int cell = topo.slot_cell[slot];
  ReplayEntry entry;
  entry.action = Action::shutdown;
  entry.slot = slot;
  std::vector<long> counts(targets.size());
  for (const auto& group : state.holdings[cell]) {
    if (is_zero(group.load)) continue;
    const long n = std::lround(group.load.ues);
    if (n >= 1) {
      // Every UE carries an equal share of its group's PRBs.
      std::fill(counts.begin(), counts.end(), 0);
      for (long u = 0; u < n; ++u) ++counts[draw_weighted(weights, total, rng)];
      const Load share = scaled(group.load, 1.0 / static_cast<double>(n));
      for (std::size_t k = 0; k < targets.size(); ++k) {
        if (counts[k] == 0) continue;
        entry.moves.push_back(Move{group.origin, cell, targets[k].cell, scaled(share, static_cast<double>(counts[k]))});
      }
    } else {
      // No whole UE left to carry the residual; spread it by probability.
      for (std::size_t k = 0; k < targets.size(); ++k) {
        if (weights[k] <= 0.0) continue;
        entry.moves.push_back(Move{group.origin, cell, targets[k].cell, scaled(group.load, weights[k] / total)});
      }
    }
  }
  return entry;
}

ReplayEntry plan_reactivation(const Topology& topo, const RunState& state, int slot) {
  if (state.active[slot]) throw InconsistentReplay("reactivation of an active cell");
  const int cell = topo.slot_cell[slot];
  ReplayEntry entry;
  entry.action = Action::reactivate;
  entry.slot = slot;
  for (std::size_t host = 0; host < topo.num_cells(); ++host) {
    for (const auto& h : state.holdings[host]) {
      if (h.origin == cell) entry.moves.push_back(Move{cell, static_cast<int>(host), cell, h.load});
    }
  }
  return entry;
}

TransferOutcome transfer_users(const Topology& topo, int slot, int hour, int step, RunState& state,
                               ReplayMemory& memory, Rng& rng) {
  auto entry = plan_shutdown(topo, state, slot, hour, rng);
  if (!entry) return TransferOutcome::aborted;
  entry->step = step;
  apply(topo, *entry, memory.initial, state);
  memory.entries.push_back(std::move(*entry));
  return TransferOutcome::done;
}

void reactivate(const Topology& topo, int slot, int step, RunState& state, ReplayMemory& memory) {
  auto entry = plan_reactivation(topo, state, slot);
  entry.step = step;
  apply(topo, entry, memory.initial, state);
  memory.entries.push_back(std::move(entry));
}

RunResult run_monte_carlo(const Topology& topo, std::span<const Load> drawn, std::span<const std::uint8_t> start,
                          int hour, int max_steps, Rng& rng, const StepObserver& observer) {
  if (max_steps < 1) throw InvalidConfig("max_steps must be >= 1");
  if (start.size() != topo.num_slots()) throw InvalidConfig("starting configuration has the wrong length");

  RunResult result;
  result.memory.initial.assign(drawn.begin(), drawn.end());
  result.state = initial_state(topo, drawn);
  auto& state = result.state;
  for (std::size_t s = 0; s < start.size(); ++s) {
    if (!start[s]) transfer_users(topo, static_cast<int>(s), hour, 0, state, result.memory, rng);
  }
  if (observer) observer(0, state);

  for (int t = 1; t <= max_steps; ++t) {
    const auto sets = eligible_sets(topo, state, drawn);
    if (sets.empty()) {
      result.steps = t;
      result.stable = true;
      return result;
    }
    const int slot = select_agent(topo, sets, state, drawn, rng);
    if (state.active[slot]) {
      transfer_users(topo, slot, hour, t, state, result.memory, rng);
    } else {
      reactivate(topo, slot, t, state, result.memory);
    }
    if (observer) observer(t, state);
  }
  result.steps = max_steps;
  result.stable = false;
  return result;
}

// ---------------------------------------------------------------------------
// Hours and days

namespace {

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double stddev_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

double HourlyOutputs::mean_ues(std::size_t cell) const { return mean_of(ues[cell]); }
double HourlyOutputs::mean_dl(std::size_t cell) const { return mean_of(dl_prbs[cell]); }
double HourlyOutputs::mean_ul(std::size_t cell) const { return mean_of(ul_prbs[cell]); }
double HourlyOutputs::mean_cs(std::size_t cell) const { return mean_of(cs_minutes[cell]); }

std::vector<std::vector<std::uint8_t>> starting_pool(const HourlyOutputs& previous) {
  std::vector<std::vector<std::uint8_t>> pool;
  for (std::size_t r = 0; r < previous.runs(); ++r) {
    if (previous.stable[r]) pool.push_back(previous.configs[r]);
  }
  if (pool.empty()) pool = previous.configs;
  return pool;
}

HourlyOutputs simulate_hour(const TrafficModel& traffic, const NetworkConfig& network, const Topology& topo,
                            const AbmConfig& cfg, int hour, const std::vector<std::vector<std::uint8_t>>& pool) {
  cfg.validate();
  const auto runs = static_cast<std::size_t>(cfg.runs);
  const auto cells = topo.num_cells();
  HourlyOutputs out;
  out.hour = hour;
  out.ues.assign(cells, std::vector<double>(runs));
  out.dl_prbs.assign(cells, std::vector<double>(runs));
  out.ul_prbs.assign(cells, std::vector<double>(runs));
  out.cs_minutes.assign(cells, std::vector<double>(runs));
  out.configs.resize(runs);
  out.steps.resize(runs);
  out.stable.resize(runs);

  const std::vector<std::uint8_t> all_active(topo.num_slots(), 1);
  parallel_for(runs, cfg.threads, [&](std::size_t r) {
    auto rng = make_stream(cfg.seed, {static_cast<std::uint64_t>(hour), static_cast<std::uint64_t>(r)});
    const auto drawn = draw_inputs(traffic, network, hour, rng);
    const std::vector<std::uint8_t>* start = &all_active;
    if (!pool.empty()) {
      std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
      start = &pool[pick(rng)];
    }
    const auto result = run_monte_carlo(topo, drawn, *start, hour, cfg.max_steps, rng);
    for (std::size_t i = 0; i < cells; ++i) {
      out.ues[i][r] = result.state.load[i].ues;
      out.dl_prbs[i][r] = result.state.load[i].dl_prbs;
      out.ul_prbs[i][r] = result.state.load[i].ul_prbs;
      out.cs_minutes[i][r] = result.state.cs_minutes[i];
    }
    out.configs[r] = result.state.active;
    out.steps[r] = result.steps;
    out.stable[r] = result.stable ? 1 : 0;
  });
  return out;
}

DayOutputs simulate_day(const TrafficModel& traffic, const NetworkConfig& network, const HandoverTable& handover,
                        const AbmConfig& cfg) {
  cfg.validate();
  const auto topo = compile(network, handover);
  DayOutputs day;
  day.cells = topo.cells;
  std::vector<std::vector<std::uint8_t>> pool;
  for (int h = 1; h <= kHoursPerDay; ++h) {
    day.hours.push_back(simulate_hour(traffic, network, topo, cfg, h, pool));
    pool = starting_pool(day.hours.back());
  }
  return day;
}

// ---------------------------------------------------------------------------
// Benchmark

BenchmarkOutputs run_benchmark(const TrafficModel& traffic, const NetworkConfig& network,
                               const HandoverTable& handover) {
  const auto topo = compile(network, handover);
  BenchmarkOutputs out;
  out.cells = topo.cells;
  for (int h = 1; h <= kHoursPerDay; ++h) {
    std::vector<Load> load;
    load.reserve(topo.num_cells());
    for (auto id : topo.cells) {
      const auto& t = traffic.at(id, h);
      load.push_back(Load{t.ues.mean, t.dl_prbs.mean, t.ul_prbs.mean});
    }
    const auto means = load;

    struct Candidate {
      int slot;
      double distance;
    };
    std::vector<Candidate> order;
    for (std::size_t s = 0; s < topo.num_slots(); ++s) {
      const int c = topo.slot_cell[s];
      const int b = topo.slot_coverage[s];
      const auto& th = topo.thresholds[s];
      if (check_shutdown_entry(means[c].ues, means[c].dl_prbs, means[b].dl_prbs, means[c].ul_prbs, means[b].ul_prbs,
                               th)) {
        order.push_back(Candidate{static_cast<int>(s), th.entry_dl - (means[c].dl_prbs + means[b].dl_prbs)});
      }
    }
    std::stable_sort(order.begin(), order.end(),
                     [](const Candidate& a, const Candidate& b) { return a.distance > b.distance; });

    BenchmarkHour hour;
    hour.hour = h;
    hour.config.assign(topo.num_slots(), 1);
    hour.cs_minutes.assign(topo.num_cells(), 0.0);
    for (const auto& cand : order) {
      const int s = cand.slot;
      const int c = topo.slot_cell[s];
      const int b = topo.slot_coverage[s];
      if (!check_shutdown_entry(load[c].ues, load[c].dl_prbs, load[b].dl_prbs, load[c].ul_prbs, load[b].ul_prbs,
                                topo.thresholds[s])) {
        continue;
      }
      const auto& targets = topo.targets(h, s);
      double total = 0.0;
      std::vector<double> weights(targets.size());
      for (std::size_t k = 0; k < targets.size(); ++k) {
        const int ts = topo.cell_slot[targets[k].cell];
        weights[k] = (ts < 0 || hour.config[ts]) ? targets[k].probability : 0.0;
        total += weights[k];
      }
      if (!(total > 0.0)) continue;
      const Load moving = load[c];
      for (std::size_t k = 0; k < targets.size(); ++k) {
        if (weights[k] > 0.0) load[targets[k].cell] += scaled(moving, weights[k] / total);
      }
      load[c] = Load{};
      hour.config[s] = 0;
      hour.cs_minutes[c] = 60.0;
    }
    hour.load = std::move(load);
    out.hours.push_back(std::move(hour));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reports

std::string serialize_summary(const DayOutputs& day) {
  std::string out =
      "hour,cell_id,ues_mean,ues_std,dl_prbs_mean,dl_prbs_std,ul_prbs_mean,ul_prbs_std,cs_minutes_mean,"
      "cs_minutes_std\n";
  for (const auto& h : day.hours) {
    for (std::size_t i = 0; i < day.cells.size(); ++i) {
      out += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", h.hour, raw(day.cells[i]), format_number(mean_of(h.ues[i])),
                         format_number(stddev_of(h.ues[i])), format_number(mean_of(h.dl_prbs[i])),
                         format_number(stddev_of(h.dl_prbs[i])), format_number(mean_of(h.ul_prbs[i])),
                         format_number(stddev_of(h.ul_prbs[i])), format_number(mean_of(h.cs_minutes[i])),
                         format_number(stddev_of(h.cs_minutes[i])));
    }
  }
  return out;
}

std::string serialize_runs(const DayOutputs& day) {
  std::string out = "hour,run,cell_id,ues,dl_prbs,ul_prbs,cs_minutes\n";
  for (const auto& h : day.hours) {
    for (std::size_t r = 0; r < h.runs(); ++r) {
      for (std::size_t i = 0; i < day.cells.size(); ++i) {
        out += fmt::format("{},{},{},{},{},{},{}\n", h.hour, r + 1, raw(day.cells[i]), format_number(h.ues[i][r]),
                           format_number(h.dl_prbs[i][r]), format_number(h.ul_prbs[i][r]),
                           format_number(h.cs_minutes[i][r]));
      }
    }
  }
  return out;
}

std::string serialize_benchmark(const BenchmarkOutputs& bench) {
  std::string out = "hour,cell_id,ues,dl_prbs,ul_prbs,cs_minutes\n";
  for (const auto& h : bench.hours) {
    for (std::size_t i = 0; i < bench.cells.size(); ++i) {
      out += fmt::format("{},{},{},{},{},{}\n", h.hour, raw(bench.cells[i]), format_number(h.load[i].ues),
                         format_number(h.load[i].dl_prbs), format_number(h.load[i].ul_prbs),
                         format_number(h.cs_minutes[i]));
    }
  }
  return out;
}

}  // namespace esim
