#include <cmath>
#include <limits>

#include "doctest.h"
#include "esim/abm.hpp"
#include "esim/error.hpp"
#include "fixtures.hpp"

using namespace esim;
using fixtures::micro_network;

namespace {

struct Micro {
  NetworkConfig net;
  Topology topo;
  std::vector<Load> drawn;
};

// coverage 1, capacity 2 (paired with 1), handing everything to cell 1
Micro one_pair(Load coverage, Load capacity, ShutdownThresholds th = fixtures::loose_thresholds()) {
  Micro m;
  m.net = micro_network(1, 1, th);
  m.topo = compile(m.net, fixtures::to_paired(m.net));
  m.drawn = {coverage, capacity};
  return m;
}

}  // namespace

TEST_CASE("shutdown moves every UE and PRB to the drawn target") {
  auto m = one_pair({5, 10, 5}, {3, 12, 6});
  auto state = initial_state(m.topo, m.drawn);
  ReplayMemory mem{m.drawn, {}};
  Rng rng(1);
  REQUIRE(transfer_users(m.topo, 0, 1, 1, state, mem, rng) == TransferOutcome::done);
  CHECK(state.load[0] == Load{8, 22, 11});
  CHECK(state.load[1] == Load{0, 0, 0});
  CHECK(state.cs_minutes[1] == 60);
  CHECK(state.active[0] == 0);
  REQUIRE(mem.entries.size() == 1);
  CHECK(replay(m.topo, mem) == state);
}

TEST_CASE("shutdown without a feasible target is abandoned") {
  auto m = one_pair({5, 10, 5}, {3, 12, 6});
  m.topo = compile(m.net, fixtures::constant_handover({{CellId(2), {{CellId(1), 0.0}}}}));
  auto state = initial_state(m.topo, m.drawn);
  const auto before = state;
  ReplayMemory mem{m.drawn, {}};
  Rng rng(1);
  CHECK(transfer_users(m.topo, 0, 1, 1, state, mem, rng) == TransferOutcome::aborted);
  CHECK(state == before);
  CHECK(mem.entries.empty());
}

TEST_CASE("a cell with no UEs shuts down without moving anything") {
  auto m = one_pair({5, 10, 5}, {0, 0, 0});
  auto state = initial_state(m.topo, m.drawn);
  ReplayMemory mem{m.drawn, {}};
  Rng rng(1);
  REQUIRE(transfer_users(m.topo, 0, 1, 1, state, mem, rng) == TransferOutcome::done);
  CHECK(state.active[0] == 0);
  CHECK(state.cs_minutes[1] == 60);
  CHECK(state.load[0] == Load{5, 10, 5});

  reactivate(m.topo, 0, 2, state, mem);
  CHECK(state == initial_state(m.topo, m.drawn));
}

TEST_CASE("residual PRBs of a cell without UEs follow the handover probabilities") {
  auto m = one_pair({5, 10, 5}, {0, 4, 2});
  auto state = initial_state(m.topo, m.drawn);
  ReplayMemory mem{m.drawn, {}};
  Rng rng(1);
  REQUIRE(transfer_users(m.topo, 0, 1, 1, state, mem, rng) == TransferOutcome::done);
  CHECK(state.load[0] == Load{5, 14, 7});
  reactivate(m.topo, 0, 2, state, mem);
  CHECK(state == initial_state(m.topo, m.drawn));
}

TEST_CASE("reactivation returns only the reactivated cell's UEs") {
  // coverage 1, capacity 2 and 3 both paired with 1
  const auto net = micro_network(2, 1);
  const auto topo = compile(net, fixtures::to_paired(net));
  const std::vector<Load> drawn = {{10, 20, 10}, {4, 8, 4}, {2, 6, 2}};
  auto state = initial_state(topo, drawn);
  ReplayMemory mem{drawn, {}};
  Rng rng(3);
  REQUIRE(transfer_users(topo, 0, 1, 1, state, mem, rng) == TransferOutcome::done);
  REQUIRE(transfer_users(topo, 1, 1, 2, state, mem, rng) == TransferOutcome::done);
  CHECK(state.load[0] == Load{16, 34, 16});
  reactivate(topo, 0, 3, state, mem);
  CHECK(state.load[0] == Load{12, 26, 12});
  CHECK(state.load[1] == Load{4, 8, 4});
  CHECK(state.load[2] == Load{0, 0, 0});
  CHECK(state.active == std::vector<std::uint8_t>{1, 0});
  CHECK(state.cs_minutes[1] == 0);
  CHECK(state.cs_minutes[2] == 60);
  CHECK(replay(topo, mem) == state);
}

TEST_CASE("reactivation detects a host that lost its guests") {
  auto m = one_pair({5, 10, 5}, {3, 12, 6});
  auto state = initial_state(m.topo, m.drawn);
  ReplayMemory mem{m.drawn, {}};
  Rng rng(1);
  transfer_users(m.topo, 0, 1, 1, state, mem, rng);
  state.holdings[0].erase(state.holdings[0].begin() + 1);
  CHECK_THROWS_AS(reactivate(m.topo, 0, 2, state, mem), InconsistentReplay);
}

TEST_CASE("eligible sets") {
  const ShutdownThresholds th{10, 100, 100, 50, 60, 100};
  SUBCASE("heavy load: nothing to do") {
    auto m = one_pair({40, 80, 10}, {30, 60, 10}, th);
    const auto s = initial_state(m.topo, m.drawn);
    CHECK(eligible_sets(m.topo, s, m.drawn).empty());
  }
  SUBCASE("idle capacity cell can shut down, then its coverage cell overflows") {
    auto m = one_pair({5, 50, 10}, {3, 15, 5}, th);
    auto s = initial_state(m.topo, m.drawn);
    auto sets = eligible_sets(m.topo, s, m.drawn);
    CHECK(sets.shutdown == std::vector{0});
    CHECK(sets.wakeup.empty());
    CHECK(load_distances(m.topo, sets, s, m.drawn) == std::vector{35.0});

    ReplayMemory mem{m.drawn, {}};
    Rng rng(2);
    transfer_users(m.topo, 0, 1, 1, s, mem, rng);
    sets = eligible_sets(m.topo, s, m.drawn);
    CHECK(sets.shutdown.empty());
    CHECK(sets.wakeup == std::vector{0});
    CHECK(load_distances(m.topo, sets, s, m.drawn) == std::vector{5.0});
  }
}

TEST_CASE("agent selection probabilities") {
  CHECK(agent_selection_pmf(std::vector{1.0, 3.0}) == std::vector{0.25, 0.75});
  CHECK(agent_selection_pmf(std::vector{0.0, 0.0}) == std::vector{0.5, 0.5});
  Rng rng(9);
  CHECK(select_index(std::vector{4.0}, rng) == 0);
  CHECK_THROWS_AS(select_index(std::vector<double>{}, rng), EmptyCandidateSet);

  int hits = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) hits += select_index(std::vector{1.0, 3.0}, rng) == 1;
  CHECK(std::abs(hits / double(n) - 0.75) < 0.01);
}

TEST_CASE("a network with nothing to do is stable at the first step") {
  auto m = one_pair({40, 80, 10}, {30, 60, 10}, ShutdownThresholds{10, 100, 100, 50, 60, 100});
  Rng rng(1);
  const std::vector<std::uint8_t> start{1};
  const auto r = run_monte_carlo(m.topo, m.drawn, start, 1, 10, rng);
  CHECK(r.stable);
  CHECK(r.steps == 1);
  CHECK(r.state == initial_state(m.topo, m.drawn));
}

TEST_CASE("an idle capacity cell shuts down and the run is stable at step 2") {
  auto m = one_pair({5, 10, 5}, {1, 5, 2});
  Rng rng(1);
  const std::vector<std::uint8_t> start{1};
  const auto r = run_monte_carlo(m.topo, m.drawn, start, 1, 10, rng);
  CHECK(r.stable);
  CHECK(r.steps == 2);
  CHECK(r.state.active[0] == 0);
  CHECK(r.state.load[0] == Load{6, 15, 7});
}

TEST_CASE("a capped run reports max_steps without the stable flag") {
  // shutdown overflows the coverage cell, wakeup frees it: a two-cycle
  auto m = one_pair({5, 50, 10}, {3, 15, 5}, ShutdownThresholds{10, 100, 100, 50, 60, 100});
  Rng rng(1);
  const std::vector<std::uint8_t> start{1};
  const auto r = run_monte_carlo(m.topo, m.drawn, start, 1, 7, rng);
  CHECK_FALSE(r.stable);
  CHECK(r.steps == 7);
  CHECK(r.state.active[0] == 0);
  CHECK(r.memory.entries.size() == 7);
}

TEST_CASE("runs starting from a stored configuration roll into it first") {
  auto m = one_pair({5, 10, 5}, {1, 5, 2}, ShutdownThresholds{0, 0, 0, 1e9, 1e9, 1e9});
  Rng rng(1);
  const std::vector<std::uint8_t> start{0};
  const auto r = run_monte_carlo(m.topo, m.drawn, start, 1, 10, rng);
  CHECK(r.stable);
  CHECK(r.state.active[0] == 0);
  REQUIRE(r.memory.entries.size() == 1);
  CHECK(r.memory.entries[0].step == 0);
}

namespace {

struct DayFixture {
  NetworkConfig net;
  TrafficModel traffic;
  HandoverTable table;
};

DayFixture single_shutdown_day() {
  DayFixture d;
  d.net = micro_network(2, 1, ShutdownThresholds{10, 100, 100, 1e9, 1e9, 1e9});
  d.table = fixtures::to_paired(d.net);
  // cell 2 is light enough to leave, cell 3 is not
  d.traffic = fixtures::fixed_traffic({{CellId(1), {5, 20, 10}}, {CellId(2), {2, 10, 4}}, {CellId(3), {30, 70, 30}}});
  return d;
}

}  // namespace

TEST_CASE("simulate_day: nothing qualifies, nothing sleeps") {
  const auto net = micro_network(1, 1, ShutdownThresholds{0, 0, 0, 1e9, 1e9, 1e9});
  const auto tm = fixtures::fixed_traffic({{CellId(1), {5, 20, 10}}, {CellId(2), {2, 10, 4}}});
  AbmConfig cfg;
  cfg.runs = 5;
  const auto day = simulate_day(tm, net, fixtures::to_paired(net), cfg);
  REQUIRE(day.hours.size() == 24);
  for (const auto& h : day.hours) CHECK(h.mean_cs(1) == 0);
}

TEST_CASE("simulate_day: one cell sleeps every hour, reproducibly") {
  const auto d = single_shutdown_day();
  AbmConfig cfg;
  cfg.runs = 8;
  cfg.seed = 11;
  const auto day = simulate_day(d.traffic, d.net, d.table, cfg);
  for (const auto& h : day.hours) {
    CHECK(h.mean_cs(1) == 60);
    CHECK(h.mean_cs(2) == 0);
    CHECK(h.mean_ues(0) == doctest::Approx(7));
  }
  cfg.threads = 1;
  const auto again = simulate_day(d.traffic, d.net, d.table, cfg);
  CHECK(serialize_runs(again) == serialize_runs(day));
  CHECK(serialize_summary(again) == serialize_summary(day));

  const auto bench = run_benchmark(d.traffic, d.net, d.table);
  for (const auto& h : bench.hours) {
    CHECK(h.config == std::vector<std::uint8_t>{0, 1});
    CHECK(h.cs_minutes[1] == 60);
  }
  CHECK(serialize_benchmark(run_benchmark(d.traffic, d.net, d.table)) == serialize_benchmark(bench));
}

TEST_CASE("benchmark keeps everything on when no cell qualifies at the means") {
  const auto net = micro_network(1, 1, ShutdownThresholds{0, 0, 0, 1e9, 1e9, 1e9});
  const auto tm = fixtures::fixed_traffic({{CellId(1), {5, 20, 10}}, {CellId(2), {2, 10, 4}}});
  const auto bench = run_benchmark(tm, net, fixtures::to_paired(net));
  for (const auto& h : bench.hours) CHECK(h.cs_minutes[1] == 0);
}

TEST_CASE("starting pool prefers stable finals") {
  HourlyOutputs h;
  h.configs = {{1, 0}, {0, 0}, {1, 1}};
  h.steps = {5, 9, 9};
  h.stable = {1, 0, 0};
  CHECK(starting_pool(h) == std::vector<std::vector<std::uint8_t>>{{1, 0}});
  h.stable = {0, 0, 0};
  CHECK(starting_pool(h).size() == 3);
}

TEST_CASE("configuration validation") {
  AbmConfig cfg;
  cfg.max_steps = 0;
  CHECK_THROWS_AS(cfg.validate(), InvalidConfig);
  cfg.max_steps = 10;
  cfg.runs = 0;
  CHECK_THROWS_AS(cfg.validate(), InvalidConfig);
}

TEST_CASE("threshold extremes") {
  const auto inf = std::numeric_limits<double>::infinity();
  const std::map<CellId, Load> loads{
      {CellId(1), {5, 20, 10}}, {CellId(2), {4, 30, 8}}, {CellId(3), {9, 50, 20}}, {CellId(4), {1, 2, 1}}};
  SUBCASE("zero entry, infinite leave: nobody leaves") {
    const auto net = micro_network(3, 1, ShutdownThresholds{0, 0, 0, inf, inf, inf});
    const auto topo = compile(net, fixtures::to_paired(net));
    const auto drawn = fixtures::loads_in_order(net, loads);
    Rng rng(1);
    const auto r = run_monte_carlo(topo, drawn, std::vector<std::uint8_t>(3, 1), 1, 50, rng);
    CHECK(r.stable);
    CHECK(r.state.active == std::vector<std::uint8_t>(3, 1));
  }
  SUBCASE("infinite entry and leave: everybody leaves within C steps") {
    const auto net = micro_network(3, 1, ShutdownThresholds{inf, inf, inf, inf, inf, inf});
    const auto topo = compile(net, fixtures::to_paired(net));
    const auto drawn = fixtures::loads_in_order(net, loads);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      Rng rng(seed);
      const auto r = run_monte_carlo(topo, drawn, std::vector<std::uint8_t>(3, 1), 1, 50, rng);
      CHECK(r.stable);
      CHECK(r.memory.entries.size() == 3);
      CHECK(r.state.active == std::vector<std::uint8_t>(3, 0));
    }
  }
}
