#include <cmath>

#include "doctest.h"
#include "esim/error.hpp"
#include "esim/harness.hpp"
#include "fixtures.hpp"

using namespace esim;

namespace {

ScenarioSpec small_spec(double scale = 1.0) {
  ScenarioSpec s;
  s.capacity_cells = 6;
  s.coverage_cells = 3;
  s.days = 2;
  s.traffic_scale = scale;
  return s;
}

}  // namespace

TEST_CASE("standard scenario sizes and reproducibility") {
  const auto s = generate_scenario(ScenarioSpec{});
  CHECK(s.unbiased.kpis.size() == 50u * 24u * 5u);
  CHECK(s.es.kpis.size() == 50u * 24u * 5u);
  CHECK(s.network.capacity_cells.size() == 30u);
  const auto again = generate_scenario(ScenarioSpec{});
  CHECK(serialize_kpis(again.es.kpis) == serialize_kpis(s.es.kpis));
  CHECK(serialize_reports(again.unbiased.reports) == serialize_reports(s.unbiased.reports));
  CHECK(serialize_energy(again.es.energy) == serialize_energy(s.es.energy));

  double cs = 0;
  for (const auto& k : s.es.kpis) cs += k.cs_minutes;
  CHECK(cs > 0);
  for (const auto& k : s.unbiased.kpis) CHECK(k.cs_minutes == 0);
}

TEST_CASE("invalid specs") {
  auto s = small_spec();
  s.coverage_cells = 0;
  CHECK_THROWS_AS(generate_scenario(s), InvalidSpec);
  s = small_spec();
  s.carriers_per_radio = 7;
  CHECK_THROWS_AS(s.validate(), InvalidSpec);
}

TEST_CASE("error metrics") {
  const std::vector<double> x{1, 2, 3};
  auto m = mae_mape(x, x);
  CHECK(m.mae == 0);
  CHECK(m.mape == 0);
  m = mae_mape(std::vector{2.0, 4.0}, std::vector{1.0, 2.0});
  CHECK(m.mae == doctest::Approx(1.5));
  CHECK(m.mape == doctest::Approx(100));
  m = mae_mape(std::vector{2.0, 4.0}, std::vector{0.0, 2.0});
  CHECK(m.mae == doctest::Approx(2));
  CHECK(m.mape == doctest::Approx(100));
  CHECK(m.skipped == 1);
  CHECK_THROWS_AS(mae_mape(std::vector{1.0}, std::vector{1.0, 2.0}), LengthMismatch);
  CHECK_THROWS_AS(mae_mape(std::vector<double>{}, std::vector<double>{}), EmptySeries);

  Rng rng(3);
  std::uniform_real_distribution<double> u(-5, 5);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> p(10), y(10);
    for (int i = 0; i < 10; ++i) p[i] = u(rng), y[i] = u(rng);
    const double base = mae_mape(p, y).mae;
    const double k = u(rng);
    auto q = p;
    for (auto& v : q) v += k;
    CHECK(std::abs(mae_mape(q, y).mae - base) <= std::abs(k) + 1e-12);
    for (int i = 0; i < 10; ++i) q[i] = y[i] + std::abs(p[i] - y[i]);
    const double above = mae_mape(q, y).mae;
    for (auto& v : q) v += std::abs(k);
    CHECK(mae_mape(q, y).mae == doctest::Approx(above + std::abs(k)));
  }
}

TEST_CASE("comparison and gains") {
  KpiTable truth, off;
  for (int h = 1; h <= 3; ++h) {
    truth[{kKpiLoad, 1, h}] = 0.5;
    off[{kKpiLoad, 1, h}] = 0.7;
  }
  auto r = compare(truth, off, truth);
  CHECK(r.at(kKpiLoad).abm.mae == 0);
  CHECK(*r.at(kKpiLoad).gain_mae == doctest::Approx(1.0));
  r = compare(off, off, truth);
  CHECK(*r.at(kKpiLoad).gain_mae == doctest::Approx(0.0));
  CHECK(r.profiles.size() == 3);

  KpiTable other;
  other[{kKpiLoad, 2, 1}] = 0.5;
  CHECK_THROWS_AS(compare(other, off, truth), KeyMismatch);
  CHECK(parse_kpi_table(serialize_kpi_table(off), "t") == off);

  KpiTable near;
  for (int h = 1; h <= 3; ++h) near[{kKpiLoad, 1, h}] = 0.6;
  const auto ab = compare(near, off, truth).at(kKpiLoad);
  const auto ba = compare(off, near, truth).at(kKpiLoad);
  CHECK(*ab.gain_mae > 0);
  CHECK(*ba.gain_mae < 0);
  CHECK(ab.abm.mae == ba.benchmark.mae);
}

TEST_CASE("ground truth without traffic sleeps every capacity cell") {
  const auto s = generate_scenario(small_spec(0.0));
  AbmConfig cfg;
  cfg.runs = 3;
  const auto truth = ground_truth_replay(s, s.network, cfg);
  for (auto c : s.network.capacity_cells) {
    for (int h = 1; h <= 24; ++h) CHECK(truth.at({kKpiShutdown, raw(c), h}) == 60);
  }
  for (const auto& ru : s.network.radio_units) {
    if (ru.radio_type == "RT-L") continue;
    const double sleeping = s.laws.idle_w.at(ru.id) + s.laws.carrier_sleep_w * double(ru.cell_ids.size());
    for (int h = 1; h <= 24; ++h) CHECK(truth.at({kKpiEnergy, raw(ru.id), h}) == doctest::Approx(sleeping));
  }
  CHECK(ground_truth_replay(s, s.network, cfg) == truth);
}

TEST_CASE("ground truth with saturated traffic keeps every cell on") {
  const auto s = generate_scenario(small_spec(100.0));
  AbmConfig cfg;
  cfg.runs = 3;
  const auto truth = ground_truth_replay(s, s.network, cfg);
  for (auto c : s.network.capacity_cells) {
    for (int h = 1; h <= 24; ++h) CHECK(truth.at({kKpiShutdown, raw(c), h}) == 0);
  }
}

TEST_CASE("rate law") {
  const auto s = generate_scenario(small_spec());
  const auto c = s.network.capacity_cells[0];
  const double rmax = s.laws.rate_max_mbps.at(c);
  CHECK(s.laws.rate_mbps(c, 0.5, 0) == doctest::Approx(rmax * 0.625));
  CHECK(s.laws.rate_mbps(c, 0.4, 10) > s.laws.rate_mbps(c, 0.6, 10));
  CHECK(s.laws.rate_mbps(c, 0.4, 10) > s.laws.rate_mbps(c, 0.4, 20));
}
