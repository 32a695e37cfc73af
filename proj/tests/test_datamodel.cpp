#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "esim/datamodel.hpp"
#include "esim/error.hpp"
#include "esim/harness.hpp"
#include "fixtures.hpp"

using namespace esim;

namespace {

const char* kTwoCells =
    "cell_id,radio_unit_id,radio_type,n_trx,carrier_tx_mode,frequency_mhz,bandwidth_mhz,max_tx_power_dbm,"
    "n_dl_prb,n_ul_prb,role,paired_cell,a4_threshold_dbm,a4_hysteresis_db,a4_freq_offsets,a4_cell_offsets,"
    "entry_ue,entry_dl,entry_ul,leave_ue,leave_dl,leave_ul\n"
    "1,1,RT-L,2,MIMO2x2,800,10,43,50,50,coverage,,,,,,,,,,,\n"
    "2,2,RT-A,4,MIMO4x4,1800,20,46,100,100,capacity,1,-100,2,1:3,1:-1,25,60,60,70,40,40\n";

std::string kpi_header() {
  std::string h = "cell_id,day,hour,working_day,rrc_ues,dl_prbs,ul_prbs,v_dl,v_dl_minus,t_dl,t_dl_minus,v_ul,t_ul";
  for (int g = 1; g <= 15; ++g) h += ",rn_" + std::to_string(g);
  return h + ",cs_minutes\n";
}

std::string kpi_row(int cell, double v_dl, double v_dl_minus, double cs = 0) {
  std::string r = std::to_string(cell) + ",0,5,1,3,10,5," + std::to_string(v_dl) + "," + std::to_string(v_dl_minus) +
                  ",2,1,100,1";
  for (int g = 1; g <= 15; ++g) r += ",1";
  return r + "," + std::to_string(cs) + "\n";
}

}  // namespace

TEST_CASE("engineering fixture parses into a two-cell network") {
  const auto net = parse_engineering(kTwoCells, "eng");
  CHECK(net.cells.size() == 2);
  CHECK(net.capacity_cells == std::vector{CellId(2)});
  CHECK(net.paired_coverage(CellId(2)) == CellId(1));
  const auto& a4 = net.mobility.at(CellId(2));
  CHECK(a4.threshold_dbm == -100);
  CHECK(a4.hysteresis_db == 2);
  CHECK(a4.freq_offset(CellId(1)) == 3);
  CHECK(a4.cell_offset(CellId(1)) == -1);
  CHECK(a4.freq_offset(CellId(7)) == 0);
  CHECK(net.energy_saving.at(CellId(2)).entry_dl == 60);
  CHECK(parse_engineering(serialize_engineering(net), "again") == net);
}

TEST_CASE("pairing to an unknown cell is a bad reference") {
  std::string text = kTwoCells;
  text.replace(text.find("capacity,1,"), 11, "capacity,9,");
  CHECK_THROWS_AS(parse_engineering(text, "eng"), BadReference);
}

TEST_CASE("missing required column") {
  std::string text = kTwoCells;
  text.replace(text.find("role"), 4, "kind");
  CHECK_THROWS_AS(parse_engineering(text, "eng"), MissingColumn);
}

TEST_CASE("KPI invariants are enforced per row") {
  const auto net = parse_engineering(kTwoCells, "eng");
  CHECK(parse_kpis(kpi_header() + kpi_row(1, 100, 20), "kpi", net).size() == 1);
  try {
    parse_kpis(kpi_header() + kpi_row(1, 100, 20) + kpi_row(2, 10, 20), "kpi", net);
    FAIL("expected MalformedRow");
  } catch (const MalformedRow& e) {
    CHECK(e.row() == 2);
  }
  CHECK_THROWS_AS(parse_kpis(kpi_header() + kpi_row(1, 100, 20, 61), "kpi", net), MalformedRow);
  CHECK_THROWS_AS(parse_kpis(kpi_header() + kpi_row(5, 100, 20), "kpi", net), BadReference);
}

TEST_CASE("generated datasets survive a file round trip") {
  ScenarioSpec spec;
  spec.capacity_cells = 6;
  spec.coverage_cells = 4;
  spec.days = 2;
  const auto s = generate_scenario(spec);
  const auto dir = std::filesystem::temp_directory_path() / "esim_dm_roundtrip";
  std::filesystem::remove_all(dir);
  write_datasets(s.es, dir.string());
  const auto back = parse_datasets(DatasetPaths::in_directory(dir.string()));
  CHECK(back.network == s.es.network);
  CHECK(back.kpis == s.es.kpis);
  CHECK(back.energy == s.es.energy);
  CHECK(back.reports == s.es.reports);
  CHECK(s.es.kpis.size() == 10u * 24u * 2u);
  std::filesystem::remove_all(dir);
}

TEST_CASE("traffic fit: mean, n-1 deviation and floor") {
  auto rec = [](double ues, int day, int hour) {
    CellKpiRecord k;
    k.cell = CellId(1);
    k.day = day;
    k.hour = hour;
    k.rrc_ues = ues;
    return k;
  };
  std::vector<CellKpiRecord> kpis;
  for (int h = 1; h <= 24; ++h) {
    const double a = h == 1 ? 0 : 10, b = h == 1 ? 20 : 10;
    kpis.push_back(rec(a, 0, h));
    kpis.push_back(rec(b, 1, h));
  }
  auto weekend = rec(1000, 2, 1);
  weekend.working_day = false;
  kpis.push_back(weekend);

  const auto tm = fit_traffic_model(kpis, 0.5);
  CHECK(tm.at(CellId(1), 1).ues.mean == doctest::Approx(10));
  CHECK(tm.at(CellId(1), 1).ues.stddev == doctest::Approx(std::sqrt(200.0)));
  CHECK(tm.at(CellId(1), 2).ues.stddev == 0.5);
  CHECK_THROWS_AS(tm.at(CellId(2), 1), NoSamples);

  kpis.pop_back();
  kpis.erase(kpis.begin() + 2, kpis.begin() + 4);  // hour 2 vanishes
  CHECK_THROWS_AS(fit_traffic_model(kpis), NoSamples);
}

TEST_CASE("draws: rounding, truncation, clamping and reproducibility") {
  const auto net = fixtures::micro_network(1, 1);
  TrafficModel tm;
  for (int h = 1; h <= 24; ++h) {
    tm.set(CellId(1), h, HourlyTraffic{{5, 1e-6}, {-3, 1e-6}, {500, 1e-6}});
    tm.set(CellId(2), h, HourlyTraffic{{10, 2}, {50, 10}, {20, 5}});
  }
  Rng rng(7);
  const auto d = draw_inputs(tm, net, 3, rng);
  CHECK(d[0].ues == 5);
  CHECK(d[0].dl_prbs == 0);
  CHECK(d[0].ul_prbs == 100);
  CHECK(d[1].ues == std::round(d[1].ues));

  Rng a(42), b(42);
  CHECK(draw_inputs(tm, net, 3, a) == draw_inputs(tm, net, 3, b));

  Rng big(3);
  double sum = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) sum += draw_inputs(tm, net, 1, big)[1].dl_prbs;
  CHECK(std::abs(sum / n - 50.0) < 4 * 10 / std::sqrt(double(n)));
}
