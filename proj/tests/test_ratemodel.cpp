#include <cmath>
#include <limits>

#include "doctest.h"
#include "esim/error.hpp"
#include "esim/ratemodel.hpp"

using namespace esim;

TEST_CASE("average rate from counters") {
  CellKpiRecord k;
  k.v_dl = 1e8;
  k.v_dl_minus = 2e7;
  k.t_dl_minus = 2;
  CHECK(avg_rate_from_kpis(k) == doctest::Approx(40));
  k.v_dl_minus = k.v_dl;
  CHECK(avg_rate_from_kpis(k) == 0);
  k.t_dl_minus = 0;
  CHECK_THROWS_AS(avg_rate_from_kpis(k), ZeroActiveTime);
}

TEST_CASE("5th percentile from binned counters") {
  CHECK(p5_rate_from_bins(std::vector{100.0}, std::vector{0.0, 1.0}) == doctest::Approx(0.05));
  CHECK(p5_rate_from_bins(std::vector{5.0, 95.0}, std::vector{0.0, 1.0, 2.0}) == doctest::Approx(1.0));
  CHECK(p5_rate_from_bins(std::vector{0.0, 10.0}, std::vector{0.0, 1.0, 3.0}) == doctest::Approx(1.1));
  CHECK_THROWS_AS(p5_rate_from_bins(std::vector{0.0, 0.0}, std::vector{0.0, 1.0, 2.0}), EmptyCounters);

  const auto edges = default_rate_bin_edges();
  REQUIRE(edges.size() == 16);
  CHECK(edges[0] == 0);
  CHECK(edges[1] == doctest::Approx(0.5));
  CHECK(edges[15] == doctest::Approx(300));
}

namespace {

// exhaustive single split over midpoints
std::pair<double, double> best_split(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> values = x;
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  double best_sse = std::numeric_limits<double>::infinity(), best_thr = 0;
  for (std::size_t i = 0; i + 1 < values.size(); ++i) {
    const double thr = (values[i] + values[i + 1]) / 2;
    double sl = 0, sr = 0, nl = 0, nr = 0;
    for (std::size_t k = 0; k < x.size(); ++k) (x[k] <= thr ? (sl += y[k], nl++) : (sr += y[k], nr++));
    double sse = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      const double m = x[k] <= thr ? sl / nl : sr / nr;
      sse += (y[k] - m) * (y[k] - m);
    }
    if (sse < best_sse - 1e-12) best_sse = sse, best_thr = thr;
  }
  return {best_thr, best_sse};
}

}  // namespace

TEST_CASE("first split matches an exhaustive search") {
  Rng rng(12);
  std::uniform_real_distribution<double> u(0, 10);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + trial % 19;
    std::vector<double> x(n), y(n);
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < n; ++i) {
      x[i] = std::round(u(rng));
      y[i] = u(rng);
      rows.push_back({x[i]});
    }
    const auto tree = fit_tree(rows, y, 1);
    const auto [thr, sse] = best_split(x, y);
    if (tree.nodes.size() == 1) {
      CHECK_FALSE(std::isfinite(sse));
      continue;
    }
    CHECK(tree.nodes[0].threshold == doctest::Approx(thr));
  }
}

TEST_CASE("trees and boosting") {
  Rng rng(5);
  std::uniform_real_distribution<double> u(0, 1);
  std::normal_distribution<double> noise(0, 0.1);
  std::vector<std::vector<double>> x;
  std::vector<double> y;
  for (int i = 0; i < 1000; ++i) {
    const double l = u(rng);
    x.push_back({l, u(rng)});
    y.push_back(5 * l + noise(rng));
  }
  const auto tree = fit_tree(x, y, 4);
  CHECK(tree.depth() <= 4);
  CHECK(tree.leaf_count() <= 16);

  std::vector<double> mse;
  const std::vector<std::vector<double>> xtr(x.begin(), x.begin() + 800);
  const std::vector<double> ytr(y.begin(), y.begin() + 800);
  const auto gbt = fit_gbt(xtr, ytr, GbtHyper{}, &mse);
  CHECK(gbt.trees.size() == 500);
  REQUIRE(mse.size() == 501);
  for (std::size_t i = 1; i < mse.size(); ++i) CHECK(mse[i] <= mse[i - 1] + 1e-12);

  double mean = 0;
  for (std::size_t i = 800; i < 1000; ++i) mean += y[i] / 200;
  double ss_res = 0, ss_tot = 0;
  for (std::size_t i = 800; i < 1000; ++i) {
    ss_res += std::pow(gbt.predict(x[i]) - y[i], 2);
    ss_tot += std::pow(y[i] - mean, 2);
  }
  CHECK(1 - ss_res / ss_tot > 0.95);

  const std::vector<double> flat(800, 3.5);
  const auto constant = fit_gbt(xtr, flat, GbtHyper{20, 4, 0.01, 1});
  CHECK(constant.predict(std::vector{0.3, 0.1}) == doctest::Approx(3.5));
}

TEST_CASE("low-load histogram") {
  const auto pmf = RatePmf::from_values(std::vector{30.2, 30.7});
  CHECK(pmf.probabilities.size() == 31);
  CHECK(pmf.probabilities[30] == 1.0);
  CHECK(pmf.mean() == doctest::Approx(30.5));
  CHECK(pmf.cdf(30.5) == doctest::Approx(0.5));
  Rng rng(1);
  for (int i = 0; i < 100; ++i) {
    const double v = pmf.sample(rng);
    CHECK(v >= 30);
    CHECK(v < 31);
  }
}

namespace {

RateSample sample(int cell, double load, double ues, double rate) {
  RateSample s;
  s.cell = CellId(cell);
  s.dl_prb_load = load;
  s.rrc_ues = ues;
  s.avg_mbps = rate;
  s.ce_mbps = rate / 4;
  return s;
}

}  // namespace

TEST_CASE("rate model routing") {
  std::vector<RateSample> s;
  for (int i = 0; i < 50; ++i) {
    s.push_back(sample(1, 0.05, 2, 30.5));
    s.push_back(sample(1, 0.2 + i * 0.01, 10, 12));
    s.push_back(sample(2, 0.05, 1, 8.5));
  }
  const auto model = train_rate_model(s, GbtHyper{50, 3, 0.1, 1});
  CHECK(model.cells.at(CellId(1)).avg.has_value());
  CHECK_FALSE(model.cells.at(CellId(2)).avg.has_value());

  Rng rng(3);
  const auto low = predict_rate(model, CellId(1), 0.05, 2, rng);
  CHECK(low.avg_mbps >= 30);
  CHECK(low.avg_mbps < 31);
  CHECK(predict_rate(model, CellId(1), kLowLoadCutoff, 2, rng).avg_mbps == doctest::Approx(12));
  CHECK(predict_rate(model, CellId(2), 0.5, 2, rng).avg_mbps < 9);
  CHECK(expected_rate(model, CellId(2), 0.01, 1).avg_mbps == doctest::Approx(8.5));
  CHECK_THROWS_AS(predict_rate(model, CellId(9), 0.5, 2, rng), UnknownCell);

  auto negative = model;
  auto& ens = *negative.cells.at(CellId(1)).avg;
  ens.init = -5;
  ens.trees.clear();
  CHECK(predict_rate(negative, CellId(1), 0.5, 2, rng).avg_mbps == 0);

  CHECK(load_rate_model(save_rate_model(model)) == model);
  CHECK(train_rate_model(s, GbtHyper{50, 3, 0.1, 1}, kLowLoadCutoff, default_rate_bin_edges(), 1) == model);
}
