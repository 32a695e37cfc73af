#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "esim/datamodel.hpp"
#include "esim/random.hpp"

namespace esim {

inline constexpr double kLowLoadCutoff = 0.1;

/// Mean UE DL rate of a KPI record in Mbps. Throws ZeroActiveTime.
double avg_rate_from_kpis(const CellKpiRecord& k);

/// Default rate-bin edges in Mbps: 0, then 15 geometric edges from 0.5 to 300.
std::vector<double> default_rate_bin_edges();

/// 5th percentile of the binned rate distribution, interpolating linearly
/// inside the bin that crosses 5% of the mass. `edges` has one more entry than
/// `counters`. Throws EmptyCounters.
double p5_rate_from_bins(std::span<const double> counters, std::span<const double> edges);

// ---------------------------------------------------------------------------
// Regression trees and boosting

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;

  bool operator==(const TreeNode&) const = default;
};

/// Binary regression tree; x[feature] <= threshold goes left.
struct RegressionTree {
  std::vector<TreeNode> nodes;

  double predict(std::span<const double> x) const;
  int leaf_count() const;
  int depth() const;

  bool operator==(const RegressionTree&) const = default;
};

/// Rows of x are samples. Splits are exact greedy searches over midpoints of
/// consecutive distinct values, minimizing the squared error.
RegressionTree fit_tree(const std::vector<std::vector<double>>& x, std::span<const double> y, int max_depth,
                        int min_samples_leaf = 1);

struct GbtHyper {
  int trees = 500;
  int max_depth = 4;
  double learning_rate = 0.01;
  int min_samples_leaf = 1;
};

struct GradientBoostedTrees {
  double init = 0.0;
  double learning_rate = 0.01;
  std::vector<RegressionTree> trees;

  double predict(std::span<const double> x) const;

  bool operator==(const GradientBoostedTrees&) const = default;
};

/// Squared-error boosting from the target mean. When `train_mse` is given it
/// receives the training error after 0, 1, ..., trees stages.
GradientBoostedTrees fit_gbt(const std::vector<std::vector<double>>& x, std::span<const double> y,
                             const GbtHyper& hyper, std::vector<double>* train_mse = nullptr);

// ---------------------------------------------------------------------------
// Rate model

/// Histogram of observed rates with fixed-width bins starting at 0.
struct RatePmf {
  double bin_width = 1.0;
  std::vector<double> probabilities;

  static RatePmf from_values(std::span<const double> values, double bin_width = 1.0);
  bool empty() const { return probabilities.empty(); }
  double sample(Rng& rng) const;  // uniform inside the drawn bin
  double mean() const;
  double cdf(double x) const;

  bool operator==(const RatePmf&) const = default;
};

struct RateSample {
  CellId cell{};
  int day = 0;
  int hour = 1;
  double dl_prb_load = 0.0;
  double rrc_ues = 0.0;
  std::optional<double> avg_mbps;
  std::optional<double> ce_mbps;
};

/// One sample per KPI record; a target is absent when its counters carry no
/// information (no active time, or empty rate bins).
std::vector<RateSample> rate_samples(const Datasets& data, std::span<const double> bin_edges);

struct CellRateModel {
  std::optional<GradientBoostedTrees> avg;  // absent: PMF only
  std::optional<GradientBoostedTrees> ce;
  RatePmf avg_pmf;
  RatePmf ce_pmf;
  double avg_mean = 0.0;
  double ce_mean = 0.0;

  bool operator==(const CellRateModel&) const = default;
};

struct RateModel {
  double cutoff = kLowLoadCutoff;
  std::vector<double> bin_edges;
  std::map<CellId, CellRateModel> cells;

  bool operator==(const RateModel&) const = default;
};

RateModel train_rate_model(std::span<const RateSample> samples, const GbtHyper& hyper = {},
                           double cutoff = kLowLoadCutoff, std::vector<double> bin_edges = default_rate_bin_edges(),
                           int threads = 0);

struct RatePrediction {
  double avg_mbps = 0.0;
  double ce_mbps = 0.0;
};

/// Ensemble at load >= cutoff, PMF draw below it. Throws UnknownCell.
RatePrediction predict_rate(const RateModel& model, CellId cell, double dl_prb_load, double rrc_ues, Rng& rng);

/// Same routing without randomness: the PMF contributes its mean.
RatePrediction expected_rate(const RateModel& model, CellId cell, double dl_prb_load, double rrc_ues);

std::string save_rate_model(const RateModel& model);
RateModel load_rate_model(const std::string& json);

}  // namespace esim
