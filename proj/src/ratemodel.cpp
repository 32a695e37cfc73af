#include "esim/ratemodel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "esim/error.hpp"
#include "esim/parallel.hpp"
#include "json.hpp"

namespace esim {

using json = nlohmann::json;

double avg_rate_from_kpis(const CellKpiRecord& k) {
  if (!(k.t_dl_minus > 0.0)) {
    throw ZeroActiveTime(fmt::format("cell {} day {} hour {}: no active transmission time", raw(k.cell), k.day, k.hour));
  }
  return (k.v_dl - k.v_dl_minus) / k.t_dl_minus / 1e6;
}

std::vector<double> default_rate_bin_edges() {
  std::vector<double> edges{0.0};
  for (int k = 0; k < kRateBinCount; ++k) {
    edges.push_back(0.5 * std::pow(600.0, static_cast<double>(k) / (kRateBinCount - 1)));
  }
  edges.back() = 300.0;
  return edges;
}

double p5_rate_from_bins(std::span<const double> counters, std::span<const double> edges) {
  if (edges.size() != counters.size() + 1) throw InvalidConfig("rate bins need one more edge than counters");
  const double total = std::accumulate(counters.begin(), counters.end(), 0.0);
  if (!(total > 0.0)) throw EmptyCounters("rate bin counters are all zero");
  const double target = 0.05 * total;
  double cumulative = 0.0;
  for (std::size_t g = 0; g < counters.size(); ++g) {
    if (counters[g] <= 0.0) continue;
    if (cumulative + counters[g] >= target) {
      return edges[g] + (target - cumulative) / counters[g] * (edges[g + 1] - edges[g]);
    }
    cumulative += counters[g];
  }
  return edges.back();
}

// ---------------------------------------------------------------------------
// Trees

double RegressionTree::predict(std::span<const double> x) const {
  int i = 0;
  while (nodes[i].feature >= 0) i = x[nodes[i].feature] <= nodes[i].threshold ? nodes[i].left : nodes[i].right;
  return nodes[i].value;
}

int RegressionTree::leaf_count() const {
  return static_cast<int>(std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.feature < 0; }));
}

int RegressionTree::depth() const {
  std::vector<int> d(nodes.size(), 0);
  int deepest = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {  // children always follow their parent
    deepest = std::max(deepest, d[i]);
    if (nodes[i].feature >= 0) d[nodes[i].left] = d[nodes[i].right] = d[i] + 1;
  }
  return deepest;
}

namespace {

class TreeBuilder {
 public:
  TreeBuilder(const std::vector<std::vector<double>>& x, std::span<const double> y, int max_depth, int min_leaf)
      : x_(x), y_(y), max_depth_(max_depth), min_leaf_(std::max(1, min_leaf)), mark_(x.size(), -1) {
    const std::size_t features = x.empty() ? 0 : x.front().size();
    sorted_.resize(features);
    for (std::size_t f = 0; f < features; ++f) {
      auto& order = sorted_[f];
      order.resize(x.size());
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a][f] < x[b][f]; });
    }
  }

  RegressionTree build() {
    std::vector<std::size_t> all(x_.size());
    std::iota(all.begin(), all.end(), 0);
    grow(all, 0);
    return std::move(tree_);
  }

 private:
  int grow(const std::vector<std::size_t>& members, int depth) {
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    double sum = 0.0;
    for (auto i : members) sum += y_[i];
    const auto n = members.size();
    tree_.nodes[id].value = sum / static_cast<double>(n);
    if (depth >= max_depth_ || n < 2 * static_cast<std::size_t>(min_leaf_)) return id;

    for (auto i : members) mark_[i] = id;
    int best_feature = -1;
    double best_threshold = 0.0;
    double best_score = sum * sum / static_cast<double>(n);
    std::vector<std::size_t> ordered;
    ordered.reserve(n);
    for (std::size_t f = 0; f < sorted_.size(); ++f) {
      ordered.clear();
      for (auto i : sorted_[f]) {
        if (mark_[i] == id) ordered.push_back(i);
      }
      double left = 0.0;
      for (std::size_t k = 1; k < n; ++k) {
        left += y_[ordered[k - 1]];
        const double lo = x_[ordered[k - 1]][f];
        const double hi = x_[ordered[k]][f];
        if (!(lo < hi) || k < static_cast<std::size_t>(min_leaf_) || n - k < static_cast<std::size_t>(min_leaf_)) {
          continue;
        }
        const double right = sum - left;
        const double score =
            left * left / static_cast<double>(k) + right * right / static_cast<double>(n - k);
        if (score > best_score) {
          best_score = score;
          best_feature = static_cast<int>(f);
          best_threshold = lo + (hi - lo) / 2.0;
          if (!(best_threshold < hi)) best_threshold = lo;
        }
      }
    }
    if (best_feature < 0) return id;

    std::vector<std::size_t> left_members;
    std::vector<std::size_t> right_members;
    for (auto i : members) {
      (x_[i][best_feature] <= best_threshold ? left_members : right_members).push_back(i);
    }
    tree_.nodes[id].feature = best_feature;
    tree_.nodes[id].threshold = best_threshold;
    const int l = grow(left_members, depth + 1);
    const int r = grow(right_members, depth + 1);
    tree_.nodes[id].left = l;
    tree_.nodes[id].right = r;
    return id;
  }

  const std::vector<std::vector<double>>& x_;
  std::span<const double> y_;
  int max_depth_;
  int min_leaf_;
  std::vector<int> mark_;
  std::vector<std::vector<std::size_t>> sorted_;
  RegressionTree tree_;
};

double mse(std::span<const double> y, std::span<const double> f) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += (y[i] - f[i]) * (y[i] - f[i]);
  return s / static_cast<double>(y.size());
}

}  // namespace

RegressionTree fit_tree(const std::vector<std::vector<double>>& x, std::span<const double> y, int max_depth,
                        int min_samples_leaf) {
  if (x.empty() || x.size() != y.size()) throw InvalidConfig("tree training needs matching, non-empty x and y");
  return TreeBuilder(x, y, max_depth, min_samples_leaf).build();
}

double GradientBoostedTrees::predict(std::span<const double> x) const {
  double f = init;
  for (const auto& t : trees) f += learning_rate * t.predict(x);
  return f;
}

GradientBoostedTrees fit_gbt(const std::vector<std::vector<double>>& x, std::span<const double> y,
                             const GbtHyper& hyper, std::vector<double>* train_mse) {
  if (x.empty() || x.size() != y.size()) throw EmptyTrainingSet("boosting needs matching, non-empty x and y");
  if (hyper.trees < 0 || hyper.max_depth < 0 || !(hyper.learning_rate > 0.0)) {
    throw InvalidConfig("invalid boosting hyperparameters");
  }
  GradientBoostedTrees model;
  model.learning_rate = hyper.learning_rate;
  model.init = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  std::vector<double> f(y.size(), model.init);
  std::vector<double> residual(y.size());
  if (train_mse) train_mse->assign(1, mse(y, f));
  for (int t = 0; t < hyper.trees; ++t) {
    for (std::size_t i = 0; i < y.size(); ++i) residual[i] = y[i] - f[i];
    auto tree = fit_tree(x, residual, hyper.max_depth, hyper.min_samples_leaf);
    for (std::size_t i = 0; i < y.size(); ++i) f[i] += hyper.learning_rate * tree.predict(x[i]);
    model.trees.push_back(std::move(tree));
    if (train_mse) train_mse->push_back(mse(y, f));
  }
  return model;
}

// ---------------------------------------------------------------------------
// PMF

RatePmf RatePmf::from_values(std::span<const double> values, double bin_width) {
  if (!(bin_width > 0.0)) throw InvalidConfig("PMF bin width must be > 0");
  RatePmf pmf;
  pmf.bin_width = bin_width;
  if (values.empty()) return pmf;
  for (double v : values) {
    const auto bin = static_cast<std::size_t>(std::floor(std::max(0.0, v) / bin_width));
    if (bin >= pmf.probabilities.size()) pmf.probabilities.resize(bin + 1, 0.0);
    pmf.probabilities[bin] += 1.0;
  }
  for (auto& p : pmf.probabilities) p /= static_cast<double>(values.size());
  return pmf;
}

double RatePmf::sample(Rng& rng) const {
  if (empty()) throw EmptyTrainingSet("sampling an empty rate PMF");
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const double u = uniform(rng);
  double cumulative = 0.0;
  std::size_t bin = probabilities.size() - 1;
  for (std::size_t k = 0; k < probabilities.size(); ++k) {
    if (probabilities[k] <= 0.0) continue;
    cumulative += probabilities[k];
    bin = k;
    if (u < cumulative) break;
  }
  return (static_cast<double>(bin) + uniform(rng)) * bin_width;
}

double RatePmf::mean() const {
  double m = 0.0;
  for (std::size_t k = 0; k < probabilities.size(); ++k) m += probabilities[k] * (static_cast<double>(k) + 0.5) * bin_width;
  return m;
}

double RatePmf::cdf(double x) const {
  double c = 0.0;
  for (std::size_t k = 0; k < probabilities.size(); ++k) {
    const double lo = static_cast<double>(k) * bin_width;
    if (x >= lo + bin_width) {
      c += probabilities[k];
    } else if (x > lo) {
      c += probabilities[k] * (x - lo) / bin_width;
    }
  }
  return std::min(c, 1.0);
}

// ---------------------------------------------------------------------------
// Rate model

std::vector<RateSample> rate_samples(const Datasets& data, std::span<const double> bin_edges) {
  std::vector<RateSample> out;
  for (const auto& k : data.kpis) {
    if (k.cs_minutes >= 60.0) continue;
    const auto& cell = data.network.cell(k.cell);
    RateSample s;
    s.cell = k.cell;
    s.day = k.day;
    s.hour = k.hour;
    s.dl_prb_load = std::clamp(k.dl_prbs / cell.n_dl_prb, 0.0, 1.0);
    s.rrc_ues = k.rrc_ues;
    if (k.t_dl_minus > 0.0) s.avg_mbps = avg_rate_from_kpis(k);
    if (std::accumulate(k.rate_bins.begin(), k.rate_bins.end(), 0.0) > 0.0) {
      s.ce_mbps = p5_rate_from_bins(k.rate_bins, bin_edges);
    }
    if (s.avg_mbps || s.ce_mbps) out.push_back(s);
  }
  return out;
}

namespace {

struct Fitted {
  std::optional<GradientBoostedTrees> ensemble;
  RatePmf pmf;
  double mean = 0.0;
};

Fitted fit_target(const std::vector<const RateSample*>& samples, std::optional<double> RateSample::*target,
                  const GbtHyper& hyper, double cutoff) {
  Fitted out;
  std::vector<std::vector<double>> x;
  std::vector<double> y;
  std::vector<double> low;
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto* s : samples) {
    const auto& value = s->*target;
    if (!value) continue;
    sum += *value;
    ++n;
    if (s->dl_prb_load >= cutoff) {
      x.push_back({s->dl_prb_load, s->rrc_ues});
      y.push_back(*value);
    } else {
      low.push_back(*value);
    }
  }
  if (n > 0) out.mean = sum / static_cast<double>(n);
  if (!y.empty()) out.ensemble = fit_gbt(x, y, hyper);
  out.pmf = RatePmf::from_values(low);
  return out;
}

}  // namespace

RateModel train_rate_model(std::span<const RateSample> samples, const GbtHyper& hyper, double cutoff,
                           std::vector<double> bin_edges, int threads) {
  if (samples.empty()) throw EmptyTrainingSet("rate model needs samples");
  std::map<CellId, std::vector<const RateSample*>> by_cell;
  for (const auto& s : samples) by_cell[s.cell].push_back(&s);

  std::vector<CellId> ids;
  for (const auto& [id, _] : by_cell) ids.push_back(id);
  std::vector<CellRateModel> fitted(ids.size());
  parallel_for(ids.size(), threads, [&](std::size_t i) {
    const auto& cell_samples = by_cell.at(ids[i]);
    auto avg = fit_target(cell_samples, &RateSample::avg_mbps, hyper, cutoff);
    auto ce = fit_target(cell_samples, &RateSample::ce_mbps, hyper, cutoff);
    fitted[i] = CellRateModel{std::move(avg.ensemble), std::move(ce.ensemble), std::move(avg.pmf), std::move(ce.pmf),
                              avg.mean, ce.mean};
  });

  RateModel model;
  model.cutoff = cutoff;
  model.bin_edges = std::move(bin_edges);
  for (std::size_t i = 0; i < ids.size(); ++i) model.cells[ids[i]] = std::move(fitted[i]);
  return model;
}

namespace {

const CellRateModel& find_cell_model(const RateModel& model, CellId cell) {
  const auto it = model.cells.find(cell);
  if (it == model.cells.end()) throw UnknownCell("no rate model for cell " + to_string(cell));
  return it->second;
}

double route(const std::optional<GradientBoostedTrees>& ensemble, const RatePmf& pmf, double fallback, double cutoff,
             double load, double ues, Rng* rng) {
  const double x[2] = {load, ues};
  const bool use_ensemble = ensemble && (load >= cutoff || pmf.empty());
  if (use_ensemble) return std::max(0.0, ensemble->predict(x));
  if (!pmf.empty()) return rng ? pmf.sample(*rng) : pmf.mean();
  return fallback;
}

}  // namespace

RatePrediction predict_rate(const RateModel& model, CellId cell, double dl_prb_load, double rrc_ues, Rng& rng) {
  const auto& m = find_cell_model(model, cell);
  return RatePrediction{route(m.avg, m.avg_pmf, m.avg_mean, model.cutoff, dl_prb_load, rrc_ues, &rng),
                        route(m.ce, m.ce_pmf, m.ce_mean, model.cutoff, dl_prb_load, rrc_ues, &rng)};
}

RatePrediction expected_rate(const RateModel& model, CellId cell, double dl_prb_load, double rrc_ues) {
  const auto& m = find_cell_model(model, cell);
  return RatePrediction{route(m.avg, m.avg_pmf, m.avg_mean, model.cutoff, dl_prb_load, rrc_ues, nullptr),
                        route(m.ce, m.ce_pmf, m.ce_mean, model.cutoff, dl_prb_load, rrc_ues, nullptr)};
}

// ---------------------------------------------------------------------------
// Bundle

namespace {

json tree_to_json(const RegressionTree& tree) {
  std::vector<int> f, l, r;
  std::vector<double> t, v;
  for (const auto& n : tree.nodes) {
    f.push_back(n.feature);
    t.push_back(n.threshold);
    l.push_back(n.left);
    r.push_back(n.right);
    v.push_back(n.value);
  }
  return json{{"feature", f}, {"threshold", t}, {"left", l}, {"right", r}, {"value", v}};
}

RegressionTree tree_from_json(const json& j) {
  const auto f = j.at("feature").get<std::vector<int>>();
  const auto t = j.at("threshold").get<std::vector<double>>();
  const auto l = j.at("left").get<std::vector<int>>();
  const auto r = j.at("right").get<std::vector<int>>();
  const auto v = j.at("value").get<std::vector<double>>();
  if (t.size() != f.size() || l.size() != f.size() || r.size() != f.size() || v.size() != f.size() || f.empty()) {
    throw InvalidConfig("tree arrays differ in length");
  }
  RegressionTree tree;
  const auto n = static_cast<int>(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f[i] >= 0 && (l[i] <= static_cast<int>(i) || r[i] <= static_cast<int>(i) || l[i] >= n || r[i] >= n)) {
      throw InvalidConfig("tree child index out of range");
    }
    tree.nodes.push_back(TreeNode{f[i], t[i], l[i], r[i], v[i]});
  }
  return tree;
}

json ensemble_to_json(const std::optional<GradientBoostedTrees>& g) {
  if (!g) return nullptr;
  json trees = json::array();
  for (const auto& t : g->trees) trees.push_back(tree_to_json(t));
  return json{{"init", g->init}, {"learning_rate", g->learning_rate}, {"trees", trees}};
}

std::optional<GradientBoostedTrees> ensemble_from_json(const json& j) {
  if (j.is_null()) return std::nullopt;
  GradientBoostedTrees g;
  g.init = j.at("init").get<double>();
  g.learning_rate = j.at("learning_rate").get<double>();
  for (const auto& t : j.at("trees")) g.trees.push_back(tree_from_json(t));
  return g;
}

json pmf_to_json(const RatePmf& p) { return json{{"bin_width_mbps", p.bin_width}, {"probabilities", p.probabilities}}; }

RatePmf pmf_from_json(const json& j) {
  RatePmf p;
  p.bin_width = j.at("bin_width_mbps").get<double>();
  p.probabilities = j.at("probabilities").get<std::vector<double>>();
  return p;
}

}  // namespace

std::string save_rate_model(const RateModel& model) {
  json cells = json::array();
  for (const auto& [id, m] : model.cells) {
    cells.push_back(json{{"cell_id", raw(id)},
                         {"avg", ensemble_to_json(m.avg)},
                         {"ce", ensemble_to_json(m.ce)},
                         {"avg_pmf", pmf_to_json(m.avg_pmf)},
                         {"ce_pmf", pmf_to_json(m.ce_pmf)},
                         {"avg_mean_mbps", m.avg_mean},
                         {"ce_mean_mbps", m.ce_mean}});
  }
  const json j{{"format", "esim-rate-model"},
               {"version", 1},
               {"features", {"dl_prb_load", "rrc_ues"}},
               {"low_load_cutoff", model.cutoff},
               {"rate_bin_edges_mbps", model.bin_edges},
               {"cells", cells}};
  return j.dump() + "\n";
}

RateModel load_rate_model(const std::string& text) {
  try {
    const auto j = json::parse(text);
    if (j.at("format") != "esim-rate-model") throw InvalidConfig("not a rate model bundle");
    RateModel model;
    model.cutoff = j.at("low_load_cutoff").get<double>();
    model.bin_edges = j.at("rate_bin_edges_mbps").get<std::vector<double>>();
    for (const auto& c : j.at("cells")) {
      CellRateModel m;
      m.avg = ensemble_from_json(c.at("avg"));
      m.ce = ensemble_from_json(c.at("ce"));
      m.avg_pmf = pmf_from_json(c.at("avg_pmf"));
      m.ce_pmf = pmf_from_json(c.at("ce_pmf"));
      m.avg_mean = c.at("avg_mean_mbps").get<double>();
      m.ce_mean = c.at("ce_mean_mbps").get<double>();
      model.cells[CellId(c.at("cell_id").get<std::int32_t>())] = std::move(m);
    }
    return model;
  } catch (const json::exception& e) {
    throw InvalidConfig(std::string("malformed rate model bundle: ") + e.what());
  }
}

}  // namespace esim
