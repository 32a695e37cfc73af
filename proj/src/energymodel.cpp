#include "esim/energymodel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <tuple>

#include <fmt/format.h>

#include "esim/error.hpp"
#include "json.hpp"

namespace esim {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using json = nlohmann::json;

double nll_loss(double y, double mu, double sigma) {
  if (!(sigma > 0.0)) throw NonPositiveSigma(fmt::format("sigma must be > 0, got {}", sigma));
  const double e = y - mu;
  return std::log(sigma) + e * e / (2.0 * sigma * sigma);
}

NllGradient nll_gradient(double y, double mu, double sigma) {
  if (!(sigma > 0.0)) throw NonPositiveSigma(fmt::format("sigma must be > 0, got {}", sigma));
  const double e = y - mu;
  const double s2 = sigma * sigma;
  return NllGradient{(mu - y) / s2, 1.0 / sigma - e * e / (s2 * sigma)};
}

// ---------------------------------------------------------------------------
// Network

Mlp::Mlp(std::vector<int> sizes) : sizes_(std::move(sizes)) {
  if (sizes_.size() < 2 || sizes_.back() != 2) throw InvalidConfig("network needs an input and a 2-unit output layer");
  for (std::size_t l = 1; l < sizes_.size(); ++l) {
    weights.push_back(MatrixXd::Zero(sizes_[l], sizes_[l - 1]));
    biases.push_back(VectorXd::Zero(sizes_[l]));
  }
}

void Mlp::init_he(Rng& rng) {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / static_cast<double>(weights[l].cols())));
    for (Eigen::Index j = 0; j < weights[l].cols(); ++j) {
      for (Eigen::Index i = 0; i < weights[l].rows(); ++i) weights[l](i, j) = normal(rng);
    }
    biases[l].setZero();
  }
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
  return n;
}

std::vector<double> Mlp::parameters() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  for (std::size_t l = 0; l < weights.size(); ++l) {
    out.insert(out.end(), weights[l].data(), weights[l].data() + weights[l].size());
    out.insert(out.end(), biases[l].data(), biases[l].data() + biases[l].size());
  }
  return out;
}

void Mlp::set_parameters(std::span<const double> values) {
  if (values.size() != parameter_count()) throw InvalidConfig("parameter vector has the wrong length");
  auto it = values.begin();
  for (std::size_t l = 0; l < weights.size(); ++l) {
    std::copy_n(it, weights[l].size(), weights[l].data());
    it += weights[l].size();
    std::copy_n(it, biases[l].size(), biases[l].data());
    it += biases[l].size();
  }
}

namespace {

MatrixXd sigmoid(const MatrixXd& z) { return (1.0 + (-z.array()).exp()).inverse().matrix(); }

}  // namespace

MatrixXd Mlp::predict(const MatrixXd& x) const {
  MatrixXd a = x;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    MatrixXd z = (weights[l] * a).colwise() + biases[l];
    a = l + 1 < weights.size() ? MatrixXd(z.cwiseMax(0.0)) : sigmoid(z);
  }
  a.row(1) = (kSigmaEpsilon + (1.0 - kSigmaEpsilon) * a.row(1).array()).matrix();
  return a;
}

double Mlp::loss(const MatrixXd& x, const VectorXd& y, std::vector<double>* gradient) const {
  const auto layers = weights.size();
  const double n = static_cast<double>(x.cols());
  std::vector<MatrixXd> acts;
  acts.reserve(layers + 1);
  acts.push_back(x);
  for (std::size_t l = 0; l < layers; ++l) {
    MatrixXd z = (weights[l] * acts.back()).colwise() + biases[l];
    acts.push_back(l + 1 < layers ? MatrixXd(z.cwiseMax(0.0)) : sigmoid(z));
  }
  const auto& out = acts.back();
  const Eigen::ArrayXd o0 = out.row(0).transpose().array();
  const Eigen::ArrayXd o1 = out.row(1).transpose().array();
  const Eigen::ArrayXd mu = o0;
  const Eigen::ArrayXd sigma = kSigmaEpsilon + (1.0 - kSigmaEpsilon) * o1;
  const Eigen::ArrayXd err = y.array() - mu;
  const double total = (sigma.log() + err.square() / (2.0 * sigma.square())).sum() / n;
  if (!gradient) return total;

  MatrixXd delta(2, x.cols());
  delta.row(0) = ((mu - y.array()) / sigma.square() * o0 * (1.0 - o0) / n).matrix().transpose();
  delta.row(1) = ((1.0 / sigma - err.square() / sigma.cube()) * (1.0 - kSigmaEpsilon) * o1 * (1.0 - o1) / n)
                     .matrix()
                     .transpose();

  std::vector<MatrixXd> dw(layers);
  std::vector<VectorXd> db(layers);
  for (std::size_t l = layers; l-- > 0;) {
    dw[l] = delta * acts[l].transpose();
    db[l] = delta.rowwise().sum();
    if (l > 0) {
      MatrixXd back = weights[l].transpose() * delta;
      delta = (back.array() * (acts[l].array() > 0.0).cast<double>()).matrix();
    }
  }
  gradient->clear();
  gradient->reserve(parameter_count());
  for (std::size_t l = 0; l < layers; ++l) {
    gradient->insert(gradient->end(), dw[l].data(), dw[l].data() + dw[l].size());
    gradient->insert(gradient->end(), db[l].data(), db[l].data() + db[l].size());
  }
  return total;
}

// ---------------------------------------------------------------------------
// Features

FeatureSchema fit_schema(const NetworkConfig& network, int max_carriers) {
  FeatureSchema schema;
  schema.max_carriers = max_carriers;
  std::set<std::string> types;
  std::set<std::string> modes;
  schema.min.fill(std::numeric_limits<double>::infinity());
  schema.max.fill(-std::numeric_limits<double>::infinity());
  const auto widen = [&](int k, double v) {
    schema.min[k] = std::min(schema.min[k], v);
    schema.max[k] = std::max(schema.max[k], v);
  };
  for (const auto& ru : network.radio_units) {
    types.insert(ru.radio_type);
    modes.insert(ru.carrier_tx_mode);
    for (auto id : ru.cell_ids) {
      const auto& cell = network.cell(id);
      widen(0, ru.n_trx);
      widen(1, cell.frequency_mhz);
      widen(2, cell.bandwidth_mhz);
      widen(3, cell.max_tx_power_dbm);
    }
  }
  if (modes.size() > static_cast<std::size_t>(kTxModeSlots)) {
    throw UnknownTxMode(fmt::format("{} carrier transmission modes, at most {} supported", modes.size(), kTxModeSlots));
  }
  schema.radio_types.assign(types.begin(), types.end());
  schema.tx_modes.assign(modes.begin(), modes.end());
  for (int k = 0; k < 4; ++k) {
    if (schema.min[k] > schema.max[k]) schema.min[k] = schema.max[k] = 0.0;
  }
  return schema;
}

namespace {

double normalize(const FeatureSchema& schema, int k, double v) {
  const double range = schema.max[k] - schema.min[k];
  return range > 0.0 ? (v - schema.min[k]) / range : 1.0;
}

}  // namespace

std::vector<double> encode_features(const FeatureSchema& schema, const NetworkConfig& network,
                                    const RadioUnit& radio, std::span<const CarrierLoad> carriers) {
  if (carriers.size() > static_cast<std::size_t>(schema.max_carriers)) {
    throw TooManyCarriers(fmt::format("radio unit {} has {} carriers, at most {}", raw(radio.id), carriers.size(),
                                      schema.max_carriers));
  }
  std::vector<double> out(schema.size(), 0.0);
  const auto type = std::lower_bound(schema.radio_types.begin(), schema.radio_types.end(), radio.radio_type);
  if (type == schema.radio_types.end() || *type != radio.radio_type) {
    throw UnknownRadioType("unknown radio type '" + radio.radio_type + "'");
  }
  out[type - schema.radio_types.begin()] = 1.0;

  const auto mode = std::lower_bound(schema.tx_modes.begin(), schema.tx_modes.end(), radio.carrier_tx_mode);
  if (mode == schema.tx_modes.end() || *mode != radio.carrier_tx_mode) {
    throw UnknownTxMode("unknown carrier transmission mode '" + radio.carrier_tx_mode + "'");
  }
  const auto mode_index = mode - schema.tx_modes.begin();

  std::vector<std::pair<const Cell*, const CarrierLoad*>> slots;
  for (const auto& c : carriers) slots.emplace_back(&network.cell(c.cell), &c);
  std::sort(slots.begin(), slots.end(), [](const auto& a, const auto& b) {
    if (a.first->bandwidth_mhz != b.first->bandwidth_mhz) return a.first->bandwidth_mhz > b.first->bandwidth_mhz;
    return a.first->id < b.first->id;
  });

  auto base = schema.radio_types.size();
  for (const auto& [cell, load] : slots) {
    out[base + 0] = normalize(schema, 0, radio.n_trx);
    out[base + 1 + mode_index] = 1.0;
    out[base + 5] = normalize(schema, 1, cell->frequency_mhz);
    out[base + 6] = normalize(schema, 2, cell->bandwidth_mhz);
    out[base + 7] = normalize(schema, 3, cell->max_tx_power_dbm);
    out[base + 8] = load->dl_prb_load;
    out[base + 9] = load->cs_minutes / 60.0;
    base += kFeaturesPerCarrier;
  }
  return out;
}

std::vector<EnergySample> energy_samples(const Datasets& data, const FeatureSchema& schema) {
  std::map<std::tuple<CellId, int, int>, const CellKpiRecord*> kpis;
  for (const auto& k : data.kpis) kpis[{k.cell, k.day, k.hour}] = &k;

  std::vector<EnergySample> out;
  for (const auto& e : data.energy) {
    const auto& ru = data.network.radio_unit(e.radio_unit);
    std::vector<CarrierLoad> carriers;
    for (auto id : ru.cell_ids) {
      const auto it = kpis.find({id, e.day, e.hour});
      if (it == kpis.end()) break;
      const auto& cell = data.network.cell(id);
      carriers.push_back(CarrierLoad{id, it->second->dl_prbs / cell.n_dl_prb, it->second->cs_minutes});
    }
    if (carriers.size() != ru.cell_ids.size()) continue;
    out.push_back(EnergySample{e.radio_unit, e.day, e.hour, encode_features(schema, data.network, ru, carriers),
                               e.energy_wh});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Training

namespace {

MatrixXd gather(std::span<const EnergySample> samples, std::span<const std::size_t> idx, std::size_t dim) {
  MatrixXd x(dim, idx.size());
  for (std::size_t j = 0; j < idx.size(); ++j) {
    const auto& f = samples[idx[j]].features;
    for (std::size_t i = 0; i < dim; ++i) x(i, j) = f[i];
  }
  return x;
}

VectorXd gather_targets(std::span<const EnergySample> samples, std::span<const std::size_t> idx, double scale) {
  VectorXd y(idx.size());
  for (std::size_t j = 0; j < idx.size(); ++j) y(j) = samples[idx[j]].energy_wh / scale;
  return y;
}

}  // namespace

EnergyModel train_energy_model(std::span<const EnergySample> samples, const FeatureSchema& schema,
                               const EnergyHyper& hyper) {
  if (samples.size() < 2) throw EmptyTrainingSet("energy model needs at least 2 samples");
  if (hyper.batch_size < 1 || hyper.max_epochs < 1 || hyper.patience < 1 || !(hyper.learning_rate > 0.0)) {
    throw InvalidConfig("invalid energy model hyperparameters");
  }
  const auto dim = schema.size();
  for (const auto& s : samples) {
    if (s.features.size() != dim) throw InvalidConfig("feature vector length does not match the schema");
  }

  EnergyModel model;
  model.schema = schema;
  double scale = 0.0;
  for (const auto& s : samples) scale = std::max(scale, s.energy_wh);
  model.energy_scale = scale > 0.0 ? scale : 1.0;

  auto rng = make_stream(hyper.seed, {0x656e65726779ULL});
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  auto n_val = static_cast<std::size_t>(std::lround(hyper.validation_fraction * static_cast<double>(samples.size())));
  n_val = std::clamp<std::size_t>(n_val, 1, samples.size() - 1);
  std::vector<std::size_t> val(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> train(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());

  std::vector<int> sizes{static_cast<int>(dim)};
  sizes.insert(sizes.end(), hyper.hidden.begin(), hyper.hidden.end());
  sizes.push_back(2);
  model.net = Mlp(sizes);
  model.net.init_he(rng);

  const MatrixXd x_val = gather(samples, val, dim);
  const VectorXd y_val = gather_targets(samples, val, model.energy_scale);

  auto params = model.net.parameters();
  std::vector<double> m(params.size(), 0.0);
  std::vector<double> v(params.size(), 0.0);
  std::vector<double> grad;
  const double beta1 = 0.9;
  const double beta2 = 0.999;
  const double adam_eps = 1e-8;
  long t = 0;

  auto best = params;
  double best_loss = model.net.loss(x_val, y_val);
  model.checkpoint_losses.push_back(best_loss);
  int since_best = 0;
  const auto batch = static_cast<std::size_t>(hyper.batch_size);

  for (int epoch = 1; epoch <= hyper.max_epochs; ++epoch) {
    std::shuffle(train.begin(), train.end(), rng);
    for (std::size_t start = 0; start < train.size(); start += batch) {
      const auto count = std::min(batch, train.size() - start);
      const std::span<const std::size_t> idx(train.data() + start, count);
      model.net.loss(gather(samples, idx, dim), gather_targets(samples, idx, model.energy_scale), &grad);
      ++t;
      const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
      const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
      for (std::size_t k = 0; k < params.size(); ++k) {
        m[k] = beta1 * m[k] + (1.0 - beta1) * grad[k];
        v[k] = beta2 * v[k] + (1.0 - beta2) * grad[k] * grad[k];
        params[k] -= hyper.learning_rate * (m[k] / c1) / (std::sqrt(v[k] / c2) + adam_eps);
      }
      model.net.set_parameters(params);
    }
    model.epochs = epoch;
    const double val_loss = model.net.loss(x_val, y_val);
    if (val_loss < best_loss) {
      best_loss = val_loss;
      best = params;
      model.checkpoint_losses.push_back(val_loss);
      since_best = 0;
    } else if (++since_best >= hyper.patience) {
      break;
    }
  }
  model.net.set_parameters(best);
  model.best_validation_loss = best_loss;
  return model;
}

EnergyPrediction predict_energy(const EnergyModel& model, std::span<const double> features) {
  if (features.size() != model.schema.size()) throw InvalidConfig("feature vector length does not match the schema");
  const MatrixXd x = Eigen::Map<const VectorXd>(features.data(), static_cast<Eigen::Index>(features.size()));
  const MatrixXd out = model.net.predict(x);
  return EnergyPrediction{out(0, 0) * model.energy_scale, out(1, 0) * model.energy_scale};
}

// ---------------------------------------------------------------------------
// Checkpoints

std::string save_energy_model(const EnergyModel& model) {
  json j;
  j["format"] = "esim-energy-model";
  j["schema"] = {{"version", model.schema.version},
                 {"radio_types", model.schema.radio_types},
                 {"tx_modes", model.schema.tx_modes},
                 {"max_carriers", model.schema.max_carriers},
                 {"numeric_features", {"n_trx", "frequency_mhz", "bandwidth_mhz", "max_tx_power_dbm"}},
                 {"min", model.schema.min},
                 {"max", model.schema.max}};
  j["layer_sizes"] = model.net.sizes();
  json layers = json::array();
  for (std::size_t l = 0; l < model.net.weights.size(); ++l) {
    const auto& w = model.net.weights[l];
    json rows = json::array();
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      std::vector<double> row(static_cast<std::size_t>(w.cols()));
      for (Eigen::Index c = 0; c < w.cols(); ++c) row[c] = w(r, c);
      rows.push_back(row);
    }
    const auto& b = model.net.biases[l];
    layers.push_back({{"weights", rows}, {"bias", std::vector<double>(b.data(), b.data() + b.size())}});
  }
  j["layers"] = layers;
  j["hidden_activation"] = "relu";
  j["output_activation"] = "sigmoid";
  j["sigma_epsilon"] = kSigmaEpsilon;
  j["energy_scale_wh"] = model.energy_scale;
  j["epochs"] = model.epochs;
  j["best_validation_loss"] = model.best_validation_loss;
  j["checkpoint_losses"] = model.checkpoint_losses;
  return j.dump(1) + "\n";
}

EnergyModel load_energy_model(const std::string& text) {
  try {
    const auto j = json::parse(text);
    if (j.at("format") != "esim-energy-model") throw InvalidConfig("not an energy model checkpoint");
    EnergyModel model;
    const auto& s = j.at("schema");
    model.schema.version = s.at("version").get<int>();
    model.schema.radio_types = s.at("radio_types").get<std::vector<std::string>>();
    model.schema.tx_modes = s.at("tx_modes").get<std::vector<std::string>>();
    model.schema.max_carriers = s.at("max_carriers").get<int>();
    model.schema.min = s.at("min").get<std::array<double, 4>>();
    model.schema.max = s.at("max").get<std::array<double, 4>>();
    model.net = Mlp(j.at("layer_sizes").get<std::vector<int>>());
    const auto& layers = j.at("layers");
    if (layers.size() != model.net.weights.size()) throw InvalidConfig("layer count mismatch");
    for (std::size_t l = 0; l < layers.size(); ++l) {
      auto& w = model.net.weights[l];
      const auto rows = layers[l].at("weights").get<std::vector<std::vector<double>>>();
      if (rows.size() != static_cast<std::size_t>(w.rows())) throw InvalidConfig("weight shape mismatch");
      for (Eigen::Index r = 0; r < w.rows(); ++r) {
        if (rows[r].size() != static_cast<std::size_t>(w.cols())) throw InvalidConfig("weight shape mismatch");
        for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = rows[r][c];
      }
      const auto bias = layers[l].at("bias").get<std::vector<double>>();
      if (bias.size() != static_cast<std::size_t>(model.net.biases[l].size())) throw InvalidConfig("bias shape mismatch");
      for (std::size_t k = 0; k < bias.size(); ++k) model.net.biases[l](static_cast<Eigen::Index>(k)) = bias[k];
    }
    model.energy_scale = j.at("energy_scale_wh").get<double>();
    model.epochs = j.at("epochs").get<int>();
    model.best_validation_loss = j.at("best_validation_loss").get<double>();
    model.checkpoint_losses = j.at("checkpoint_losses").get<std::vector<double>>();
    return model;
  } catch (const json::exception& e) {
    throw InvalidConfig(std::string("malformed energy model checkpoint: ") + e.what());
  }
}

}  // namespace esim
