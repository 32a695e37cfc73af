#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "esim/datamodel.hpp"
#include "esim/random.hpp"

namespace esim {

inline constexpr int kFeaturesPerCarrier = 10;
inline constexpr int kTxModeSlots = 4;
inline constexpr double kSigmaEpsilon = 1e-3;

/// Gaussian negative log-likelihood without the constant term.
double nll_loss(double y, double mu, double sigma);  // throws NonPositiveSigma

struct NllGradient {
  double d_mu = 0.0;
  double d_sigma = 0.0;
};

NllGradient nll_gradient(double y, double mu, double sigma);  // throws NonPositiveSigma

/// Fully connected network with ReLU hidden layers and a two-unit sigmoid
/// output read as (mu, sigma) on the normalized target scale, where
/// sigma = eps + (1 - eps) * output[1].
class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(std::vector<int> sizes);

  void init_he(Rng& rng);

  const std::vector<int>& sizes() const { return sizes_; }
  std::size_t parameter_count() const;
  std::vector<double> parameters() const;
  void set_parameters(std::span<const double> values);

  /// Columns of x are samples; returns a 2 x n matrix of (mu, sigma).
  Eigen::MatrixXd predict(const Eigen::MatrixXd& x) const;

  /// Mean loss over the columns of x. When `gradient` is non-null it receives
  /// the derivative with respect to parameters(), in the same order.
  double loss(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::vector<double>* gradient = nullptr) const;

  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;

 private:
  std::vector<int> sizes_;
};

/// Numeric ranges and categorical vocabularies fixed at training time.
struct FeatureSchema {
  int version = 1;
  std::vector<std::string> radio_types;  // sorted
  std::vector<std::string> tx_modes;     // sorted, at most kTxModeSlots
  int max_carriers = kDefaultMaxCarriers;
  // n_trx, frequency, bandwidth, max tx power
  std::array<double, 4> min{};
  std::array<double, 4> max{};

  std::size_t size() const { return radio_types.size() + kFeaturesPerCarrier * static_cast<std::size_t>(max_carriers); }

  bool operator==(const FeatureSchema&) const = default;
};

/// Vocabularies and ranges of a network. Throws UnknownTxMode when the network
/// uses more transmission modes than there are one-hot slots.
FeatureSchema fit_schema(const NetworkConfig& network, int max_carriers = kDefaultMaxCarriers);

/// Hourly operating point of one carrier.
struct CarrierLoad {
  CellId cell{};
  double dl_prb_load = 0.0;  // used / available, in [0, 1]
  double cs_minutes = 0.0;
};

/// Carrier slots are filled in descending bandwidth, then ascending cell id;
/// absent carriers stay zero.
std::vector<double> encode_features(const FeatureSchema& schema, const NetworkConfig& network,
                                    const RadioUnit& radio, std::span<const CarrierLoad> carriers);

struct EnergySample {
  RadioId radio_unit{};
  int day = 0;
  int hour = 1;
  std::vector<double> features;
  double energy_wh = 0.0;
};

/// Joins energy records with the KPIs of the radio unit's carriers for the
/// same day and hour. Records without a complete set of KPIs are skipped.
std::vector<EnergySample> energy_samples(const Datasets& data, const FeatureSchema& schema);

struct EnergyHyper {
  double learning_rate = 1e-3;
  int batch_size = 32;
  int max_epochs = 2000;
  int patience = 200;
  double validation_fraction = 0.2;
  std::vector<int> hidden = {40, 15};
  std::uint64_t seed = 1;
};

struct EnergyModel {
  FeatureSchema schema;
  Mlp net;
  double energy_scale = 1.0;  // training maximum, Wh
  int epochs = 0;
  double best_validation_loss = 0.0;
  std::vector<double> checkpoint_losses;  // validation loss at every kept checkpoint
};

EnergyModel train_energy_model(std::span<const EnergySample> samples, const FeatureSchema& schema,
                               const EnergyHyper& hyper = {});

struct EnergyPrediction {
  double mu = 0.0;     // Wh
  double sigma = 0.0;  // Wh
};

EnergyPrediction predict_energy(const EnergyModel& model, std::span<const double> features);

std::string save_energy_model(const EnergyModel& model);
EnergyModel load_energy_model(const std::string& json);

}  // namespace esim
