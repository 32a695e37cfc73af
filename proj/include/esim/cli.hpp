#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "esim/abm.hpp"
#include "esim/energymodel.hpp"
#include "esim/ratemodel.hpp"

namespace esim {

/// Settings shared by the subcommands. Loaded from a JSON file named by
/// --config or $ESIM_CONFIG; command-line flags take precedence.
struct RunManifest {
  std::string data;    // dataset directory
  std::string models;  // model directory
  std::string out;     // output directory
  AbmConfig abm;
  EnergyHyper energy;
  GbtHyper rate;
  double train_fraction = 0.8;  // leading share of days used for training
};

RunManifest parse_manifest(const std::string& json_text);

inline const char* const kConfigEnv = "ESIM_CONFIG";

/// Runs one command line (without the program name) and returns the exit
/// status. Errors are reported on `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace esim
