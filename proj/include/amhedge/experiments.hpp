// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "amhedge/calibration.hpp"
#include "amhedge/data_io.hpp"
#include "amhedge/ddpg.hpp"

namespace amh {

struct ChebSettings {
  int n_s = 50;
  int n_v = 20;
  int mc_per_node = 1000;
  std::size_t pilot_paths = 1000;
  double buffer = 0.10;
  int steps = 0;  // 0: use the test rebalance count
};

/// One reproducible run. Every field has a documented default except `mode`
/// and `seed`, which must be given explicitly.
struct ExperimentConfig {
  std::string mode;  // gbm | sv-arbitrary | sv-calibrated
  std::uint64_t seed = 0;
  double rate = 0.05;

  double s0 = 100.0;
  double strike = 100.0;
  double maturity = 1.0;

  double mu = 0.05;
  double sigma = 0.2;  // GBM volatility or initial SV volatility
  double nu = 0.1;
  double rho = -0.4;

  int tree_steps = 5000;
  ChebSettings cheb;

  AgentHyperparams training;

  std::size_t test_paths = 10000;
  int test_rebalances = 100;
  std::vector<double> lambdas = {0.0, 0.03};
  double buyer_sigma = 0.0;  // 0: same as sigma
  std::optional<std::uint64_t> test_seed;

  std::string data_dir;  // empty: AMHEDGE_DATA_DIR or ./data
  std::string option_chain = "option_chain.csv";
  std::string price_series = "asset_paths.csv";
  std::string calibration;  // symbol-parameter JSON; empty: calibrate on the fly

  std::string agent_checkpoint;
  std::string agent_dir;

  CalibrationBounds bounds;
  CalibrationOptions calib;

  std::string symbol;
  std::optional<Date> option_maturity;
  std::optional<double> option_strike;

  std::string out_dir = "out";

  std::string source_text;  // config file contents, echoed verbatim

  static ExperimentConfig from_json_text(const std::string& text);
  static ExperimentConfig load(const std::string& path);
  nlohmann::json to_json() const;
  void validate() const;

  std::string resolve_data(const std::string& file) const;
  std::uint64_t derived_seed(std::uint64_t stream) const;
};

/// Command-line overrides applied on top of a loaded config.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<double> lambda;
  std::optional<std::string> out;
  std::optional<std::string> symbol;
  std::optional<std::string> maturity;
  std::optional<double> strike;
  std::optional<std::size_t> paths;
  std::optional<int> steps;
  std::optional<std::string> checkpoint;
};

void apply_overrides(ExperimentConfig& cfg, const Overrides& o);

/// Runs one of train, calibrate, evaluate, evaluate-empirical, price, boundary.
/// Progress goes to `log`; `price` also writes its result to `out`. Files
/// written by a failing command are removed before the error propagates.
void run_command(const std::string& command, const ExperimentConfig& cfg, std::ostream& out, std::ostream& log);

const std::vector<std::string>& command_names();

}  // namespace amh
