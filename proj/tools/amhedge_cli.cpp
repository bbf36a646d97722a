// SPDX-License-Identifier: Apache-2.0
// Command-line front end. Everything goes through the C API.
#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "amhedge/amhedge.h"

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<double> lambda;
  std::optional<std::string> out;
  std::optional<std::string> symbol;
  std::optional<std::string> maturity;
  std::optional<double> strike;
  std::optional<std::size_t> paths;
  std::optional<int> steps;
  std::optional<std::string> checkpoint;
  bool quiet = false;
};

int fail(amh_status st) {
  std::cerr << "amhedge: error: " << amh_last_error() << '\n';
  return static_cast<int>(st);
}

void log_line(const char* msg, void* user) {
  if (!*static_cast<bool*>(user)) std::cerr << msg << '\n';
}

int run(const std::string& command, const Options& o) {
  amh_config* cfg = nullptr;
  amh_status st = amh_config_load(o.config.c_str(), &cfg);
  if (st != AMH_OK) return fail(st);
  auto apply = [&]() -> amh_status {
    amh_status s = AMH_OK;
    if (o.seed && (s = amh_config_set_seed(cfg, *o.seed)) != AMH_OK) return s;
    if (o.lambda && (s = amh_config_set_lambda(cfg, *o.lambda)) != AMH_OK) return s;
    if (o.out && (s = amh_config_set_output(cfg, o.out->c_str())) != AMH_OK) return s;
    if (o.symbol && (s = amh_config_set_symbol(cfg, o.symbol->c_str())) != AMH_OK) return s;
    if (o.maturity && (s = amh_config_set_maturity(cfg, o.maturity->c_str())) != AMH_OK) return s;
    if (o.strike && (s = amh_config_set_strike(cfg, *o.strike)) != AMH_OK) return s;
    if (o.paths && (s = amh_config_set_paths(cfg, *o.paths)) != AMH_OK) return s;
    if (o.steps && (s = amh_config_set_steps(cfg, *o.steps)) != AMH_OK) return s;
    if (o.checkpoint && (s = amh_config_set_checkpoint(cfg, o.checkpoint->c_str())) != AMH_OK) return s;
    return s;
  };
  st = apply();
  char* result = nullptr;
  if (st == AMH_OK) {
    bool quiet = o.quiet;
    st = amh_run(command.c_str(), cfg, log_line, &quiet, &result);
  }
  amh_config_free(cfg);
  if (st != AMH_OK) return fail(st);
  if (result && *result) std::cout << result << std::flush;
  amh_string_free(result);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hedging American puts with deep reinforcement learning"};
  app.set_version_flag("--version", std::string("amhedge ") + amh_version());
  app.require_subcommand(1);

  Options opts;
  struct Cmd {
    const char* name;
    const char* help;
  };
  const std::vector<Cmd> cmds = {
      {"train", "train a DDPG hedging agent and write its checkpoint"},
      {"calibrate", "fit (rho, nu) per option to market mids and average per symbol"},
      {"evaluate", "simulate test paths and compare hedging strategies"},
      {"evaluate-empirical", "hedge sold options along observed closes"},
      {"price", "price the configured American put and print JSON"},
      {"boundary", "write the binomial and Chebyshev exercise boundaries"},
  };
  for (const auto& c : cmds) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("-c,--config", opts.config, "experiment JSON")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", opts.seed, "master seed");
    sub->add_option("--lambda", opts.lambda, "proportional transaction cost for evaluation");
    sub->add_option("-o,--out", opts.out, "output directory");
    sub->add_option("--symbol", opts.symbol, "underlying symbol");
    sub->add_option("--maturity", opts.maturity, "option maturity, YYYY-MM-DD");
    sub->add_option("--strike", opts.strike, "option strike");
    sub->add_option("--paths", opts.paths, "number of test paths");
    sub->add_option("--steps", opts.steps, "rebalances per test path");
    sub->add_option("--checkpoint", opts.checkpoint, "trained agent checkpoint");
    sub->add_flag("-q,--quiet", opts.quiet, "suppress progress output");
  }

  CLI11_PARSE(app, argc, argv);
  for (const auto* sub : app.get_subcommands()) return run(sub->get_name(), opts);
  return 1;
}
