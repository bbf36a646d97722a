// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <filesystem>
#include <sstream>

#include <json.hpp>

#include "amhedge/binomial.hpp"
#include "amhedge/black_scholes.hpp"
#include "amhedge/csv.hpp"
#include "amhedge/error.hpp"
#include "amhedge/evaluator.hpp"
#include "amhedge/experiments.hpp"
#include "support.hpp"

using namespace amh;
namespace fs = std::filesystem;

namespace {

// Small GBM run rooted in `out`.
std::string small_gbm(const std::string& out) {
  return R"({"mode": "gbm", "seed": 3,
    "pricer": {"tree_steps": 300, "chebyshev": {"n_s": 20, "n_v": 4, "mc_per_node": 200, "pilot_paths": 200}},
    "test": {"paths": 200, "rebalances": 20, "lambdas": [0, 0.01]},
    "output": ")" + out + R"("})";
}

}  // namespace

TEST_CASE("config parsing") {
  const auto c = ExperimentConfig::from_json_text(R"({"mode": "sv-arbitrary", "seed": 9,
      "option": {"maturity": 0.25}, "model": {"nu": 0.3},
      "training": {"episodes": 10, "hidden": 8},
      "test": {"lambdas": [0.03], "seed": 77},
      "selection": {"symbol": "AAPL", "maturity": "2023-09-15", "strike": 175}})");
  CHECK(c.mode == "sv-arbitrary");
  CHECK(c.seed == 9);
  CHECK(c.maturity == 0.25);
  CHECK(c.nu == 0.3);
  CHECK(c.rho == -0.4);
  CHECK(c.training.episodes == 10);
  CHECK(c.training.hidden == 8);
  CHECK(c.training.actor_lr == 5e-6);
  CHECK(c.lambdas == std::vector<double>{0.03});
  CHECK(c.test_seed == 77u);
  CHECK(c.symbol == "AAPL");
  CHECK(*c.option_maturity == *Date::parse("2023-09-15"));
  CHECK(*c.option_strike == 175.0);
  CHECK_NOTHROW(c.validate());

  const auto again = ExperimentConfig::from_json_text(c.to_json().dump());
  CHECK(again.to_json() == c.to_json());

  CHECK_THROWS_AS(ExperimentConfig::from_json_text(R"({"seed": 1})"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json_text(R"({"mode": "gbm"})"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json_text(R"({"mode": "gbm", "seed": 1, "sede": 2})"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json_text(R"({"mode": "gbm", "seed": 1, "model": {"sigma": "x"}})"),
                  ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json_text("{not json"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::load("/nonexistent/config.json"), IoError);
}

TEST_CASE("validation") {
  auto c = ExperimentConfig::from_json_text(R"({"mode": "gbm", "seed": 1})");
  CHECK_NOTHROW(c.validate());
  c.mode = "heston";
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.mode = "gbm";
  c.sigma = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.sigma = 0.2;
  c.training.actor_lr = 1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.training.actor_lr = 5e-6;
  c.agent_checkpoint = "/nonexistent/agent.json";
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("shipped configs load and validate") {
  for (const char* name : {"gbm", "gbm-mismatch", "sv-arbitrary", "sv-calibrated", "empirical"}) {
    CAPTURE(name);
    const auto c = ExperimentConfig::load(test::source_path(std::string("configs/") + name + ".json"));
    CHECK_NOTHROW(c.validate());
  }
}

TEST_CASE("overrides") {
  auto c = ExperimentConfig::from_json_text(R"({"mode": "gbm", "seed": 1})");
  Overrides o;
  o.seed = 5;
  o.lambda = 0.03;
  o.out = "elsewhere";
  o.strike = 110.0;
  o.paths = 50;
  o.steps = 7;
  apply_overrides(c, o);
  CHECK(c.seed == 5);
  CHECK(c.lambdas == std::vector<double>{0.03});
  CHECK(c.out_dir == "elsewhere");
  CHECK(c.strike == 110.0);
  CHECK(c.test_paths == 50);
  CHECK(c.test_rebalances == 7);
  Overrides bad;
  bad.maturity = "15/09/2023";
  CHECK_THROWS_AS(apply_overrides(c, bad), ConfigError);
  CHECK(c.derived_seed(1) != c.derived_seed(2));
}

TEST_CASE("price command") {
  test::TempDir dir;
  const auto c = ExperimentConfig::from_json_text(small_gbm(dir.file("out")));
  std::ostringstream out, log;
  run_command("price", c, out, log);
  const auto j = nlohmann::json::parse(out.str());
  const double tree = build_american_put(100.0, 100.0, 0.05, 0.2, 1.0, 300).price_at(100.0, 0.0);
  CHECK(j.at("binomial_american").get<double>() == tree);
  CHECK(j.at("bs_european").get<double>() == bs::put_price({100.0, 100.0, 0.05, 0.2, 1.0}));
  CHECK(std::abs(j.at("chebyshev_american").get<double>() - tree) < 0.1);
  CHECK_FALSE(fs::exists(dir.file("out")));
  CHECK_THROWS_AS(run_command("fly", c, out, log), ConfigError);
}

TEST_CASE("boundary command") {
  test::TempDir dir;
  const auto c = ExperimentConfig::from_json_text(small_gbm(dir.file("out")));
  std::ostringstream out, log;
  run_command("boundary", c, out, log);
  const auto t = csv::read(dir.file("out/boundary.csv"));
  CHECK(t.header == std::vector<std::string>{"step", "binomial_t", "binomial_boundary", "chebyshev_t",
                                             "chebyshev_boundary"});
  REQUIRE(t.rows.size() == 21);
  CHECK(*csv::parse_double(t.rows.back().fields[2]) == 100.0);
  for (const auto& r : t.rows) CHECK(*csv::parse_double(r.fields[4]) <= 100.0 + 1e-9);
  CHECK(fs::exists(dir.file("out/config.json")));
  CHECK(fs::exists(dir.file("out/resolved_config.json")));
}

TEST_CASE("evaluate command writes reports that load back") {
  test::TempDir dir;
  const auto c = ExperimentConfig::from_json_text(small_gbm(dir.file("out")));
  std::ostringstream out, log;
  run_command("evaluate", c, out, log);
  const auto summary = csv::read(dir.file("out/summary.csv"));
  CHECK(summary.rows.size() == 4);
  const HedgeReport rep = load_report_csv(dir.file("out/report_bs_delta_lambda0.csv"));
  CHECK(rep.pnl.size() == 200);
  const auto js = nlohmann::json::parse(std::ifstream(dir.file("out/summary.json")));
  CHECK(js.at("reports").size() == 4);
  CHECK(js.at("reports")[0].at("mean").get<double>() == rep.mean);
  // Echoed config is the original text.
  std::ifstream echoed(dir.file("out/config.json"));
  std::stringstream ss;
  ss << echoed.rdbuf();
  CHECK(ss.str() == small_gbm(dir.file("out")));

  SUBCASE("reruns are identical") {
    auto c2 = c;
    c2.out_dir = dir.file("out2");
    run_command("evaluate", c2, out, log);
    CHECK(load_report_csv(dir.file("out2/report_binomial_lambda0.01.csv")).pnl ==
          load_report_csv(dir.file("out/report_binomial_lambda0.01.csv")).pnl);
  }
}

TEST_CASE("a failing command leaves no partial output") {
  test::TempDir dir;
  test::write_text(dir.file("params.json"), R"({"MSFT": {"rho": -0.3, "nu": 0.1}})");
  auto c = ExperimentConfig::from_json_text(R"({"mode": "sv-calibrated", "seed": 1,
      "selection": {"symbol": "AAPL"}})");
  c.data_dir = test::source_path("data");
  c.calibration = dir.file("params.json");
  c.out_dir = dir.file("out");
  std::ostringstream out, log;
  CHECK_THROWS_AS(run_command("evaluate-empirical", c, out, log), LookupError);
  CHECK_FALSE(fs::exists(dir.file("out")));

  // A pre-existing directory survives, minus the files the command wrote.
  fs::create_directories(dir.file("keep"));
  test::write_text(dir.file("keep/mine.txt"), "x");
  c.out_dir = dir.file("keep");
  CHECK_THROWS_AS(run_command("evaluate-empirical", c, out, log), LookupError);
  CHECK(fs::exists(dir.file("keep/mine.txt")));
  CHECK_FALSE(fs::exists(dir.file("keep/config.json")));
}

TEST_CASE("calibrated selection needs symbol, maturity and strike") {
  auto c = ExperimentConfig::from_json_text(R"({"mode": "sv-calibrated", "seed": 1})");
  c.data_dir = test::source_path("data");
  std::ostringstream out, log;
  CHECK_THROWS_AS(run_command("price", c, out, log), ConfigError);
  c.symbol = "AAPL";
  c.option_maturity = Date::parse("2023-09-15");
  c.option_strike = 176.0;
  CHECK_THROWS_AS(run_command("price", c, out, log), LookupError);
}

TEST_CASE("command names") {
  CHECK(command_names().size() == 6);
}
