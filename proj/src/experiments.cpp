// SPDX-License-Identifier: Apache-2.0
#include "amhedge/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#include "amhedge/binomial.hpp"
#include "amhedge/black_scholes.hpp"
#include "amhedge/chebyshev.hpp"
#include "amhedge/csv.hpp"
#include "amhedge/error.hpp"
#include "amhedge/evaluator.hpp"
#include "amhedge/hedging_env.hpp"
#include "amhedge/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace amh {

namespace {

enum SeedStream : std::uint64_t {
  kTrainSeed = 1,
  kTrainPaths = 2,
  kTestPaths = 3,
  kChebDraws = 4,
  kChebPilot = 5,
  kCalibration = 6,
};

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

template <class T>
void read(const json& obj, const char* key, T& dst) {
  if (obj.contains(key)) dst = obj.at(key).get<T>();
}

std::string lambda_tag(double lambda) { return csv::num(lambda); }

std::string slug(const std::string& label) {
  std::string s;
  for (char c : label) s += c == ' ' ? '_' : static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

/// Tracks files a command creates so they can be removed if it fails.
class OutputDir {
 public:
  explicit OutputDir(const std::string& dir) : dir_(dir) {
    std::error_code ec;
    created_dir_ = !fs::exists(dir_);
    fs::create_directories(dir_, ec);
    if (ec) throw IoError("cannot create output directory " + dir + ": " + ec.message());
  }
  ~OutputDir() {
    if (committed_) return;
    std::error_code ec;
    for (const auto& f : files_) fs::remove(f, ec);
    if (created_dir_) fs::remove_all(dir_, ec);
  }
  fs::path file(const std::string& name) {
    fs::path p = dir_ / name;
    files_.push_back(p);
    return p;
  }
  void commit() { committed_ = true; }

 private:
  fs::path dir_;
  bool created_dir_ = false;
  bool committed_ = false;
  std::vector<fs::path> files_;
};

void echo_config(OutputDir& out, const ExperimentConfig& cfg) {
  if (!cfg.source_text.empty()) {
    std::ofstream f(out.file("config.json"));
    f << cfg.source_text;
    if (!f) throw IoError("failed echoing config");
  }
  write_json(out.file("resolved_config.json"), cfg.to_json());
}

/// The single option a run is about, after resolving sv-calibrated selections.
struct OptionSetup {
  double s0, strike, maturity, sigma, nu, rho;
  int test_steps;
  std::optional<OptionQuote> quote;
};

std::map<std::string, SymbolParams> symbol_params_for(const ExperimentConfig& cfg,
                                                      const std::vector<OptionQuote>& quotes,
                                                      const PriceSeries* calendar, std::ostream& log,
                                                      std::vector<OptionCalibration>* results = nullptr) {
  if (!cfg.calibration.empty()) return load_symbol_params_json(cfg.resolve_data(cfg.calibration));
  log << "calibrating " << quotes.size() << " options\n";
  std::vector<OptionCalibration> res;
  for (const auto& q : quotes) {
    res.push_back(calibrate_option(q, cfg.rate, cfg.bounds, cfg.derived_seed(kCalibration), cfg.calib, calendar));
    if (!res.back().converged)
      log << "warning: calibration of " << q.symbol << " " << q.maturity.iso() << " K=" << q.strike
          << " stopped at max_iter\n";
  }
  if (results) *results = res;
  return average_by_symbol(res);
}

PriceSeries calendar_for(const ExperimentConfig& cfg, const std::string& symbol) {
  return load_price_series(cfg.resolve_data(cfg.price_series), symbol);
}

OptionSetup option_setup(const ExperimentConfig& cfg, std::ostream& log) {
  if (cfg.mode != "sv-calibrated")
    return {cfg.s0, cfg.strike, cfg.maturity, cfg.sigma, cfg.nu, cfg.rho, cfg.test_rebalances, std::nullopt};
  if (cfg.symbol.empty() || !cfg.option_maturity || !cfg.option_strike)
    throw ConfigError("sv-calibrated runs need --symbol, --maturity and --strike");
  const auto chain = load_option_chain(cfg.resolve_data(cfg.option_chain));
  std::vector<OptionQuote> mine;
  std::optional<OptionQuote> quote;
  for (const auto& q : chain.quotes) {
    if (q.symbol != cfg.symbol) continue;
    mine.push_back(q);
    if (q.maturity == *cfg.option_maturity && std::abs(q.strike - *cfg.option_strike) < 1e-9) quote = q;
  }
  if (!quote)
    throw LookupError("no quote for " + cfg.symbol + " " + cfg.option_maturity->iso() + " K=" +
                      csv::num(*cfg.option_strike));
  const PriceSeries cal = calendar_for(cfg, cfg.symbol);
  const auto params = symbol_params_for(cfg, mine, &cal, log);
  const auto it = params.find(cfg.symbol);
  if (it == params.end()) throw LookupError("no calibrated parameters for " + cfg.symbol);
  const TimeGrid g = quote_grid(*quote, &cal);
  return {quote->spot, quote->strike, g.maturity(), quote->iv, it->second.nu, it->second.rho, g.steps(), quote};
}

SvParams sv_params(const ExperimentConfig& cfg, const OptionSetup& o) {
  return SvParams{o.s0, cfg.mu, o.sigma, o.nu, o.rho};
}

std::shared_ptr<ChebSurface> surface_for(const ExperimentConfig& cfg, const SvParams& p, double strike,
                                         double maturity, int steps) {
  const TimeGrid grid(maturity, cfg.cheb.steps > 0 ? cfg.cheb.steps : steps);
  const ChebDomain dom = make_domain(p, grid, cfg.cheb.pilot_paths, cfg.cheb.buffer, cfg.cheb.n_s, cfg.cheb.n_v,
                                     cfg.derived_seed(kChebPilot));
  return std::make_shared<ChebSurface>(
      build_surface(p, strike, cfg.rate, dom, cfg.cheb.mc_per_node, cfg.derived_seed(kChebDraws)));
}

std::string checkpoint_for(const ExperimentConfig& cfg, const OptionQuote* q) {
  if (q && !cfg.agent_dir.empty()) {
    const fs::path p = fs::path(cfg.agent_dir) / (q->symbol + "_" + q->maturity.iso() + "_" + csv::num(q->strike) + ".json");
    if (fs::exists(p)) return p.string();
  }
  return cfg.agent_checkpoint;
}

void cmd_train(const ExperimentConfig& cfg, std::ostream& log) {
  const OptionSetup o = option_setup(cfg, log);
  OutputDir out(cfg.out_dir);
  echo_config(out, cfg);

  EnvConfig env_cfg;
  env_cfg.strike = o.strike;
  env_cfg.maturity = o.maturity;
  env_cfg.rebalances = cfg.training.steps_per_episode;
  env_cfg.kappa = cfg.training.kappa;
  if (cfg.mode == "gbm") {
    env_cfg.pricer = std::make_shared<BinomialModel>(
        build_american_put(o.s0, o.strike, cfg.rate, o.sigma, o.maturity, cfg.tree_steps));
    env_cfg.source = GbmSource{{o.s0, cfg.mu, o.sigma}, cfg.derived_seed(kTrainPaths)};
  } else {
    const SvParams p = sv_params(cfg, o);
    env_cfg.pricer = surface_for(cfg, p, o.strike, o.maturity, std::max(o.test_steps, env_cfg.rebalances));
    env_cfg.source = SvSource{p, cfg.derived_seed(kTrainPaths)};
  }
  HedgingEnv env(env_cfg);
  const auto t0 = std::chrono::steady_clock::now();
  const int every = std::max(1, cfg.training.episodes / 10);
  auto res = train_agent(env, cfg.training, cfg.derived_seed(kTrainSeed), [&](int ep, const TrainingLog& l) {
    if ((ep + 1) % every == 0) {
      const int from = std::max(0, ep + 1 - every);
      double s = 0.0;
      for (int i = from; i <= ep; ++i) s += l.episode_reward[i];
      log << "episode " << ep + 1 << "/" << cfg.training.episodes << " mean reward " << s / (ep + 1 - from) << '\n';
    }
  });
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  res.agent.save(out.file("agent.json").string());
  write_training_curve_csv(out.file("training_curve.csv").string(), res.log);
  const std::size_t tail = std::min<std::size_t>(100, res.log.episode_reward.size());
  double tail_mean = 0.0;
  for (std::size_t i = res.log.episode_reward.size() - tail; i < res.log.episode_reward.size(); ++i)
    tail_mean += res.log.episode_reward[i] / static_cast<double>(tail);
  write_json(out.file("train_summary.json"), {{"episodes", cfg.training.episodes},
                                              {"seed", cfg.derived_seed(kTrainSeed)},
                                              {"final_mean_reward_100", tail_mean},
                                              {"clamped_actions", res.log.clamped_actions},
                                              {"seconds", secs}});
  log << "trained in " << secs << " s; checkpoint " << (fs::path(cfg.out_dir) / "agent.json").string() << '\n';
  out.commit();
}

void cmd_calibrate(const ExperimentConfig& cfg, std::ostream& log) {
  const auto chain = load_option_chain(cfg.resolve_data(cfg.option_chain));
  for (const auto& w : chain.warnings) log << "warning: " << w << '\n';
  std::vector<OptionQuote> quotes;
  for (const auto& q : chain.quotes) {
    if (!cfg.symbol.empty() && q.symbol != cfg.symbol) continue;
    if (cfg.option_maturity && q.maturity != *cfg.option_maturity) continue;
    if (cfg.option_strike && std::abs(q.strike - *cfg.option_strike) > 1e-9) continue;
    quotes.push_back(q);
  }
  if (quotes.empty()) throw DataError("calibrate: no quotes selected");
  OutputDir out(cfg.out_dir);
  echo_config(out, cfg);
  std::vector<OptionCalibration> results;
  std::map<std::string, PriceSeries> calendars;
  for (const auto& q : quotes) {
    if (!calendars.count(q.symbol)) calendars.emplace(q.symbol, calendar_for(cfg, q.symbol));
    results.push_back(calibrate_option(q, cfg.rate, cfg.bounds, cfg.derived_seed(kCalibration), cfg.calib,
                                       &calendars.at(q.symbol)));
    const auto& r = results.back();
    log << q.symbol << ' ' << q.maturity.iso() << " K=" << q.strike << " rho=" << r.rho << " nu=" << r.nu
        << " objective=" << r.objective << (r.converged ? "" : " (max_iter reached)") << '\n';
  }
  write_calibration_csv(out.file("calibration.csv").string(), results);
  write_symbol_params_json(out.file("symbol_params.json").string(), average_by_symbol(results));
  out.commit();
}

void cmd_evaluate(const ExperimentConfig& cfg, std::ostream& log) {
  const OptionSetup o = option_setup(cfg, log);
  const TimeGrid grid(o.maturity, o.test_steps);
  const std::uint64_t path_seed = cfg.test_seed ? *cfg.test_seed : cfg.derived_seed(kTestPaths);

  std::vector<std::unique_ptr<Strategy>> strategies;
  const std::string ckpt = checkpoint_for(cfg, o.quote ? &*o.quote : nullptr);
  if (!ckpt.empty()) {
    strategies.push_back(std::make_unique<AgentStrategy>(DdpgAgent::load(ckpt).actor, o.strike));
  } else {
    log << "note: no agent checkpoint given; DRL rows skipped\n";
  }

  std::unique_ptr<PathSet> paths;
  std::shared_ptr<const ExerciseRule> rule;
  double c0 = 0.0;
  std::shared_ptr<BinomialModel> agent_tree;
  if (cfg.mode == "gbm") {
    const double buyer = cfg.buyer_sigma > 0.0 ? cfg.buyer_sigma : o.sigma;
    agent_tree = std::make_shared<BinomialModel>(
        build_american_put(o.s0, o.strike, cfg.rate, o.sigma, o.maturity, cfg.tree_steps));
    auto buyer_tree = buyer == o.sigma ? agent_tree
                                       : std::make_shared<BinomialModel>(build_american_put(
                                             o.s0, o.strike, cfg.rate, buyer, o.maturity, cfg.tree_steps));
    c0 = agent_tree->price_at(o.s0, 0.0);
    rule = std::shared_ptr<const ExerciseRule>(buyer_tree, &buyer_tree->boundary());
    paths = std::make_unique<PathSet>(simulate_gbm({o.s0, cfg.mu, buyer}, grid, cfg.test_paths, path_seed));
    strategies.push_back(std::make_unique<BsDeltaStrategy>(o.strike, cfg.rate, o.sigma));
    strategies.push_back(std::make_unique<BinomialHedgeStrategy>(agent_tree));
  } else {
    const SvParams p = sv_params(cfg, o);
    auto surf = surface_for(cfg, p, o.strike, o.maturity, o.test_steps);
    c0 = surf->price_query(o.s0, o.sigma, 0.0);
    rule = surf;
    paths = std::make_unique<PathSet>(floor_paths(simulate_sv(p, grid, cfg.test_paths, path_seed)).paths);
    strategies.push_back(std::make_unique<BsDeltaStrategy>(o.strike, cfg.rate));
  }
  log << "C0 = " << c0 << ", " << paths->n_paths() << " paths x " << grid.steps() << " steps\n";

  OutputDir out(cfg.out_dir);
  echo_config(out, cfg);
  csv::Writer summary(out.file("summary.csv").string());
  summary.row({"strategy", "lambda", "n", "mean", "std", "c0"});
  json js = json::array();
  for (double lambda : cfg.lambdas) {
    for (const auto& s : strategies) {
      HedgeReport rep = evaluate(*s, *paths, c0, rule.get(), {o.strike, cfg.rate, lambda});
      rep.seed = path_seed;
      const std::string stem = "report_" + slug(rep.label) + "_lambda" + lambda_tag(lambda);
      write_report_csv(out.file(stem + ".csv").string(), rep);
      write_report_json(out.file(stem + ".json").string(), rep);
      summary.row({rep.label, csv::num(lambda), std::to_string(rep.pnl.size()), csv::num(rep.mean),
                    csv::num(rep.std), csv::num(c0)});
      js.push_back({{"strategy", rep.label}, {"lambda", lambda}, {"n", rep.pnl.size()}, {"mean", rep.mean},
                    {"std", rep.std}});
      log << rep.label << " lambda=" << lambda << " mean=" << rep.mean << " std=" << rep.std << '\n';
    }
  }
  summary.close();
  write_json(out.file("summary.json"), {{"c0", c0}, {"seed", path_seed}, {"reports", js}});
  out.commit();
}

void cmd_evaluate_empirical(const ExperimentConfig& cfg, std::ostream& log) {
  const auto chain = load_option_chain(cfg.resolve_data(cfg.option_chain));
  for (const auto& w : chain.warnings) log << "warning: " << w << '\n';
  std::vector<OptionQuote> quotes;
  for (const auto& q : chain.quotes)
    if (cfg.symbol.empty() || q.symbol == cfg.symbol) quotes.push_back(q);
  if (quotes.empty()) throw DataError("evaluate-empirical: no quotes selected");

  std::map<std::string, PriceSeries> series;
  for (const auto& q : quotes)
    if (!series.count(q.symbol)) series.emplace(q.symbol, calendar_for(cfg, q.symbol));

  OutputDir out(cfg.out_dir);
  echo_config(out, cfg);

  std::vector<OptionCalibration> calib;
  std::map<std::string, SymbolParams> params;
  if (!cfg.calibration.empty()) {
    params = load_symbol_params_json(cfg.resolve_data(cfg.calibration));
  } else {
    log << "calibrating " << quotes.size() << " options\n";
    for (const auto& q : quotes)
      calib.push_back(calibrate_option(q, cfg.rate, cfg.bounds, cfg.derived_seed(kCalibration), cfg.calib,
                                       &series.at(q.symbol)));
    params = average_by_symbol(calib);
    write_calibration_csv(out.file("calibration.csv").string(), calib);
    write_symbol_params_json(out.file("symbol_params.json").string(), params);
  }

  // Quotes sharing (symbol, maturity) share one transition operator over the
  // union of their domains; only the strike differs between their surfaces.
  std::map<std::pair<std::string, Date>, std::vector<OptionQuote>> groups;
  for (const auto& q : quotes) groups[{q.symbol, q.maturity}].push_back(q);

  struct Row {
    OptionQuote q;
    double rl = std::nan(""), bs = 0.0, c0 = 0.0;
    int steps = 0, bs_exercise = -1, rl_exercise = -1;
  };
  std::map<double, std::vector<Row>> by_lambda;
  for (const auto& [key, group] : groups) {
    const auto pit = params.find(key.first);
    if (pit == params.end()) throw LookupError("no calibrated parameters for " + key.first);
    const auto& ps = series.at(key.first);
    const int days = trading_days(group.front().quote_date, key.second, &ps);
    const TimeGrid grid(days / 252.0, days);
    const TimeGrid cheb_grid(grid.maturity(), cfg.cheb.steps > 0 ? cfg.cheb.steps : days);
    ChebDomain dom;
    bool first = true;
    for (const auto& q : group) {
      const SvParams p = quote_params(q, cfg.rate, pit->second.rho, pit->second.nu);
      const ChebDomain d = make_domain(p, cheb_grid, cfg.cheb.pilot_paths, cfg.cheb.buffer, cfg.cheb.n_s,
                                       cfg.cheb.n_v, cfg.derived_seed(kChebPilot));
      if (first) {
        dom = d;
        first = false;
      } else {
        dom.s_lo = std::min(dom.s_lo, d.s_lo);
        dom.s_hi = std::max(dom.s_hi, d.s_hi);
        dom.v_lo = std::min(dom.v_lo, d.v_lo);
        dom.v_hi = std::max(dom.v_hi, d.v_hi);
      }
    }
    const SvParams p0 = quote_params(group.front(), cfg.rate, pit->second.rho, pit->second.nu);
    const ChebTransition tr(p0, cfg.rate, dom, {cfg.cheb.mc_per_node, cfg.derived_seed(kChebDraws)});
    for (const auto& q : group) {
      const ChebSurface surf = build_surface(tr, q.strike);
      const double c0 = surf.price_query(q.spot, q.iv, 0.0);
      const auto closes = ps.slice(q.quote_date, q.maturity);
      if (static_cast<int>(closes.size()) != days + 1)
        throw DataError(q.symbol + ": close series does not match the trading-day count");
      if (std::abs(closes.front() - q.spot) > 1e-9)
        log << "warning: " << q.symbol << " chain close differs from the series close on " << q.quote_date.iso()
            << '\n';
      std::unique_ptr<AgentStrategy> agent;
      const std::string ckpt = checkpoint_for(cfg, &q);
      if (!ckpt.empty()) agent = std::make_unique<AgentStrategy>(DdpgAgent::load(ckpt).actor, q.strike);
      const BsDeltaStrategy bs(q.strike, cfg.rate);
      for (double lambda : cfg.lambdas) {
        const AccountingSpec spec{q.strike, cfg.rate, lambda};
        Row row{q};
        row.c0 = c0;
        row.steps = days;
        const auto b = evaluate_empirical(bs, closes, q.iv, pit->second.nu, pit->second.rho, c0, &surf, spec);
        row.bs = b.pnl;
        row.bs_exercise = b.exercise_step;
        if (agent) {
          const auto a = evaluate_empirical(*agent, closes, q.iv, pit->second.nu, pit->second.rho, c0, &surf, spec);
          row.rl = a.pnl;
          row.rl_exercise = a.exercise_step;
        }
        by_lambda[lambda].push_back(row);
      }
    }
    log << key.first << ' ' << key.second.iso() << ": " << group.size() << " options, " << days << " days\n";
  }
  if (cfg.agent_checkpoint.empty() && cfg.agent_dir.empty())
    log << "note: no agent checkpoint given; rl_pnl left empty\n";
  for (const auto& [lambda, rows] : by_lambda) {
    csv::Writer w(out.file("empirical_pnl_lambda" + lambda_tag(lambda) + ".csv").string());
    w.row({"symbol", "maturity", "strike", "rl_pnl", "delta_pnl"});
    csv::Writer d(out.file("empirical_details_lambda" + lambda_tag(lambda) + ".csv").string());
    d.row({"symbol", "maturity", "strike", "spot", "iv", "rho", "nu", "steps", "c0", "rl_exercise_step",
           "delta_exercise_step"});
    for (const auto& r : rows) {
      const auto& sp = params.at(r.q.symbol);
      w.row({r.q.symbol, r.q.maturity.iso(), csv::num(r.q.strike), std::isnan(r.rl) ? "" : csv::num(r.rl),
             csv::num(r.bs)});
      d.row({r.q.symbol, r.q.maturity.iso(), csv::num(r.q.strike), csv::num(r.q.spot), csv::num(r.q.iv),
             csv::num(sp.rho), csv::num(sp.nu), std::to_string(r.steps), csv::num(r.c0),
             std::to_string(r.rl_exercise), std::to_string(r.bs_exercise)});
    }
    w.close();
    d.close();
  }
  out.commit();
}

void cmd_price(const ExperimentConfig& cfg, std::ostream& os, std::ostream& log) {
  const OptionSetup o = option_setup(cfg, log);
  const auto tree = build_american_put(o.s0, o.strike, cfg.rate, o.sigma, o.maturity, cfg.tree_steps);
  const bool gbm = cfg.mode == "gbm";
  const SvParams p = gbm ? SvParams{o.s0, cfg.mu, o.sigma, 0.0, 0.0} : sv_params(cfg, o);
  const auto surf = surface_for(cfg, p, o.strike, o.maturity, o.test_steps);
  json j = {{"mode", cfg.mode},
            {"s0", o.s0},
            {"strike", o.strike},
            {"maturity", o.maturity},
            {"rate", cfg.rate},
            {"sigma", o.sigma},
            {"binomial_american", tree.price_at(o.s0, 0.0)},
            {"chebyshev_american", surf->price_query(o.s0, o.sigma, 0.0)},
            {"bs_european", bs::put_price({o.s0, o.strike, cfg.rate, o.sigma, o.maturity})}};
  if (!gbm) {
    j["nu"] = o.nu;
    j["rho"] = o.rho;
  }
  os << j.dump(2) << '\n';
}

void cmd_boundary(const ExperimentConfig& cfg, std::ostream& log) {
  const OptionSetup o = option_setup(cfg, log);
  const auto tree = build_american_put(o.s0, o.strike, cfg.rate, o.sigma, o.maturity, cfg.tree_steps);
  const SvParams p = cfg.mode == "gbm" ? SvParams{o.s0, cfg.mu, o.sigma, 0.0, 0.0} : sv_params(cfg, o);
  const auto surf = surface_for(cfg, p, o.strike, o.maturity, o.test_steps);
  OutputDir out(cfg.out_dir);
  echo_config(out, cfg);
  csv::Writer w(out.file("boundary.csv").string());
  // Tree steps whose nodes never reach the boundary are left blank.
  w.row({"step", "binomial_t", "binomial_boundary", "chebyshev_t", "chebyshev_boundary"});
  const TimeGrid& g = surf->domain().grid;
  for (int n = 0; n <= g.steps(); ++n) {
    const double t = g.time(n);
    const double b = tree.boundary().at(t);
    w.row({std::to_string(n), csv::num(t), b > 0.0 ? csv::num(b) : "", csv::num(t),
           csv::num(surf->boundary_at(t, o.sigma))});
  }
  w.close();
  log << "wrote " << g.steps() + 1 << " boundary rows\n";
  out.commit();
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
  ExperimentConfig c;
  c.source_text = text;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  try {
    check_keys(j, "config",
               {"mode", "seed", "rate", "option", "model", "pricer", "training", "test", "data", "agent",
                "calibration", "selection", "output"});
    if (!j.contains("mode")) throw ConfigError("config: 'mode' is required");
    if (!j.contains("seed")) throw ConfigError("config: an explicit 'seed' is required");
    c.mode = j.at("mode").get<std::string>();
    c.seed = j.at("seed").get<std::uint64_t>();
    read(j, "rate", c.rate);
    if (j.contains("option")) {
      const auto& o = j.at("option");
      check_keys(o, "option", {"s0", "strike", "maturity"});
      read(o, "s0", c.s0);
      read(o, "strike", c.strike);
      read(o, "maturity", c.maturity);
    }
    if (j.contains("model")) {
      const auto& m = j.at("model");
      check_keys(m, "model", {"mu", "sigma", "nu", "rho"});
      read(m, "mu", c.mu);
      read(m, "sigma", c.sigma);
      read(m, "nu", c.nu);
      read(m, "rho", c.rho);
    }
    if (j.contains("pricer")) {
      const auto& p = j.at("pricer");
      check_keys(p, "pricer", {"tree_steps", "chebyshev"});
      read(p, "tree_steps", c.tree_steps);
      if (p.contains("chebyshev")) {
        const auto& ch = p.at("chebyshev");
        check_keys(ch, "pricer.chebyshev", {"n_s", "n_v", "mc_per_node", "pilot_paths", "buffer", "steps"});
        read(ch, "n_s", c.cheb.n_s);
        read(ch, "n_v", c.cheb.n_v);
        read(ch, "mc_per_node", c.cheb.mc_per_node);
        read(ch, "pilot_paths", c.cheb.pilot_paths);
        read(ch, "buffer", c.cheb.buffer);
        read(ch, "steps", c.cheb.steps);
      }
    }
    if (j.contains("training")) {
      const auto& t = j.at("training");
      check_keys(t, "training",
                 {"actor_lr", "critic_lr", "gamma", "batch_size", "tau", "noise_start", "noise_end",
                  "noise_decay_fraction", "episodes", "steps_per_episode", "kappa", "buffer_capacity", "warmup",
                  "hidden"});
      auto& h = c.training;
      read(t, "actor_lr", h.actor_lr);
      read(t, "critic_lr", h.critic_lr);
      read(t, "gamma", h.gamma);
      read(t, "batch_size", h.batch_size);
      read(t, "tau", h.tau);
      read(t, "noise_start", h.noise_start);
      read(t, "noise_end", h.noise_end);
      read(t, "noise_decay_fraction", h.noise_decay_fraction);
      read(t, "episodes", h.episodes);
      read(t, "steps_per_episode", h.steps_per_episode);
      read(t, "kappa", h.kappa);
      read(t, "buffer_capacity", h.buffer_capacity);
      read(t, "warmup", h.warmup);
      read(t, "hidden", h.hidden);
    }
    if (j.contains("test")) {
      const auto& t = j.at("test");
      check_keys(t, "test", {"paths", "rebalances", "lambdas", "buyer_sigma", "seed"});
      read(t, "paths", c.test_paths);
      read(t, "rebalances", c.test_rebalances);
      read(t, "lambdas", c.lambdas);
      read(t, "buyer_sigma", c.buyer_sigma);
      if (t.contains("seed")) c.test_seed = t.at("seed").get<std::uint64_t>();
    }
    if (j.contains("data")) {
      const auto& d = j.at("data");
      check_keys(d, "data", {"dir", "option_chain", "price_series", "calibration"});
      read(d, "dir", c.data_dir);
      read(d, "option_chain", c.option_chain);
      read(d, "price_series", c.price_series);
      read(d, "calibration", c.calibration);
    }
    if (j.contains("agent")) {
      const auto& a = j.at("agent");
      check_keys(a, "agent", {"checkpoint", "dir"});
      read(a, "checkpoint", c.agent_checkpoint);
      read(a, "dir", c.agent_dir);
    }
    if (j.contains("calibration")) {
      const auto& k = j.at("calibration");
      check_keys(k, "calibration", {"paths", "max_iter", "rho0", "nu0", "rho_bounds", "nu_bounds"});
      read(k, "paths", c.calib.n_paths);
      read(k, "max_iter", c.calib.max_iter);
      read(k, "rho0", c.calib.rho0);
      read(k, "nu0", c.calib.nu0);
      if (k.contains("rho_bounds")) {
        const auto b = k.at("rho_bounds").get<std::vector<double>>();
        if (b.size() != 2) throw ConfigError("calibration.rho_bounds needs two numbers");
        c.bounds.rho_lo = b[0];
        c.bounds.rho_hi = b[1];
      }
      if (k.contains("nu_bounds")) {
        const auto b = k.at("nu_bounds").get<std::vector<double>>();
        if (b.size() != 2) throw ConfigError("calibration.nu_bounds needs two numbers");
        c.bounds.nu_lo = b[0];
        c.bounds.nu_hi = b[1];
      }
    }
    if (j.contains("selection")) {
      const auto& s = j.at("selection");
      check_keys(s, "selection", {"symbol", "maturity", "strike"});
      read(s, "symbol", c.symbol);
      if (s.contains("maturity")) {
        const auto d = Date::parse(s.at("maturity").get<std::string>());
        if (!d) throw ConfigError("selection.maturity must be YYYY-MM-DD");
        c.option_maturity = d;
      }
      if (s.contains("strike")) c.option_strike = s.at("strike").get<double>();
    }
    read(j, "output", c.out_dir);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

json ExperimentConfig::to_json() const {
  json j = {
      {"mode", mode},
      {"seed", seed},
      {"rate", rate},
      {"option", {{"s0", s0}, {"strike", strike}, {"maturity", maturity}}},
      {"model", {{"mu", mu}, {"sigma", sigma}, {"nu", nu}, {"rho", rho}}},
      {"pricer",
       {{"tree_steps", tree_steps},
        {"chebyshev",
         {{"n_s", cheb.n_s},
          {"n_v", cheb.n_v},
          {"mc_per_node", cheb.mc_per_node},
          {"pilot_paths", cheb.pilot_paths},
          {"buffer", cheb.buffer},
          {"steps", cheb.steps}}}}},
      {"training",
       {{"actor_lr", training.actor_lr},
        {"critic_lr", training.critic_lr},
        {"gamma", training.gamma},
        {"batch_size", training.batch_size},
        {"tau", training.tau},
        {"noise_start", training.noise_start},
        {"noise_end", training.noise_end},
        {"noise_decay_fraction", training.noise_decay_fraction},
        {"episodes", training.episodes},
        {"steps_per_episode", training.steps_per_episode},
        {"kappa", training.kappa},
        {"buffer_capacity", training.buffer_capacity},
        {"warmup", training.warmup},
        {"hidden", training.hidden}}},
      {"test",
       {{"paths", test_paths}, {"rebalances", test_rebalances}, {"lambdas", lambdas}, {"buyer_sigma", buyer_sigma}}},
      {"data", {{"dir", data_dir}, {"option_chain", option_chain}, {"price_series", price_series},
                {"calibration", calibration}}},
      {"agent", {{"checkpoint", agent_checkpoint}, {"dir", agent_dir}}},
      {"calibration",
       {{"paths", calib.n_paths},
        {"max_iter", calib.max_iter},
        {"rho0", calib.rho0},
        {"nu0", calib.nu0},
        {"rho_bounds", {bounds.rho_lo, bounds.rho_hi}},
        {"nu_bounds", {bounds.nu_lo, bounds.nu_hi}}}},
      {"output", out_dir},
  };
  if (test_seed) j["test"]["seed"] = *test_seed;
  json sel = json::object();
  if (!symbol.empty()) sel["symbol"] = symbol;
  if (option_maturity) sel["maturity"] = option_maturity->iso();
  if (option_strike) sel["strike"] = *option_strike;
  if (!sel.empty()) j["selection"] = sel;
  return j;
}

void ExperimentConfig::validate() const {
  if (mode != "gbm" && mode != "sv-arbitrary" && mode != "sv-calibrated")
    throw ConfigError("mode must be gbm, sv-arbitrary or sv-calibrated (got '" + mode + "')");
  auto need = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
  };
  need(std::isfinite(rate), "rate must be finite");
  need(s0 > 0.0 && strike > 0.0 && maturity > 0.0, "option s0, strike and maturity must be positive");
  need(sigma > 0.0, "model.sigma must be positive");
  need(nu >= 0.0 && rho >= -1.0 && rho <= 1.0, "model.nu must be >= 0 and rho in [-1, 1]");
  need(tree_steps >= 1, "pricer.tree_steps must be >= 1");
  need(cheb.n_s >= 1 && cheb.n_v >= 1 && cheb.mc_per_node >= 1 && cheb.pilot_paths >= 100 && cheb.buffer >= 0.0,
       "pricer.chebyshev settings out of range");
  need(test_paths >= 1 && test_rebalances >= 1, "test.paths and test.rebalances must be positive");
  need(!lambdas.empty(), "test.lambdas must not be empty");
  for (double l : lambdas) need(l >= 0.0, "test.lambdas must be non-negative");
  need(buyer_sigma >= 0.0, "test.buyer_sigma must be non-negative");
  need(!out_dir.empty(), "output directory must be set");
  try {
    training.validate();
    bounds.validate();
  } catch (const ParameterError& e) {
    throw ConfigError(e.what());
  }
  need(agent_checkpoint.empty() || fs::exists(agent_checkpoint), "agent checkpoint not found: " + agent_checkpoint);
  need(agent_dir.empty() || fs::is_directory(agent_dir), "agent directory not found: " + agent_dir);
}

std::string ExperimentConfig::resolve_data(const std::string& file) const {
  const fs::path p(file);
  if (p.is_absolute() || fs::exists(p)) return p.string();
  const fs::path base = data_dir.empty() ? fs::path(amh::data_dir()) : fs::path(data_dir);
  const fs::path q = base / p;
  if (!fs::exists(q)) throw IoError("data file not found: " + file + " (looked in " + base.string() + ")");
  return q.string();
}

std::uint64_t ExperimentConfig::derived_seed(std::uint64_t stream) const { return stream_key(seed, stream); }

void apply_overrides(ExperimentConfig& cfg, const Overrides& o) {
  if (o.seed) cfg.seed = *o.seed;
  if (o.lambda) cfg.lambdas = {*o.lambda};
  if (o.out) cfg.out_dir = *o.out;
  if (o.symbol) cfg.symbol = *o.symbol;
  if (o.maturity) {
    const auto d = Date::parse(*o.maturity);
    if (!d) throw ConfigError("--maturity must be YYYY-MM-DD");
    cfg.option_maturity = d;
  }
  if (o.strike) {
    cfg.option_strike = *o.strike;
    if (cfg.mode != "sv-calibrated") cfg.strike = *o.strike;
  }
  if (o.paths) cfg.test_paths = *o.paths;
  if (o.steps) cfg.test_rebalances = *o.steps;
  if (o.checkpoint) cfg.agent_checkpoint = *o.checkpoint;
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"train", "calibrate", "evaluate", "evaluate-empirical", "price",
                                                  "boundary"};
  return names;
}

void run_command(const std::string& command, const ExperimentConfig& cfg, std::ostream& out, std::ostream& log) {
  cfg.validate();
  if (command == "train") return cmd_train(cfg, log);
  if (command == "calibrate") return cmd_calibrate(cfg, log);
  if (command == "evaluate") return cmd_evaluate(cfg, log);
  if (command == "evaluate-empirical") return cmd_evaluate_empirical(cfg, log);
  if (command == "price") return cmd_price(cfg, out, log);
  if (command == "boundary") return cmd_boundary(cfg, log);
  throw ConfigError("unknown command '" + command + "'");
}

}  // namespace amh
