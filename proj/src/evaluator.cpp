// SPDX-License-Identifier: Apache-2.0
#include "amhedge/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "amhedge/black_scholes.hpp"
#include "amhedge/csv.hpp"
#include "amhedge/ddpg.hpp"
#include "amhedge/error.hpp"

namespace amh {

AgentStrategy::AgentStrategy(Mlp actor, double strike, std::string label)
    : actor_(std::move(actor)), k_(strike), label_(std::move(label)) {
  require(actor_.input_size() == 3 && actor_.output_size() == 1, "agent strategy: actor must map 3 -> 1");
  require(strike > 0.0, "agent strategy: strike must be positive");
}

double AgentStrategy::position(const HedgeContext& ctx) const {
  return policy(actor_, {ctx.s / k_, ctx.tau, ctx.prev_position});
}

BsDeltaStrategy::BsDeltaStrategy(double strike, double r, double sigma) : k_(strike), r_(r), sigma_(sigma) {
  require(strike > 0.0, "bs delta: strike must be positive");
}

double BsDeltaStrategy::position(const HedgeContext& ctx) const {
  const double sigma = sigma_ > 0.0 ? sigma_ : ctx.vol;
  if (!std::isfinite(sigma)) throw ConfigError("bs delta: no volatility available for this path");
  return std::clamp(bs::put_delta({ctx.s, k_, r_, sigma, ctx.tau}), -1.0, 0.0);
}

BinomialHedgeStrategy::BinomialHedgeStrategy(std::shared_ptr<const BinomialModel> tree) : tree_(std::move(tree)) {
  if (!tree_) throw ConfigError("binomial strategy: tree missing");
}

double BinomialHedgeStrategy::position(const HedgeContext& ctx) const { return tree_->hedge_at(ctx.s, ctx.t); }

ConstantStrategy::ConstantStrategy(double position) : a_(position) {
  require(position >= -1.0 && position <= 0.0, "constant strategy: position must lie in [-1, 0]");
}

PathOutcome run_path(const Strategy& strategy, std::span<const double> prices, std::span<const double> vols,
                     const TimeGrid& grid, double c0, const ExerciseRule* rule, const AccountingSpec& spec,
                     bool keep_log) {
  if (!rule) throw ConfigError("run_path: exercise boundary missing");
  const int n_steps = grid.steps();
  if (prices.size() != static_cast<std::size_t>(n_steps) + 1)
    throw ParameterError("run_path: path length does not match the grid");
  if (!vols.empty() && vols.size() != prices.size())
    throw ParameterError("run_path: vol path length does not match the grid");
  require(std::isfinite(c0), "run_path: C0 must be finite");
  require(spec.lambda >= 0.0, "run_path: lambda must be non-negative");

  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double growth = std::exp(spec.r * grid.dt());
  auto ctx_at = [&](int n, double prev) {
    return HedgeContext{n, grid.time(n), grid.maturity() - grid.time(n), prices[n], vols.empty() ? nan : vols[n],
                        prev};
  };

  PathOutcome out;
  double a = strategy.position(ctx_at(0, 0.0));
  double cash = c0 - prices[0] * a;
  if (keep_log) out.log.push_back({0, prices[0], a, cash, 0.0});

  for (int n = 1; n <= n_steps; ++n) {
    cash *= growth;
    const double s = prices[n];
    const double vol = vols.empty() ? nan : vols[n];
    const bool exercised = n == n_steps || (s < spec.strike && exercise_check(s, grid.time(n), vol, *rule));
    if (exercised) {
      const double payoff = std::max(spec.strike - s, 0.0);
      out.pnl = cash + s * a - payoff;
      out.exercise_step = payoff > 0.0 ? n : -1;
      if (keep_log) out.log.push_back({n, s, 0.0, out.pnl, 0.0});
      return out;
    }
    const double next = strategy.position(ctx_at(n, a));
    const double trade = next - a;
    const double cost = spec.lambda * std::abs(trade) * s;
    cash -= trade * s + cost;
    out.total_cost += cost;
    a = next;
    if (keep_log) out.log.push_back({n, s, a, cash, cost});
  }
  return out;
}

void HedgeReport::summarize() {
  const auto n = pnl.size();
  if (n == 0) {
    mean = std = std::numeric_limits<double>::quiet_NaN();
    return;
  }
  double sum = 0.0;
  for (double x : pnl) sum += x;
  mean = sum / static_cast<double>(n);
  if (n == 1) {
    std = 0.0;
    return;
  }
  double ss = 0.0;
  for (double x : pnl) ss += (x - mean) * (x - mean);
  std = std::sqrt(ss / static_cast<double>(n - 1));
}

HedgeReport evaluate(const Strategy& strategy, const PathSet& paths, double c0, const ExerciseRule* rule,
                     const AccountingSpec& spec) {
  require(paths.n_paths() >= 1, "evaluate: need at least one path");
  HedgeReport rep;
  rep.label = strategy.label();
  rep.lambda = spec.lambda;
  rep.seed = paths.seed();
  rep.pnl.reserve(paths.n_paths());
  rep.exercise_step.reserve(paths.n_paths());
  for (std::size_t p = 0; p < paths.n_paths(); ++p) {
    const auto vols = paths.has_vols() ? paths.vols(p) : std::span<const double>{};
    const auto o = run_path(strategy, paths.prices(p), vols, paths.grid(), c0, rule, spec);
    rep.pnl.push_back(o.pnl);
    rep.exercise_step.push_back(o.exercise_step);
  }
  rep.summarize();
  return rep;
}

std::vector<double> filter_vols(std::span<const double> closes, double sigma0, double mu, double nu, double rho,
                                double dt) {
  require(closes.size() >= 2, "filter_vols: need at least two closes");
  require(sigma0 > 0.0 && dt > 0.0, "filter_vols: sigma0 and dt must be positive");
  constexpr double kFloor = 1e-8;
  std::vector<double> vols(closes.size());
  vols[0] = sigma0;
  const double c = nu * rho;
  for (std::size_t n = 1; n < closes.size(); ++n) {
    if (!(closes[n - 1] > 0.0) || !(closes[n] > 0.0)) throw DataError("filter_vols: closes must be positive");
    const double v = vols[n - 1];
    const double excess = closes[n] / closes[n - 1] - 1.0 - mu * dt;
    // excess = v (1 + c dW) dW; take the root nearest the linear solution.
    double dw = excess / v;
    if (c != 0.0) {
      const double disc = 1.0 + 4.0 * c * excess / v;
      dw = disc >= 0.0 ? 2.0 * (excess / v) / (1.0 + std::sqrt(disc)) : -1.0 / (2.0 * c);
    }
    vols[n] = std::max(v * (1.0 + c * dw), kFloor);
  }
  return vols;
}

PathOutcome evaluate_empirical(const Strategy& strategy, std::span<const double> closes, double iv, double nu,
                               double rho, double c0, const ExerciseRule* rule, const AccountingSpec& spec,
                               double dt) {
  if (closes.size() < 2) throw DataError("evaluate_empirical: need closes from sale date through maturity");
  const auto vols = filter_vols(closes, iv, spec.r, nu, rho, dt);
  const int n = static_cast<int>(closes.size()) - 1;
  return run_path(strategy, closes, vols, TimeGrid(n * dt, n), c0, rule, spec);
}

void write_report_csv(const std::string& path, const HedgeReport& report) {
  csv::Writer w(path);
  w.row({"path", "pnl", "exercise_step"});
  for (std::size_t i = 0; i < report.pnl.size(); ++i)
    w.row({std::to_string(i), csv::num(report.pnl[i]),
           report.exercise_step[i] < 0 ? std::string() : std::to_string(report.exercise_step[i])});
  w.close();
}

void write_report_json(const std::string& path, const HedgeReport& report) {
  nlohmann::json j = {{"strategy", report.label}, {"lambda", report.lambda}, {"seed", report.seed},
                      {"n", report.pnl.size()},   {"mean", report.mean},     {"std", report.std}};
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path);
}

HedgeReport load_report_csv(const std::string& path) {
  const auto t = csv::read(path);
  const int c_pnl = t.column("pnl"), c_ex = t.column("exercise_step");
  if (c_pnl < 0 || c_ex < 0) throw FormatError(path + ": missing pnl/exercise_step columns");
  HedgeReport rep;
  for (const auto& row : t.rows) {
    if (row.fields.size() != t.header.size())
      throw FormatError(path + ":" + std::to_string(row.line) + ": wrong field count");
    const auto pnl = csv::parse_double(row.fields[c_pnl]);
    if (!pnl) throw FormatError(path + ":" + std::to_string(row.line) + ": bad pnl");
    int ex = -1;
    if (!row.fields[c_ex].empty()) {
      const auto e = csv::parse_int(row.fields[c_ex]);
      if (!e) throw FormatError(path + ":" + std::to_string(row.line) + ": bad exercise_step");
      ex = static_cast<int>(*e);
    }
    rep.pnl.push_back(*pnl);
    rep.exercise_step.push_back(ex);
  }
  rep.summarize();
  return rep;
}

}  // namespace amh
