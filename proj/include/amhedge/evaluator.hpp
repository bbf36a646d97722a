// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "amhedge/binomial.hpp"
#include "amhedge/market_models.hpp"
#include "amhedge/mlp.hpp"
#include "amhedge/pricing.hpp"

namespace amh {

/// What a strategy sees when choosing its position at step n.
struct HedgeContext {
  int step = 0;
  double t = 0.0;
  double tau = 0.0;  // T - t in years
  double s = 0.0;
  double vol = 0.0;  // NaN when the path carries no volatility
  double prev_position = 0.0;
};

class Strategy {
 public:
  virtual ~Strategy() = default;
  /// Position in the underlying, in [-1, 0].
  virtual double position(const HedgeContext& ctx) const = 0;
  virtual std::string label() const = 0;
};

/// Deterministic actor policy on (S/K, tau, previous position).
class AgentStrategy : public Strategy {
 public:
  AgentStrategy(Mlp actor, double strike, std::string label = "DRL");
  double position(const HedgeContext& ctx) const override;
  std::string label() const override { return label_; }

 private:
  Mlp actor_;
  double k_;
  std::string label_;
};

/// European put Delta. With sigma <= 0 the per-step path volatility is used.
class BsDeltaStrategy : public Strategy {
 public:
  BsDeltaStrategy(double strike, double r, double sigma = 0.0);
  double position(const HedgeContext& ctx) const override;
  std::string label() const override { return "BS Delta"; }

 private:
  double k_, r_, sigma_;
};

/// Hedge ratio interpolated from a binomial tree.
class BinomialHedgeStrategy : public Strategy {
 public:
  explicit BinomialHedgeStrategy(std::shared_ptr<const BinomialModel> tree);
  double position(const HedgeContext& ctx) const override;
  std::string label() const override { return "Binomial"; }

 private:
  std::shared_ptr<const BinomialModel> tree_;
};

/// Holds a fixed position.
class ConstantStrategy : public Strategy {
 public:
  explicit ConstantStrategy(double position);
  double position(const HedgeContext&) const override { return a_; }
  std::string label() const override { return "Constant"; }

 private:
  double a_;
};

struct AccountingStep {
  int step = 0;
  double s = 0.0;
  double position = 0.0;  // position after this step's rebalance
  double cash = 0.0;      // money-market balance after this step
  double cost = 0.0;
};

struct PathOutcome {
  double pnl = 0.0;
  int exercise_step = -1;  // -1: expired worthless
  double total_cost = 0.0;
  std::vector<AccountingStep> log;  // filled only when requested
};

struct AccountingSpec {
  double strike = 100.0;
  double r = 0.05;
  double lambda = 0.0;
};

/// Money-market P&L of hedging a sold American put along one path. The
/// counterparty exercises at the first step with s < K and s <= b(t, vol);
/// maturity is a final exercise date. No cost at inception or liquidation.
PathOutcome run_path(const Strategy& strategy, std::span<const double> prices, std::span<const double> vols,
                     const TimeGrid& grid, double c0, const ExerciseRule* rule, const AccountingSpec& spec,
                     bool keep_log = false);

struct HedgeReport {
  std::string label;
  double lambda = 0.0;
  std::uint64_t seed = 0;
  std::vector<double> pnl;
  std::vector<int> exercise_step;
  double mean = 0.0;
  double std = 0.0;  // sample (n - 1); 0 for a single path

  /// Recomputes mean and std from `pnl`.
  void summarize();
};

HedgeReport evaluate(const Strategy& strategy, const PathSet& paths, double c0, const ExerciseRule* rule,
                     const AccountingSpec& spec);

/// Per-step volatility implied by the SV model along an observed close series:
/// each return is inverted for the price shock with the orthogonal vol shock set
/// to zero, and the vol is advanced by its correlated part.
std::vector<double> filter_vols(std::span<const double> closes, double sigma0, double mu, double nu, double rho,
                                double dt);

/// One run_path over observed closes (sale date through maturity, one close per
/// trading day) with filtered volatilities.
PathOutcome evaluate_empirical(const Strategy& strategy, std::span<const double> closes, double iv, double nu,
                               double rho, double c0, const ExerciseRule* rule, const AccountingSpec& spec,
                               double dt = 1.0 / 252.0);

void write_report_csv(const std::string& path, const HedgeReport& report);
void write_report_json(const std::string& path, const HedgeReport& report);
/// Reads a report CSV back; label, lambda and seed are left at defaults.
HedgeReport load_report_csv(const std::string& path);

}  // namespace amh
