// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <cstddef>
#include <memory>
#include <vector>

#include "amhedge/market_models.hpp"
#include "amhedge/pricing.hpp"

namespace amh {

/// Per-step critical prices of an American put. Steps flagged as
/// non-exercisable report a critical price of 0.
class ExerciseBoundary : public ExerciseRule {
 public:
  ExerciseBoundary(TimeGrid grid, std::vector<double> levels, std::vector<bool> exercisable);

  const TimeGrid& grid() const { return grid_; }
  const std::vector<double>& levels() const { return levels_; }
  const std::vector<bool>& exercisable() const { return exercisable_; }

  double at_step(int n) const { return exercisable_[n] ? levels_[n] : 0.0; }
  /// Linear interpolation between the bracketing steps.
  double at(double t) const;
  double critical_price(double t, double /*vol*/) const override { return at(t); }

 private:
  TimeGrid grid_;
  std::vector<double> levels_;
  std::vector<bool> exercisable_;
};

/// Pool-adjacent-violators fit: the closest non-decreasing sequence in least squares.
std::vector<double> isotonic_non_decreasing(const std::vector<double>& values);

/// Equal-probability recombining tree for an American put.
class BinomialModel : public OptionPricer {
 public:
  double s0() const { return s0_; }
  double strike() const override { return k_; }
  double maturity() const override { return grid_.maturity(); }
  double rate() const { return r_; }
  double sigma() const { return sigma_; }
  double up() const { return up_; }
  double down() const { return down_; }
  const TimeGrid& grid() const { return grid_; }
  int steps() const { return grid_.steps(); }

  double level(int step, int node) const;
  double value(int step, int node) const { return values_[offset(step) + node]; }
  /// Hedge position (Cu - Cd) / (Su - Sd) from the children of (step, node).
  double hedge(int step, int node) const;
  bool exercised(int step, int node) const { return exercise_[offset(step) + node] != 0; }

  /// Bilinear interpolation in (ln s, t). A spot the tree has not reached by t is
  /// extrapolated back in time from the first later layer that brackets it.
  double price_at(double s, double t) const;
  double price(double s, double /*vol*/, double t) const override { return price_at(s, t); }
  /// Interpolated hedge position in [-1, 0]; requires t < T.
  double hedge_at(double s, double t) const;

  const ExerciseBoundary& boundary() const { return boundary_; }
  /// Number of queries that fell outside the tree's price range.
  std::size_t clamp_count() const { return clamps_->load(std::memory_order_relaxed); }

  friend BinomialModel build_american_put(double s0, double k, double r, double sigma, double maturity,
                                          int n_tree_steps);

 private:
  BinomialModel(double s0, double k, double r, double sigma, TimeGrid grid);
  static std::size_t offset(int step) { return static_cast<std::size_t>(step) * (step + 1) / 2; }
  double node_position(int step, double log_s) const;
  /// First step whose node range brackets log_s.
  int reach_step(double log_s) const;
  template <class F>
  double interp_step(int step, double log_s, int n_nodes, F&& node_value) const;

  double s0_, k_, r_, sigma_;
  TimeGrid grid_;
  double up_ = 0.0, down_ = 0.0, log_up_ = 0.0, log_down_ = 0.0;
  std::vector<double> values_;
  std::vector<unsigned char> exercise_;
  ExerciseBoundary boundary_;
  std::shared_ptr<std::atomic<std::size_t>> clamps_;
};

/// Builds the tree with u, d = exp((r - sigma^2/2) dt +/- sigma sqrt(dt)) and p = 1/2.
BinomialModel build_american_put(double s0, double k, double r, double sigma, double maturity,
                                 int n_tree_steps);

inline const ExerciseBoundary& boundary_of(const BinomialModel& model) { return model.boundary(); }

}  // namespace amh
