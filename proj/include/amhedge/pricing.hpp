// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace amh {

/// Option value source queried by the hedging environment and evaluator.
/// `vol` is ignored by constant-volatility pricers.
class OptionPricer {
 public:
  virtual ~OptionPricer() = default;
  virtual double price(double s, double vol, double t) const = 0;
  virtual double strike() const = 0;
  virtual double maturity() const = 0;
};

/// Counterparty exercise policy: exercise when the spot is at or below the
/// critical price. A critical price of 0 means "never exercise here".
class ExerciseRule {
 public:
  virtual ~ExerciseRule() = default;
  virtual double critical_price(double t, double vol) const = 0;
};

/// Inclusive tie rule: s == b(t) exercises.
inline bool exercise_check(double s, double t, double vol, const ExerciseRule& rule) {
  return s <= rule.critical_price(t, vol);
}

}  // namespace amh
