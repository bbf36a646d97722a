// SPDX-License-Identifier: Apache-2.0
#include "amhedge/binomial.hpp"

#include <algorithm>
#include <cmath>

#include "amhedge/error.hpp"

namespace amh {

namespace {

constexpr double kTimeSlack = 1e-12;

}  // namespace

ExerciseBoundary::ExerciseBoundary(TimeGrid grid, std::vector<double> levels,
                                   std::vector<bool> exercisable)
    : grid_(grid), levels_(std::move(levels)), exercisable_(std::move(exercisable)) {
  const auto n = static_cast<std::size_t>(grid_.steps()) + 1;
  require(levels_.size() == n && exercisable_.size() == n,
          "exercise boundary: one level per time step required");
}

double ExerciseBoundary::at(double t) const {
  const int n_steps = grid_.steps();
  const double pos = std::clamp(t / grid_.dt(), 0.0, static_cast<double>(n_steps));
  const int lo = std::min(static_cast<int>(pos), n_steps);
  if (lo == n_steps) return at_step(n_steps);
  const double w = pos - lo;
  if (w == 0.0) return at_step(lo);
  return (1.0 - w) * at_step(lo) + w * at_step(lo + 1);
}

std::vector<double> isotonic_non_decreasing(const std::vector<double>& values) {
  // Blocks of (mean, count); merge while the order is violated.
  std::vector<double> means;
  std::vector<std::size_t> counts;
  for (double v : values) {
    means.push_back(v);
    counts.push_back(1);
    while (means.size() > 1 && means[means.size() - 2] > means.back()) {
      const std::size_t c = counts.back() + counts[counts.size() - 2];
      const double m = (means.back() * counts.back() +
                        means[means.size() - 2] * counts[counts.size() - 2]) /
                       static_cast<double>(c);
      means.pop_back();
      counts.pop_back();
      means.back() = m;
      counts.back() = c;
    }
  }
  std::vector<double> out;
  out.reserve(values.size());
  for (std::size_t b = 0; b < means.size(); ++b) out.insert(out.end(), counts[b], means[b]);
  return out;
}

BinomialModel::BinomialModel(double s0, double k, double r, double sigma, TimeGrid grid)
    : s0_(s0),
      k_(k),
      r_(r),
      sigma_(sigma),
      grid_(grid),
      boundary_(grid, std::vector<double>(grid.steps() + 1, 0.0),
                std::vector<bool>(grid.steps() + 1, false)),
      clamps_(std::make_shared<std::atomic<std::size_t>>(0)) {}

double BinomialModel::level(int step, int node) const {
  return s0_ * std::exp(step * log_down_ + node * (log_up_ - log_down_));
}

double BinomialModel::hedge(int step, int node) const {
  const double cu = value(step + 1, node + 1);
  const double cd = value(step + 1, node);
  const double su = level(step + 1, node + 1);
  const double sd = level(step + 1, node);
  return std::clamp((cu - cd) / (su - sd), -1.0, 0.0);
}

double BinomialModel::node_position(int step, double log_s) const {
  return (log_s - std::log(s0_) - step * log_down_) / (log_up_ - log_down_);
}

int BinomialModel::reach_step(double log_s) const {
  const double y = log_s - std::log(s0_);
  double j = 0.0;
  if (y > 0.0) j = log_up_ > 0.0 ? y / log_up_ : grid_.steps();
  if (y < 0.0) j = log_down_ < 0.0 ? y / log_down_ : grid_.steps();
  return static_cast<int>(std::min(std::ceil(j - 1e-9), static_cast<double>(grid_.steps())));
}

template <class F>
double BinomialModel::interp_step(int step, double log_s, int n_nodes, F&& node_value) const {
  double x = node_position(step, log_s);
  const double top = n_nodes - 1;
  if (x < -1e-9 || x > top + 1e-9) clamps_->fetch_add(1, std::memory_order_relaxed);
  x = std::clamp(x, 0.0, top);
  const int i0 = std::min(static_cast<int>(x), n_nodes - 1);
  const double w = x - i0;
  if (w == 0.0 || i0 == n_nodes - 1) return node_value(i0);
  return (1.0 - w) * node_value(i0) + w * node_value(i0 + 1);
}

double BinomialModel::price_at(double s, double t) const {
  if (t > grid_.maturity() + kTimeSlack) throw DomainError("binomial price_at: t beyond maturity");
  if (t < -kTimeSlack) throw DomainError("binomial price_at: negative time");
  require(s > 0.0, "binomial price_at: spot must be positive");
  const double intrinsic = std::max(k_ - s, 0.0);
  const int n_steps = grid_.steps();
  const double pos = std::clamp(t / grid_.dt(), 0.0, static_cast<double>(n_steps));
  int j0 = static_cast<int>(pos);
  double w = pos - j0;
  if (j0 >= n_steps) {
    j0 = n_steps;
    w = 0.0;
  }
  if (j0 == n_steps) return intrinsic;
  const double log_s = std::log(s);
  auto at_step = [&](int j) {
    if (j == n_steps) return intrinsic;
    return interp_step(j, log_s, j + 1, [&](int i) { return value(j, i); });
  };
  auto at_pos = [&](double x) {
    const int j = std::min(static_cast<int>(x), n_steps);
    const double f = x - j;
    return f > 0.0 && j < n_steps ? (1.0 - f) * at_step(j) + f * at_step(j + 1) : at_step(j);
  };
  // Spots the tree cannot reach yet: extrapolate back from the first layer that brackets
  // them, using the slope over an equally long span after it.
  const int reach = reach_step(log_s);
  if (j0 < reach) {
    clamps_->fetch_add(1, std::memory_order_relaxed);
    if (reach == n_steps) return intrinsic;
    const double shift = reach - pos;
    const double v = 2.0 * at_step(reach) - at_pos(std::min(reach + shift, static_cast<double>(n_steps)));
    return std::max(v, intrinsic);
  }
  double v = at_step(j0);
  if (w > 0.0) v = (1.0 - w) * v + w * at_step(j0 + 1);
  return std::max(v, intrinsic);
}

double BinomialModel::hedge_at(double s, double t) const {
  if (t >= grid_.maturity()) throw DomainError("binomial hedge_at: t must be before maturity");
  if (t < -kTimeSlack) throw DomainError("binomial hedge_at: negative time");
  require(s > 0.0, "binomial hedge_at: spot must be positive");
  const int n_steps = grid_.steps();
  const double pos = std::max(t / grid_.dt(), 0.0);
  int j0 = std::min(static_cast<int>(pos), n_steps - 1);
  double w = pos - j0;
  const double log_s = std::log(s);
  const int reach = std::min(reach_step(log_s), n_steps - 1);
  if (j0 < reach) {
    clamps_->fetch_add(1, std::memory_order_relaxed);
    j0 = reach;
    w = 0.0;
  }
  auto at_step = [&](int j) {
    return interp_step(j, log_s, j + 1, [&](int i) { return hedge(j, i); });
  };
  double h = at_step(j0);
  if (w > 0.0 && j0 + 1 < n_steps) h = (1.0 - w) * h + w * at_step(j0 + 1);
  return std::clamp(h, -1.0, 0.0);
}

BinomialModel build_american_put(double s0, double k, double r, double sigma, double maturity,
                                 int n_tree_steps) {
  require(n_tree_steps >= 1, "binomial: n_tree_steps must be >= 1");
  require(std::isfinite(s0) && s0 > 0.0, "binomial: s0 must be positive");
  require(std::isfinite(k) && k >= 0.0, "binomial: strike must be non-negative");
  require(std::isfinite(sigma) && sigma > 0.0, "binomial: sigma must be positive");
  require(std::isfinite(r), "binomial: rate must be finite");
  TimeGrid grid(maturity, n_tree_steps);
  BinomialModel m(s0, k, r, sigma, grid);

  const double dt = grid.dt();
  const double drift = (r - 0.5 * sigma * sigma) * dt;
  m.log_up_ = drift + sigma * std::sqrt(dt);
  m.log_down_ = drift - sigma * std::sqrt(dt);
  m.up_ = std::exp(m.log_up_);
  m.down_ = std::exp(m.log_down_);

  const int n = n_tree_steps;
  const std::size_t total = BinomialModel::offset(n + 1);
  m.values_.assign(total, 0.0);
  m.exercise_.assign(total, 0);

  const double half_disc = 0.5 * std::exp(-r * dt);
  const double log_s0 = std::log(s0);
  const double log_ratio = m.log_up_ - m.log_down_;

  std::vector<double> levels(n + 1, 0.0);
  std::vector<bool> exercisable(n + 1, false);

  for (int i = 0; i <= n; ++i) {
    const double s = std::exp(log_s0 + n * m.log_down_ + i * log_ratio);
    const double payoff = std::max(k - s, 0.0);
    m.values_[BinomialModel::offset(n) + i] = payoff;
    m.exercise_[BinomialModel::offset(n) + i] = payoff > 0.0;
  }
  levels[n] = k;
  exercisable[n] = true;

  for (int j = n - 1; j >= 0; --j) {
    const std::size_t here = BinomialModel::offset(j);
    const std::size_t next = BinomialModel::offset(j + 1);
    int deepest = -1;
    for (int i = 0; i <= j; ++i) {
      const double s = std::exp(log_s0 + j * m.log_down_ + i * log_ratio);
      const double cont = half_disc * (m.values_[next + i] + m.values_[next + i + 1]);
      const double intrinsic = std::max(k - s, 0.0);
      if (intrinsic > cont) {
        m.values_[here + i] = intrinsic;
        m.exercise_[here + i] = 1;
        deepest = i;
      } else {
        m.values_[here + i] = cont;
      }
    }
    if (deepest >= 0) {
      exercisable[j] = true;
      const double lo = m.level(j, deepest);
      levels[j] = deepest == j ? lo : 0.5 * (lo + m.level(j, deepest + 1));
      levels[j] = std::min(levels[j], k);
    }
  }

  // Monotone repair over the exercisable steps only.
  std::vector<int> idx;
  std::vector<double> raw;
  for (int j = 0; j <= n; ++j) {
    if (exercisable[j]) {
      idx.push_back(j);
      raw.push_back(levels[j]);
    }
  }
  const auto fitted = isotonic_non_decreasing(raw);
  for (std::size_t q = 0; q < idx.size(); ++q) levels[idx[q]] = std::min(fitted[q], k);
  levels[n] = k;

  m.boundary_ = ExerciseBoundary(grid, std::move(levels), std::move(exercisable));
  return m;
}

}  // namespace amh
