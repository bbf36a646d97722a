// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "amhedge/market_models.hpp"
#include "amhedge/pricing.hpp"

namespace amh {

/// Rectangular (price, vol) region covered by the Chebyshev grids. The price
/// axis is interpolated in ln s.
struct ChebDomain {
  double s_lo = 0.0;
  double s_hi = 0.0;
  double v_lo = 0.0;
  double v_hi = 0.0;
  int n_s = 50;
  int n_v = 20;
  TimeGrid grid{1.0, 1};

  void validate() const;
};

/// Bounds from the extremal excursions of a pilot simulation, widened by
/// `buffer` on each side. A degenerate axis is widened by 20% around its start value.
ChebDomain make_domain(const SvParams& params, const TimeGrid& grid, std::size_t pilot_paths,
                       double buffer, int n_s, int n_v, std::uint64_t seed);

/// Chebyshev-Lobatto points on [a, b], n + 1 of them, ascending.
std::vector<double> cheb_nodes(double a, double b, int n);

/// Barycentric Lagrange basis on Lobatto nodes from cheb_nodes(). `out` gets
/// one weight per node; x is clamped into [nodes.front(), nodes.back()].
/// Returns true if clamping was needed.
bool lobatto_basis(std::span<const double> nodes, double x, std::span<double> out);

/// Barycentric interpolation of values at Lobatto nodes. Exact on
/// polynomials of degree <= n. Outside the node range the query is clamped.
double cheb_eval(std::span<const double> nodes, std::span<const double> values, double x);

/// Tensor-product version; `values` is row-major with the x axis outermost.
double cheb_eval_2d(std::span<const double> x_nodes, std::span<const double> y_nodes,
                    std::span<const double> values, double x, double y);

struct ChebBuildConfig {
  int mc_per_node = 1000;
  std::uint64_t seed = 0;
};

/// The one-step conditional-expectation operator on the tensor grid under
/// risk-neutral SV dynamics: row i averages the interpolation basis over the
/// landing points reached from node i. All nodes share one antithetic set of
/// normal draws, so the operator is a fixed quadrature rule and does not
/// depend on the strike.
class ChebTransition {
 public:
  ChebTransition(const SvParams& params, double r, const ChebDomain& domain, const ChebBuildConfig& cfg);

  const ChebDomain& domain() const { return domain_; }
  double rate() const { return r_; }
  const SvParams& params() const { return params_; }
  const ChebBuildConfig& config() const { return cfg_; }
  const std::vector<double>& log_price_nodes() const { return x_nodes_; }
  const std::vector<double>& vol_nodes() const { return v_nodes_; }
  std::size_t n_nodes() const { return x_nodes_.size() * v_nodes_.size(); }
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>& op() const { return op_; }
  /// Unclamped landed prices from node i (one per draw).
  std::span<const double> landed(std::size_t node) const {
    return {landed_.data() + node * draws_, draws_};
  }
  std::size_t draws() const { return draws_; }
  std::size_t clamped_landings() const { return clamped_; }
  double clamped_fraction() const {
    return static_cast<double>(clamped_) / static_cast<double>(n_nodes() * draws_);
  }

 private:
  SvParams params_;
  double r_;
  ChebDomain domain_;
  ChebBuildConfig cfg_;
  std::vector<double> x_nodes_, v_nodes_;
  std::size_t draws_ = 0;
  std::vector<double> landed_;
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> op_;
  std::size_t clamped_ = 0;
};

/// American put value on the (ln s, vol) Chebyshev grid at every step of the
/// domain's time grid, plus the exercise boundary per (step, vol node).
class ChebSurface : public OptionPricer, public ExerciseRule {
 public:
  double strike() const override { return k_; }
  double maturity() const override { return domain_.grid.maturity(); }
  double rate() const { return r_; }
  const ChebDomain& domain() const { return domain_; }
  const std::vector<double>& log_price_nodes() const { return x_nodes_; }
  const std::vector<double>& vol_nodes() const { return v_nodes_; }
  int mc_per_node() const { return mc_per_node_; }
  std::uint64_t seed() const { return seed_; }
  double nu() const { return nu_; }
  double rho() const { return rho_; }

  /// Stored value at (step, price node, vol node).
  double node_value(int step, int i_s, int i_v) const {
    return values_[static_cast<std::size_t>(step) * n_nodes() + i_s * v_nodes_.size() + i_v];
  }
  std::span<const double> step_values(int step) const {
    return {values_.data() + static_cast<std::size_t>(step) * n_nodes(), n_nodes()};
  }
  std::size_t n_nodes() const { return x_nodes_.size() * v_nodes_.size(); }

  /// Value at (s, v, t): tensor barycentric in (ln s, v), linear in t,
  /// floored at intrinsic. (s, v) outside the domain are clamped and counted.
  double price_query(double s, double v, double t) const;
  double price(double s, double vol, double t) const override { return price_query(s, vol, t); }

  /// Critical price at (step, vol node); 0 when no node exercises.
  double boundary_node(int step, int i_v) const {
    return boundary_[static_cast<std::size_t>(step) * v_nodes_.size() + i_v];
  }
  /// Linear in t between steps and in v between vol nodes.
  double boundary_at(double t, double v) const;
  double critical_price(double t, double vol) const override { return boundary_at(t, vol); }

  std::size_t query_clamps() const { return query_clamps_->load(std::memory_order_relaxed); }
  double landing_clamp_fraction() const { return landing_clamp_fraction_; }

  void save(const std::string& path) const;
  static ChebSurface load(const std::string& path);

  bool same_contents(const ChebSurface& other) const;

  friend ChebSurface build_surface(const ChebTransition& transition, double k);

 private:
  ChebSurface() : query_clamps_(std::make_shared<std::atomic<std::size_t>>(0)) {}
  double step_value(int step, double log_s, double v, double s) const;

  ChebDomain domain_;
  double k_ = 0.0, r_ = 0.0, nu_ = 0.0, rho_ = 0.0;
  int mc_per_node_ = 0;
  std::uint64_t seed_ = 0;
  std::vector<double> x_nodes_, v_nodes_;
  std::vector<double> values_;    // (N+1) x nodes
  std::vector<double> boundary_;  // (N+1) x n_v+1
  double landing_clamp_fraction_ = 0.0;
  std::shared_ptr<std::atomic<std::size_t>> query_clamps_;
};

/// Backward induction on a prebuilt transition: exact payoff at maturity,
/// discounted expectation through the operator before that, max with intrinsic.
ChebSurface build_surface(const ChebTransition& transition, double k);

/// Convenience wrapper building the transition first.
ChebSurface build_surface(const SvParams& params, double k, double r, const ChebDomain& domain,
                          int mc_per_node, std::uint64_t seed);

}  // namespace amh
