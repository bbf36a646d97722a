// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace amh {

/// Uniform time discretisation of [0, T]. dt is derived, never stored, so
/// dt * N reproduces T without accumulated drift.
class TimeGrid {
 public:
  TimeGrid(double maturity, int n_steps);

  double maturity() const { return maturity_; }
  int steps() const { return n_steps_; }
  double dt() const { return maturity_ / n_steps_; }
  /// Time of step n; time(steps()) == maturity() exactly.
  double time(int n) const { return n == n_steps_ ? maturity_ : maturity_ * n / n_steps_; }

  bool operator==(const TimeGrid&) const = default;

 private:
  double maturity_;
  int n_steps_;
};

struct GbmParams {
  double s0 = 100.0;
  double mu = 0.05;
  double sigma = 0.2;

  void validate() const;
};

/// Lognormal-vol SABR variant with beta = 1 and a drift term.
struct SvParams {
  double s0 = 100.0;
  double mu = 0.05;
  double sigma0 = 0.2;
  double nu = 0.1;
  double rho = -0.4;

  void validate() const;
};

/// A batch of simulated trajectories on a shared grid. Row-major storage:
/// path p occupies [p * (N+1), (p+1) * (N+1)).
class PathSet {
 public:
  PathSet(TimeGrid grid, std::size_t n_paths, std::uint64_t seed, bool with_vols);

  const TimeGrid& grid() const { return grid_; }
  std::size_t n_paths() const { return n_paths_; }
  std::size_t width() const { return static_cast<std::size_t>(grid_.steps()) + 1; }
  std::uint64_t seed() const { return seed_; }
  bool has_vols() const { return vols_.has_value(); }

  double price(std::size_t path, int step) const { return prices_[path * width() + step]; }
  double vol(std::size_t path, int step) const { return (*vols_)[path * width() + step]; }

  std::span<const double> prices(std::size_t path) const {
    return {prices_.data() + path * width(), width()};
  }
  std::span<const double> vols(std::size_t path) const {
    return {vols_->data() + path * width(), width()};
  }
  std::span<double> mutable_prices(std::size_t path) {
    return {prices_.data() + path * width(), width()};
  }
  std::span<double> mutable_vols(std::size_t path) {
    return {vols_->data() + path * width(), width()};
  }

  const std::vector<double>& raw_prices() const { return prices_; }
  const std::optional<std::vector<double>>& raw_vols() const { return vols_; }

  bool operator==(const PathSet&) const = default;

 private:
  TimeGrid grid_;
  std::size_t n_paths_;
  std::uint64_t seed_;
  std::vector<double> prices_;
  std::optional<std::vector<double>> vols_;
};

/// Exact lognormal stepping. Path p draws from substream (seed, p).
PathSet simulate_gbm(const GbmParams& params, const TimeGrid& grid, std::size_t n_paths,
                     std::uint64_t seed);

/// Explicit Euler scheme for the stochastic-volatility model. Each step consumes
/// Z1 then Z2 from the path's substream; values are left unfloored.
PathSet simulate_sv(const SvParams& params, const TimeGrid& grid, std::size_t n_paths,
                    std::uint64_t seed);

/// One Euler step of the SV model from (s, vol) given independent normals z1, z2.
/// Returns {s', vol'} without flooring.
struct SvState {
  double s;
  double vol;
};
inline SvState sv_step(double s, double vol, double mu, double nu, double rho, double dt,
                       double z1, double z2) {
  const double sq = std::sqrt(dt);
  const double dw = sq * z1;
  const double db = sq * (rho * z1 + std::sqrt(1.0 - rho * rho) * z2);
  const double vol_next = vol * (1.0 + nu * db);
  return {s * (1.0 + mu * dt + vol_next * dw), vol_next};
}

struct FloorResult {
  PathSet paths;
  std::size_t clamped = 0;
};

/// Clamps prices and vols from below at eps.
FloorResult floor_paths(PathSet paths, double eps = 1e-8);

}  // namespace amh
