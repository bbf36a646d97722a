// SPDX-License-Identifier: Apache-2.0
#include "amhedge/market_models.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "amhedge/error.hpp"
#include "amhedge/rng.hpp"

namespace amh {

TimeGrid::TimeGrid(double maturity, int n_steps) : maturity_(maturity), n_steps_(n_steps) {
  require(std::isfinite(maturity) && maturity > 0.0, "time grid: maturity must be positive");
  require(n_steps >= 1, "time grid: need at least one step");
}

void GbmParams::validate() const {
  require(std::isfinite(s0) && s0 > 0.0, "gbm: s0 must be positive");
  require(std::isfinite(sigma) && sigma >= 0.0, "gbm: sigma must be non-negative");
  require(std::isfinite(mu), "gbm: mu must be finite");
}

void SvParams::validate() const {
  require(std::isfinite(s0) && s0 > 0.0, "sv: s0 must be positive");
  require(std::isfinite(sigma0) && sigma0 > 0.0, "sv: sigma0 must be positive");
  require(std::isfinite(nu) && nu >= 0.0, "sv: nu must be non-negative");
  require(std::isfinite(rho) && rho >= -1.0 && rho <= 1.0, "sv: rho must lie in [-1, 1]");
  require(std::isfinite(mu), "sv: mu must be finite");
}

PathSet::PathSet(TimeGrid grid, std::size_t n_paths, std::uint64_t seed, bool with_vols)
    : grid_(grid), n_paths_(n_paths), seed_(seed), prices_(n_paths * width()) {
  if (with_vols) vols_.emplace(n_paths * width());
}

PathSet simulate_gbm(const GbmParams& params, const TimeGrid& grid, std::size_t n_paths,
                     std::uint64_t seed) {
  params.validate();
  require(n_paths >= 1, "simulate_gbm: n_paths must be >= 1");
  PathSet out(grid, n_paths, seed, false);
  const double dt = grid.dt();
  const double drift = (params.mu - 0.5 * params.sigma * params.sigma) * dt;
  const double diffusion = params.sigma * std::sqrt(dt);
  for (std::size_t p = 0; p < n_paths; ++p) {
    NormalStream z(seed, p);
    auto row = out.mutable_prices(p);
    row[0] = params.s0;
    for (int n = 1; n <= grid.steps(); ++n) row[n] = row[n - 1] * std::exp(drift + diffusion * z());
  }
  return out;
}

PathSet simulate_sv(const SvParams& params, const TimeGrid& grid, std::size_t n_paths,
                    std::uint64_t seed) {
  params.validate();
  require(n_paths >= 1, "simulate_sv: n_paths must be >= 1");
  PathSet out(grid, n_paths, seed, true);
  const double dt = grid.dt();
  for (std::size_t p = 0; p < n_paths; ++p) {
    NormalStream z(seed, p);
    auto s = out.mutable_prices(p);
    auto v = out.mutable_vols(p);
    s[0] = params.s0;
    v[0] = params.sigma0;
    for (int n = 1; n <= grid.steps(); ++n) {
      const double z1 = z();
      const double z2 = z();
      const auto next = sv_step(s[n - 1], v[n - 1], params.mu, params.nu, params.rho, dt, z1, z2);
      s[n] = next.s;
      v[n] = next.vol;
    }
  }
  return out;
}

FloorResult floor_paths(PathSet paths, double eps) {
  require(eps > 0.0, "floor_paths: eps must be positive");
  std::size_t clamped = 0;
  auto clamp_row = [&](std::span<double> row) {
    for (double& x : row) {
      if (!(x >= eps)) {  // also catches NaN
        x = eps;
        ++clamped;
      }
    }
  };
  for (std::size_t p = 0; p < paths.n_paths(); ++p) {
    clamp_row(paths.mutable_prices(p));
    if (paths.has_vols()) clamp_row(paths.mutable_vols(p));
  }
  return {std::move(paths), clamped};
}

}  // namespace amh
