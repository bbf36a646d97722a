// SPDX-License-Identifier: Apache-2.0
#include "amhedge/black_scholes.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "amhedge/error.hpp"

namespace amh::bs {

namespace {

void check(const Inputs& in) {
  require(std::isfinite(in.s) && in.s > 0.0, "bs: spot must be positive");
  require(std::isfinite(in.k) && in.k >= 0.0, "bs: strike must be non-negative");
  require(std::isfinite(in.sigma) && in.sigma >= 0.0, "bs: sigma must be non-negative");
}

}  // namespace

double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double put_delta(const Inputs& in) {
  check(in);
  if (in.tau <= 0.0 || in.sigma <= 0.0) {
    // Deterministic limit: forward moneyness decides.
    const double fwd_k = in.tau > 0.0 ? in.k * std::exp(-in.r * in.tau) : in.k;
    if (in.s < fwd_k) return -1.0;
    if (in.s > fwd_k) return 0.0;
    return -0.5;
  }
  const double vol_sqrt = in.sigma * std::sqrt(in.tau);
  const double d1 = (std::log(in.s / in.k) + (in.r + 0.5 * in.sigma * in.sigma) * in.tau) / vol_sqrt;
  return norm_cdf(d1) - 1.0;
}

double put_price(const Inputs& in) {
  check(in);
  require(in.tau >= 0.0, "bs: negative time to maturity");
  if (in.k == 0.0) return 0.0;
  const double disc_k = in.k * std::exp(-in.r * in.tau);
  if (in.tau == 0.0 || in.sigma == 0.0) return std::max(disc_k - in.s, 0.0);
  const double vol_sqrt = in.sigma * std::sqrt(in.tau);
  const double d1 = (std::log(in.s / in.k) + (in.r + 0.5 * in.sigma * in.sigma) * in.tau) / vol_sqrt;
  const double d2 = d1 - vol_sqrt;
  return std::max(disc_k * norm_cdf(-d2) - in.s * norm_cdf(-d1), 0.0);
}

}  // namespace amh::bs
