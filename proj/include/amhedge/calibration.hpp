// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "amhedge/data_io.hpp"
#include "amhedge/market_models.hpp"

namespace amh {

/// Normal draws shared by every model price of one calibration search. Path p
/// uses substream (seed, p) and, per step, Z1 then Z2, matching simulate_sv().
class CrnDraws {
 public:
  CrnDraws(std::size_t n_paths, int steps, std::uint64_t seed);
  std::size_t n_paths() const { return n_paths_; }
  int steps() const { return steps_; }
  std::uint64_t seed() const { return seed_; }
  /// Interleaved (z1, z2) pairs of path p.
  const double* path(std::size_t p) const { return z_.data() + p * 2 * static_cast<std::size_t>(steps_); }

 private:
  std::size_t n_paths_;
  int steps_;
  std::uint64_t seed_;
  std::vector<double> z_;
};

/// e^{-rT} mean (K - S_T)^+ under the Euler SV scheme driven by `draws`; the
/// drift is params.mu. Terminal prices are floored at 1e-8.
double model_price(const SvParams& params, double strike, const TimeGrid& grid, double r, const CrnDraws& draws);

/// Same with freshly generated draws.
double model_price(const SvParams& params, double strike, const TimeGrid& grid, double r, std::size_t n_paths,
                   std::uint64_t seed);

/// Risk-neutral model parameters for a quote: s0 = spot, sigma0 = iv, mu = r.
SvParams quote_params(const OptionQuote& q, double r, double rho, double nu);

/// Daily grid from the quote date to maturity, T = trading days / 252.
TimeGrid quote_grid(const OptionQuote& q, const PriceSeries* calendar = nullptr);

struct CalibrationBounds {
  double rho_lo = -0.95;
  double rho_hi = 0.95;
  double nu_lo = 0.001;
  double nu_hi = 2.0;

  void validate() const;
};

struct CalibrationOptions {
  std::size_t n_paths = 10000;
  double rho0 = -0.4;
  double nu0 = 0.1;
  int max_iter = 400;
  double x_tol = 1e-7;
  double f_tol = 1e-16;
};

struct OptionCalibration {
  std::string symbol;
  Date maturity;
  double strike = 0.0;
  double rho = 0.0;
  double nu = 0.0;
  double objective = 0.0;
  double initial_objective = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Minimises (model_price - mid)^2 over (rho, nu) by Nelder-Mead with trial
/// points projected onto the bounds. Draws are fixed for the whole search.
OptionCalibration calibrate_option(const OptionQuote& quote, double r, const CalibrationBounds& bounds,
                                   std::uint64_t seed, const CalibrationOptions& opts = {},
                                   const PriceSeries* calendar = nullptr);

struct SymbolParams {
  double rho = 0.0;
  double nu = 0.0;
  std::size_t n_options = 0;
};

/// Arithmetic means of rho and nu.
SymbolParams symbol_params(std::span<const OptionCalibration> results);

/// Means per symbol over all of its options.
std::map<std::string, SymbolParams> average_by_symbol(std::span<const OptionCalibration> results);

void write_calibration_csv(const std::string& path, std::span<const OptionCalibration> results);
std::vector<OptionCalibration> load_calibration_csv(const std::string& path);
void write_symbol_params_json(const std::string& path, const std::map<std::string, SymbolParams>& params);
std::map<std::string, SymbolParams> load_symbol_params_json(const std::string& path);

}  // namespace amh
