// SPDX-License-Identifier: Apache-2.0
#include "amhedge/calibration.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "amhedge/csv.hpp"
#include "amhedge/error.hpp"
#include "amhedge/rng.hpp"

namespace amh {

namespace {

constexpr double kPriceFloor = 1e-8;

}  // namespace

CrnDraws::CrnDraws(std::size_t n_paths, int steps, std::uint64_t seed)
    : n_paths_(n_paths), steps_(steps), seed_(seed) {
  require(n_paths >= 1, "crn draws: need at least one path");
  require(steps >= 1, "crn draws: need at least one step");
  z_.resize(n_paths * 2 * static_cast<std::size_t>(steps));
  for (std::size_t p = 0; p < n_paths; ++p) {
    NormalStream z(seed, p);
    double* out = z_.data() + p * 2 * static_cast<std::size_t>(steps);
    for (int i = 0; i < 2 * steps; ++i) out[i] = z();
  }
}

double model_price(const SvParams& params, double strike, const TimeGrid& grid, double r, const CrnDraws& draws) {
  params.validate();
  require(strike >= 0.0, "model_price: strike must be non-negative");
  require(draws.steps() == grid.steps(), "model_price: draws were generated for a different grid");
  if (strike == 0.0) return 0.0;
  const double dt = grid.dt();
  double sum = 0.0;
  for (std::size_t p = 0; p < draws.n_paths(); ++p) {
    const double* z = draws.path(p);
    double s = params.s0, vol = params.sigma0;
    for (int n = 0; n < grid.steps(); ++n) {
      const SvState next = sv_step(s, vol, params.mu, params.nu, params.rho, dt, z[2 * n], z[2 * n + 1]);
      s = next.s;
      vol = next.vol;
    }
    sum += std::max(strike - std::max(s, kPriceFloor), 0.0);
  }
  return std::exp(-r * grid.maturity()) * sum / static_cast<double>(draws.n_paths());
}

double model_price(const SvParams& params, double strike, const TimeGrid& grid, double r, std::size_t n_paths,
                   std::uint64_t seed) {
  return model_price(params, strike, grid, r, CrnDraws(n_paths, grid.steps(), seed));
}

SvParams quote_params(const OptionQuote& q, double r, double rho, double nu) {
  return SvParams{q.spot, r, q.iv, nu, rho};
}

TimeGrid quote_grid(const OptionQuote& q, const PriceSeries* calendar) {
  const int days = trading_days(q.quote_date, q.maturity, calendar);
  return TimeGrid(days / 252.0, days);
}

void CalibrationBounds::validate() const {
  require(rho_lo < rho_hi && rho_lo > -1.0 && rho_hi < 1.0, "calibration bounds: need -1 < rho_lo < rho_hi < 1");
  require(nu_lo < nu_hi && nu_lo >= 0.0, "calibration bounds: need 0 <= nu_lo < nu_hi");
}

OptionCalibration calibrate_option(const OptionQuote& quote, double r, const CalibrationBounds& bounds,
                                   std::uint64_t seed, const CalibrationOptions& opts,
                                   const PriceSeries* calendar) {
  bounds.validate();
  require(quote.mid > 0.0 && quote.iv > 0.0 && quote.spot > 0.0, "calibrate_option: invalid quote");
  const TimeGrid grid = quote_grid(quote, calendar);
  const CrnDraws draws(opts.n_paths, grid.steps(), seed);

  using Point = std::array<double, 2>;  // (rho, nu)
  auto project = [&](Point x) {
    x[0] = std::clamp(x[0], bounds.rho_lo, bounds.rho_hi);
    x[1] = std::clamp(x[1], bounds.nu_lo, bounds.nu_hi);
    return x;
  };
  auto objective = [&](const Point& x) {
    const double err = model_price(quote_params(quote, r, x[0], x[1]), quote.strike, grid, r, draws) - quote.mid;
    return err * err;
  };

  OptionCalibration res;
  res.symbol = quote.symbol;
  res.maturity = quote.maturity;
  res.strike = quote.strike;

  const Point x0 = project({opts.rho0, opts.nu0});
  const double f0 = objective(x0);
  res.initial_objective = f0;
  if (f0 <= opts.f_tol) {
    res.rho = x0[0];
    res.nu = x0[1];
    res.objective = f0;
    res.converged = true;
    return res;
  }

  // Initial simplex steps point into the box.
  const double h_rho = 0.1 * (bounds.rho_hi - bounds.rho_lo);
  const double h_nu = 0.1 * (bounds.nu_hi - bounds.nu_lo);
  Point x1 = x0, x2 = x0;
  x1[0] += x0[0] + h_rho <= bounds.rho_hi ? h_rho : -h_rho;
  x2[1] += x0[1] + h_nu <= bounds.nu_hi ? h_nu : -h_nu;
  std::array<Point, 3> xs = {x0, project(x1), project(x2)};
  std::array<double, 3> fs = {f0, objective(xs[1]), objective(xs[2])};

  auto order = [&] {
    std::array<int, 3> idx = {0, 1, 2};
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return fs[a] < fs[b]; });
    const auto x_copy = xs;
    const auto f_copy = fs;
    for (int i = 0; i < 3; ++i) {
      xs[i] = x_copy[idx[i]];
      fs[i] = f_copy[idx[i]];
    }
  };
  auto along = [&](const Point& c, const Point& w, double t) {
    return project({c[0] + t * (w[0] - c[0]), c[1] + t * (w[1] - c[1])});
  };

  int it = 0;
  bool converged = false;
  order();
  for (; it < opts.max_iter; ++it) {
    double size = 0.0;
    for (int i = 1; i < 3; ++i)
      size = std::max({size, std::abs(xs[i][0] - xs[0][0]), std::abs(xs[i][1] - xs[0][1])});
    if (fs[0] <= opts.f_tol || size < opts.x_tol) {
      converged = true;
      break;
    }
    const Point c = {0.5 * (xs[0][0] + xs[1][0]), 0.5 * (xs[0][1] + xs[1][1])};
    const Point xr = along(c, xs[2], -1.0);
    const double fr = objective(xr);
    if (fr < fs[0]) {
      const Point xe = along(c, xs[2], -2.0);
      const double fe = objective(xe);
      if (fe < fr) {
        xs[2] = xe;
        fs[2] = fe;
      } else {
        xs[2] = xr;
        fs[2] = fr;
      }
    } else if (fr < fs[1]) {
      xs[2] = xr;
      fs[2] = fr;
    } else {
      const bool outside = fr < fs[2];
      const Point xc = along(c, xs[2], outside ? -0.5 : 0.5);
      const double fc = objective(xc);
      if (fc < (outside ? fr : fs[2])) {
        xs[2] = xc;
        fs[2] = fc;
      } else {
        for (int i = 1; i < 3; ++i) {
          xs[i] = along(xs[0], xs[i], 0.5);
          fs[i] = objective(xs[i]);
        }
      }
    }
    order();
  }
  res.rho = xs[0][0];
  res.nu = xs[0][1];
  res.objective = fs[0];
  res.iterations = it;
  res.converged = converged;
  return res;
}

SymbolParams symbol_params(std::span<const OptionCalibration> results) {
  if (results.empty()) throw ParameterError("symbol_params: no option results");
  SymbolParams p;
  for (const auto& r : results) {
    p.rho += r.rho;
    p.nu += r.nu;
  }
  p.n_options = results.size();
  p.rho /= static_cast<double>(results.size());
  p.nu /= static_cast<double>(results.size());
  return p;
}

std::map<std::string, SymbolParams> average_by_symbol(std::span<const OptionCalibration> results) {
  std::map<std::string, std::vector<OptionCalibration>> groups;
  for (const auto& r : results) groups[r.symbol].push_back(r);
  std::map<std::string, SymbolParams> out;
  for (const auto& [sym, list] : groups) out[sym] = symbol_params(list);
  return out;
}

void write_calibration_csv(const std::string& path, std::span<const OptionCalibration> results) {
  csv::Writer w(path);
  w.row({"symbol", "maturity", "strike", "rho", "nu", "objective", "iterations", "converged"});
  for (const auto& r : results)
    w.row({r.symbol, r.maturity.iso(), csv::num(r.strike), csv::num(r.rho), csv::num(r.nu), csv::num(r.objective),
           std::to_string(r.iterations), r.converged ? "1" : "0"});
  w.close();
}

std::vector<OptionCalibration> load_calibration_csv(const std::string& path) {
  const auto t = csv::read(path);
  static const char* kCols[] = {"symbol", "maturity", "strike", "rho", "nu", "objective"};
  int col[6];
  for (int i = 0; i < 6; ++i) {
    col[i] = t.column(kCols[i]);
    if (col[i] < 0) throw FormatError(path + ": missing column '" + kCols[i] + "'");
  }
  const int c_it = t.column("iterations"), c_conv = t.column("converged");
  std::vector<OptionCalibration> out;
  for (const auto& row : t.rows) {
    const std::string at = path + ":" + std::to_string(row.line);
    if (row.fields.size() != t.header.size()) throw FormatError(at + ": wrong field count");
    OptionCalibration r;
    r.symbol = row.fields[col[0]];
    const auto m = Date::parse(row.fields[col[1]]);
    const auto k = csv::parse_double(row.fields[col[2]]);
    const auto rho = csv::parse_double(row.fields[col[3]]);
    const auto nu = csv::parse_double(row.fields[col[4]]);
    const auto obj = csv::parse_double(row.fields[col[5]]);
    if (!m || !k || !rho || !nu || !obj) throw FormatError(at + ": unparsable field");
    r.maturity = *m;
    r.strike = *k;
    r.rho = *rho;
    r.nu = *nu;
    r.objective = *obj;
    if (c_it >= 0) r.iterations = static_cast<int>(csv::parse_int(row.fields[c_it]).value_or(0));
    if (c_conv >= 0) r.converged = row.fields[c_conv] == "1";
    out.push_back(std::move(r));
  }
  return out;
}

void write_symbol_params_json(const std::string& path, const std::map<std::string, SymbolParams>& params) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [sym, p] : params) j[sym] = {{"rho", p.rho}, {"nu", p.nu}, {"n_options", p.n_options}};
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path);
}

std::map<std::string, SymbolParams> load_symbol_params_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::map<std::string, SymbolParams> out;
  try {
    nlohmann::json j;
    in >> j;
    for (const auto& [sym, v] : j.items())
      out[sym] = {v.at("rho").get<double>(), v.at("nu").get<double>(), v.value("n_options", std::size_t{0})};
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
  return out;
}

}  // namespace amh
