// SPDX-License-Identifier: Apache-2.0
#include "amhedge/chebyshev.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

#include "amhedge/binomial.hpp"
#include "amhedge/error.hpp"
#include "amhedge/rng.hpp"

namespace amh {

namespace {

constexpr double kFloor = 1e-8;
constexpr char kMagic[8] = {'A', 'M', 'H', 'C', 'H', 'E', 'B', '1'};
constexpr std::uint32_t kFormatVersion = 1;

double clamp_count(double x, double lo, double hi, std::size_t& count) {
  if (x < lo) {
    ++count;
    return lo;
  }
  if (x > hi) {
    ++count;
    return hi;
  }
  return x;
}

}  // namespace

void ChebDomain::validate() const {
  require(s_lo > 0.0 && s_hi > s_lo, "cheb domain: need 0 < s_lo < s_hi");
  require(v_lo > 0.0 && v_hi > v_lo, "cheb domain: need 0 < v_lo < v_hi");
  require(n_s >= 4, "cheb domain: n_s must be >= 4");
  require(n_v >= 2, "cheb domain: n_v must be >= 2");
}

ChebDomain make_domain(const SvParams& params, const TimeGrid& grid, std::size_t pilot_paths,
                       double buffer, int n_s, int n_v, std::uint64_t seed) {
  require(pilot_paths >= 100, "make_domain: need at least 100 pilot paths");
  require(buffer >= 0.0 && buffer < 1.0, "make_domain: buffer must lie in [0, 1)");
  auto pilot = floor_paths(simulate_sv(params, grid, pilot_paths, seed), kFloor).paths;
  const auto& prices = pilot.raw_prices();
  const auto& vols = *pilot.raw_vols();
  auto [s_min, s_max] = std::minmax_element(prices.begin(), prices.end());
  auto [v_min, v_max] = std::minmax_element(vols.begin(), vols.end());

  auto widen = [buffer](double lo, double hi, double centre, double& out_lo, double& out_hi) {
    if (hi - lo <= 1e-12 * std::abs(centre)) {
      out_lo = 0.8 * centre;
      out_hi = 1.2 * centre;
    } else {
      out_lo = lo * (1.0 - buffer);
      out_hi = hi * (1.0 + buffer);
    }
  };
  ChebDomain d;
  widen(*s_min, *s_max, params.s0, d.s_lo, d.s_hi);
  widen(*v_min, *v_max, params.sigma0, d.v_lo, d.v_hi);
  d.n_s = n_s;
  d.n_v = n_v;
  d.grid = grid;
  d.validate();
  return d;
}

std::vector<double> cheb_nodes(double a, double b, int n) {
  require(a < b, "cheb_nodes: need a < b");
  require(n >= 1, "cheb_nodes: need n >= 1");
  std::vector<double> x(n + 1);
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  for (int k = 0; k <= n; ++k) {
    // Ascending order: x[k] uses cos((n - k) pi / n).
    x[k] = mid + half * std::cos(static_cast<double>(n - k) * std::numbers::pi / n);
  }
  // Pin the symmetric pairs so that x[k] + x[n-k] == a + b up to rounding of mid.
  for (int k = 0; k < (n + 1) / 2; ++k) {
    const double off = 0.5 * (x[n - k] - x[k]);
    x[k] = mid - off;
    x[n - k] = mid + off;
  }
  x.front() = a;
  x.back() = b;
  if (n % 2 == 0) x[n / 2] = mid;
  return x;
}

bool lobatto_basis(std::span<const double> nodes, double x, std::span<double> out) {
  const std::size_t m = nodes.size();
  bool clamped = false;
  if (x < nodes.front()) {
    x = nodes.front();
    clamped = true;
  } else if (x > nodes.back()) {
    x = nodes.back();
    clamped = true;
  }
  for (std::size_t j = 0; j < m; ++j) {
    if (x == nodes[j]) {
      std::fill(out.begin(), out.end(), 0.0);
      out[j] = 1.0;
      return clamped;
    }
  }
  double denom = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    double w = (j % 2 == 0) ? 1.0 : -1.0;
    if (j == 0 || j == m - 1) w *= 0.5;
    out[j] = w / (x - nodes[j]);
    denom += out[j];
  }
  for (std::size_t j = 0; j < m; ++j) out[j] /= denom;
  return clamped;
}

double cheb_eval(std::span<const double> nodes, std::span<const double> values, double x) {
  require(nodes.size() == values.size(), "cheb_eval: size mismatch");
  std::vector<double> basis(nodes.size());
  lobatto_basis(nodes, x, basis);
  double acc = 0.0;
  for (std::size_t j = 0; j < nodes.size(); ++j) acc += basis[j] * values[j];
  return acc;
}

double cheb_eval_2d(std::span<const double> x_nodes, std::span<const double> y_nodes,
                    std::span<const double> values, double x, double y) {
  require(values.size() == x_nodes.size() * y_nodes.size(), "cheb_eval_2d: size mismatch");
  std::vector<double> bx(x_nodes.size()), by(y_nodes.size());
  lobatto_basis(x_nodes, x, bx);
  lobatto_basis(y_nodes, y, by);
  double acc = 0.0;
  for (std::size_t i = 0; i < x_nodes.size(); ++i) {
    if (bx[i] == 0.0) continue;
    double row = 0.0;
    for (std::size_t j = 0; j < y_nodes.size(); ++j) row += by[j] * values[i * y_nodes.size() + j];
    acc += bx[i] * row;
  }
  return acc;
}

ChebTransition::ChebTransition(const SvParams& params, double r, const ChebDomain& domain,
                               const ChebBuildConfig& cfg)
    : params_(params), r_(r), domain_(domain), cfg_(cfg) {
  params.validate();
  domain.validate();
  require(cfg.mc_per_node >= 100, "chebyshev: mc_per_node must be >= 100");
  x_nodes_ = cheb_nodes(std::log(domain.s_lo), std::log(domain.s_hi), domain.n_s);
  v_nodes_ = cheb_nodes(domain.v_lo, domain.v_hi, domain.n_v);

  // Antithetic pairs; an odd request is rounded up.
  const std::size_t half = (static_cast<std::size_t>(cfg.mc_per_node) + 1) / 2;
  draws_ = 2 * half;
  std::vector<double> z1(draws_), z2(draws_);
  NormalStream z(cfg.seed, 0);
  for (std::size_t m = 0; m < half; ++m) {
    z1[m] = z();
    z2[m] = z();
    z1[m + half] = -z1[m];
    z2[m + half] = -z2[m];
  }
  // The same draws are reused at every step, so sampling error in the second
  // moments would act as a persistent volatility bias. Match them exactly:
  // unit variance for both, zero sample correlation.
  auto dot = [&](const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t m = 0; m < draws_; ++m) acc += a[m] * b[m];
    return acc / static_cast<double>(draws_);
  };
  const double c12 = dot(z1, z2) / dot(z1, z1);
  for (std::size_t m = 0; m < draws_; ++m) z2[m] -= c12 * z1[m];
  const double s1 = 1.0 / std::sqrt(dot(z1, z1));
  const double s2 = 1.0 / std::sqrt(dot(z2, z2));
  for (std::size_t m = 0; m < draws_; ++m) {
    z1[m] *= s1;
    z2[m] *= s2;
  }

  const std::size_t ns = x_nodes_.size();
  const std::size_t nv = v_nodes_.size();
  const std::size_t n = ns * nv;
  const double dt = domain.grid.dt();
  const double log_lo = x_nodes_.front();
  const double log_hi = x_nodes_.back();

  op_.setZero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  landed_.resize(n * draws_);
  std::vector<double> bs(ns), bv(nv);
  std::vector<std::size_t> active;
  const double inv_draws = 1.0 / static_cast<double>(draws_);

  for (std::size_t a = 0; a < ns; ++a) {
    const double s = std::exp(x_nodes_[a]);
    for (std::size_t b = 0; b < nv; ++b) {
      const std::size_t row = a * nv + b;
      double* op_row = op_.data() + row * n;
      double* land = landed_.data() + row * draws_;
      for (std::size_t m = 0; m < draws_; ++m) {
        const auto next = sv_step(s, v_nodes_[b], r, params.nu, params.rho, dt, z1[m], z2[m]);
        const double s_next = std::max(next.s, kFloor);
        const double v_next = std::max(next.vol, kFloor);
        land[m] = s_next;
        std::size_t hits = 0;
        const double x_c = clamp_count(std::log(s_next), log_lo, log_hi, hits);
        const double v_c = clamp_count(v_next, domain.v_lo, domain.v_hi, hits);
        if (hits) ++clamped_;
        lobatto_basis(x_nodes_, x_c, bs);
        lobatto_basis(v_nodes_, v_c, bv);
        active.clear();
        for (std::size_t q = 0; q < nv; ++q)
          if (bv[q] != 0.0) active.push_back(q);
        for (std::size_t p = 0; p < ns; ++p) {
          const double wp = bs[p] * inv_draws;
          if (wp == 0.0) continue;
          double* dst = op_row + p * nv;
          for (std::size_t q : active) dst[q] += wp * bv[q];
        }
      }
    }
  }
}

ChebSurface build_surface(const ChebTransition& tr, double k) {
  require(std::isfinite(k) && k >= 0.0, "build_surface: strike must be non-negative");
  const auto& dom = tr.domain();
  const int n_steps = dom.grid.steps();
  const std::size_t ns = tr.log_price_nodes().size();
  const std::size_t nv = tr.vol_nodes().size();
  const std::size_t n = ns * nv;

  ChebSurface out;
  out.domain_ = dom;
  out.k_ = k;
  out.r_ = tr.rate();
  out.nu_ = tr.params().nu;
  out.rho_ = tr.params().rho;
  out.mc_per_node_ = tr.config().mc_per_node;
  out.seed_ = tr.config().seed;
  out.x_nodes_ = tr.log_price_nodes();
  out.v_nodes_ = tr.vol_nodes();
  out.values_.assign(static_cast<std::size_t>(n_steps + 1) * n, 0.0);
  out.boundary_.assign(static_cast<std::size_t>(n_steps + 1) * nv, 0.0);
  out.landing_clamp_fraction_ = tr.clamped_fraction();

  const double disc = std::exp(-tr.rate() * dom.grid.dt());
  std::vector<double> intrinsic(n);
  for (std::size_t a = 0; a < ns; ++a) {
    const double s = std::exp(out.x_nodes_[a]);
    for (std::size_t b = 0; b < nv; ++b) intrinsic[a * nv + b] = std::max(k - s, 0.0);
  }
  std::copy(intrinsic.begin(), intrinsic.end(), out.values_.begin() + static_cast<std::ptrdiff_t>(n_steps * n));

  Eigen::VectorXd cont(static_cast<Eigen::Index>(n));
  std::vector<double> cont_col(ns);
  for (int j = n_steps - 1; j >= 0; --j) {
    if (j == n_steps - 1) {
      for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (double s_next : tr.landed(i)) acc += std::max(k - s_next, 0.0);
        cont[static_cast<Eigen::Index>(i)] = disc * acc / static_cast<double>(tr.draws());
      }
    } else {
      Eigen::Map<const Eigen::VectorXd> next(out.values_.data() + static_cast<std::size_t>(j + 1) * n,
                                             static_cast<Eigen::Index>(n));
      cont.noalias() = disc * (tr.op() * next);
    }
    double* here = out.values_.data() + static_cast<std::size_t>(j) * n;
    for (std::size_t i = 0; i < n; ++i) here[i] = std::max(intrinsic[i], cont[static_cast<Eigen::Index>(i)]);

    // Boundary per vol node: root of continuation(s) = K - s between the
    // highest exercising price node and the next node up.
    for (std::size_t b = 0; b < nv; ++b) {
      int deepest = -1;
      for (std::size_t a = 0; a < ns; ++a) {
        const std::size_t i = a * nv + b;
        cont_col[a] = cont[static_cast<Eigen::Index>(i)];
        if (intrinsic[i] > 0.0 && intrinsic[i] > cont_col[a]) deepest = static_cast<int>(a);
      }
      double crit = 0.0;
      if (deepest == static_cast<int>(ns) - 1) {
        crit = std::exp(out.x_nodes_.back());
      } else if (deepest >= 0) {
        double lo = out.x_nodes_[deepest];
        double hi = out.x_nodes_[deepest + 1];
        auto gap = [&](double x) { return cheb_eval(out.x_nodes_, cont_col, x) - (k - std::exp(x)); };
        if (gap(lo) < 0.0 && gap(hi) >= 0.0) {
          for (int it = 0; it < 60; ++it) {
            const double mid = 0.5 * (lo + hi);
            (gap(mid) < 0.0 ? lo : hi) = mid;
          }
          crit = std::exp(0.5 * (lo + hi));
        } else {
          crit = 0.5 * (std::exp(lo) + std::exp(hi));
        }
      }
      out.boundary_[static_cast<std::size_t>(j) * nv + b] = std::min(crit, k);
    }
  }
  for (std::size_t b = 0; b < nv; ++b) out.boundary_[static_cast<std::size_t>(n_steps) * nv + b] = k;

  // Monotone repair in time per vol node over the exercisable steps.
  for (std::size_t b = 0; b < nv; ++b) {
    std::vector<int> idx;
    std::vector<double> raw;
    for (int j = 0; j <= n_steps; ++j) {
      const double v = out.boundary_[static_cast<std::size_t>(j) * nv + b];
      if (v > 0.0) {
        idx.push_back(j);
        raw.push_back(v);
      }
    }
    const auto fitted = isotonic_non_decreasing(raw);
    for (std::size_t q = 0; q < idx.size(); ++q)
      out.boundary_[static_cast<std::size_t>(idx[q]) * nv + b] = std::min(fitted[q], k);
  }
  return out;
}

ChebSurface build_surface(const SvParams& params, double k, double r, const ChebDomain& domain,
                          int mc_per_node, std::uint64_t seed) {
  ChebTransition tr(params, r, domain, ChebBuildConfig{mc_per_node, seed});
  return build_surface(tr, k);
}

double ChebSurface::step_value(int step, double log_s, double v, double s) const {
  if (step == domain_.grid.steps()) return std::max(k_ - s, 0.0);
  std::vector<double> bx(x_nodes_.size()), bv(v_nodes_.size());
  const bool cx = lobatto_basis(x_nodes_, log_s, bx);
  const bool cv = lobatto_basis(v_nodes_, v, bv);
  if (cx || cv) query_clamps_->fetch_add(1, std::memory_order_relaxed);
  const auto vals = step_values(step);
  const std::size_t nv = v_nodes_.size();
  double acc = 0.0;
  for (std::size_t a = 0; a < x_nodes_.size(); ++a) {
    if (bx[a] == 0.0) continue;
    double row = 0.0;
    for (std::size_t b = 0; b < nv; ++b) row += bv[b] * vals[a * nv + b];
    acc += bx[a] * row;
  }
  return acc;
}

double ChebSurface::price_query(double s, double v, double t) const {
  const double maturity = domain_.grid.maturity();
  if (t > maturity + 1e-12) throw DomainError("chebyshev price_query: t beyond maturity");
  if (t < -1e-12) throw DomainError("chebyshev price_query: negative time");
  require(s > 0.0, "chebyshev price_query: spot must be positive");
  const double intrinsic = std::max(k_ - s, 0.0);
  const int n_steps = domain_.grid.steps();
  const double pos = std::clamp(t / domain_.grid.dt(), 0.0, static_cast<double>(n_steps));
  int j0 = static_cast<int>(pos);
  double w = pos - j0;
  if (j0 >= n_steps) return intrinsic;
  const double log_s = std::log(s);
  double value = step_value(j0, log_s, v, s);
  if (w > 0.0) value = (1.0 - w) * value + w * step_value(j0 + 1, log_s, v, s);
  return std::max(value, intrinsic);
}

double ChebSurface::boundary_at(double t, double v) const {
  const int n_steps = domain_.grid.steps();
  const std::size_t nv = v_nodes_.size();
  auto at_step = [&](int j) {
    const double vc = std::clamp(v, v_nodes_.front(), v_nodes_.back());
    auto it = std::upper_bound(v_nodes_.begin(), v_nodes_.end(), vc);
    std::size_t hi = std::min<std::size_t>(static_cast<std::size_t>(it - v_nodes_.begin()), nv - 1);
    std::size_t lo = hi == 0 ? 0 : hi - 1;
    const double b_lo = boundary_node(j, static_cast<int>(lo));
    const double b_hi = boundary_node(j, static_cast<int>(hi));
    if (hi == lo) return b_lo;
    const double w = (vc - v_nodes_[lo]) / (v_nodes_[hi] - v_nodes_[lo]);
    return (1.0 - w) * b_lo + w * b_hi;
  };
  const double pos = std::clamp(t / domain_.grid.dt(), 0.0, static_cast<double>(n_steps));
  const int j0 = std::min(static_cast<int>(pos), n_steps);
  const double w = pos - j0;
  if (j0 == n_steps || w == 0.0) return at_step(j0);
  return (1.0 - w) * at_step(j0) + w * at_step(j0 + 1);
}

bool ChebSurface::same_contents(const ChebSurface& o) const {
  return k_ == o.k_ && r_ == o.r_ && nu_ == o.nu_ && rho_ == o.rho_ && mc_per_node_ == o.mc_per_node_ &&
         seed_ == o.seed_ && x_nodes_ == o.x_nodes_ && v_nodes_ == o.v_nodes_ && values_ == o.values_ &&
         boundary_ == o.boundary_ && domain_.grid == o.domain_.grid;
}

namespace {

template <class T>
void put(std::ofstream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
void put_vec(std::ofstream& os, const std::vector<double>& v) {
  put<std::uint64_t>(os, v.size());
  os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
}
template <class T>
T get(std::ifstream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw FormatError("surface file truncated");
  return v;
}
std::vector<double> get_vec(std::ifstream& is) {
  const auto n = get<std::uint64_t>(is);
  if (n > (1ULL << 32)) throw FormatError("surface file: implausible array length");
  std::vector<double> v(n);
  is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
  if (!is) throw FormatError("surface file truncated");
  return v;
}

}  // namespace

void ChebSurface::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path);
  os.write(kMagic, sizeof kMagic);
  put(os, kFormatVersion);
  put(os, domain_.s_lo);
  put(os, domain_.s_hi);
  put(os, domain_.v_lo);
  put(os, domain_.v_hi);
  put<std::int32_t>(os, domain_.n_s);
  put<std::int32_t>(os, domain_.n_v);
  put(os, domain_.grid.maturity());
  put<std::int32_t>(os, domain_.grid.steps());
  put(os, k_);
  put(os, r_);
  put(os, nu_);
  put(os, rho_);
  put<std::int32_t>(os, mc_per_node_);
  put(os, seed_);
  put(os, landing_clamp_fraction_);
  put_vec(os, x_nodes_);
  put_vec(os, v_nodes_);
  put_vec(os, values_);
  put_vec(os, boundary_);
  if (!os) throw IoError("write failed: " + path);
}

ChebSurface ChebSurface::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path);
  char magic[8];
  is.read(magic, sizeof magic);
  if (!is || std::memcmp(magic, kMagic, sizeof magic) != 0) throw FormatError("not a surface file: " + path);
  if (get<std::uint32_t>(is) != kFormatVersion) throw FormatError("unsupported surface file version");
  ChebSurface s;
  s.domain_.s_lo = get<double>(is);
  s.domain_.s_hi = get<double>(is);
  s.domain_.v_lo = get<double>(is);
  s.domain_.v_hi = get<double>(is);
  s.domain_.n_s = get<std::int32_t>(is);
  s.domain_.n_v = get<std::int32_t>(is);
  const double maturity = get<double>(is);
  const int steps = get<std::int32_t>(is);
  s.domain_.grid = TimeGrid(maturity, steps);
  s.domain_.validate();
  s.k_ = get<double>(is);
  s.r_ = get<double>(is);
  s.nu_ = get<double>(is);
  s.rho_ = get<double>(is);
  s.mc_per_node_ = get<std::int32_t>(is);
  s.seed_ = get<std::uint64_t>(is);
  s.landing_clamp_fraction_ = get<double>(is);
  s.x_nodes_ = get_vec(is);
  s.v_nodes_ = get_vec(is);
  s.values_ = get_vec(is);
  s.boundary_ = get_vec(is);
  const std::size_t n = s.x_nodes_.size() * s.v_nodes_.size();
  if (s.x_nodes_.size() != static_cast<std::size_t>(s.domain_.n_s) + 1 ||
      s.v_nodes_.size() != static_cast<std::size_t>(s.domain_.n_v) + 1 ||
      s.values_.size() != n * (steps + 1) || s.boundary_.size() != s.v_nodes_.size() * (steps + 1))
    throw FormatError("surface file: inconsistent array sizes");
  return s;
}

}  // namespace amh
