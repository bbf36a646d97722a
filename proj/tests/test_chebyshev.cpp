// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "amhedge/binomial.hpp"
#include "amhedge/chebyshev.hpp"
#include "amhedge/error.hpp"
#include "amhedge/rng.hpp"
#include "support.hpp"

using namespace amh;

TEST_CASE("Lobatto nodes") {
  CHECK(cheb_nodes(-1.0, 1.0, 2) == std::vector<double>{-1.0, 0.0, 1.0});
  CHECK(cheb_nodes(3.0, 5.0, 1) == std::vector<double>{3.0, 5.0});
  for (int n : {5, 8, 19, 50}) {
    const auto x = cheb_nodes(0.3, 7.1, n);
    REQUIRE(x.size() == static_cast<std::size_t>(n + 1));
    for (int k = 0; k <= n; ++k) {
      CHECK(std::abs(x[k] + x[n - k] - 7.4) < 1e-12);
      if (k > 0) CHECK(x[k] > x[k - 1]);
    }
  }
  CHECK_THROWS_AS(cheb_nodes(1.0, 1.0, 3), ParameterError);
  CHECK_THROWS_AS(cheb_nodes(0.0, 1.0, 0), ParameterError);
}

TEST_CASE("barycentric interpolation is exact on polynomials") {
  const auto x = cheb_nodes(0.0, 2.0, 4);
  std::vector<double> f;
  for (double v : x) f.push_back(v * v);
  CHECK(std::abs(cheb_eval(x, f, 1.3) - 1.69) < 1e-12);
  for (std::size_t k = 0; k < x.size(); ++k) CHECK(cheb_eval(x, f, x[k]) == f[k]);

  const auto y = cheb_nodes(-2.0, 3.0, 7);
  auto p = [](double u) { return 1.0 - 2.0 * u + 0.5 * u * u * u - 0.1 * std::pow(u, 7); };
  std::vector<double> g;
  for (double v : y) g.push_back(p(v));
  for (double u = -2.0; u <= 3.0; u += 0.013) CHECK(std::abs(cheb_eval(y, g, u) - p(u)) < 1e-10 * (1.0 + std::abs(p(u))));
}

TEST_CASE("exponential on 17 nodes") {
  const auto x = cheb_nodes(0.0, 1.0, 16);
  std::vector<double> f;
  for (double v : x) f.push_back(std::exp(v));
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double u = (i + 0.5) / 1000.0;
    worst = std::max(worst, std::abs(cheb_eval(x, f, u) - std::exp(u)));
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("tensor interpolation is exact on bivariate polynomials") {
  const auto x = cheb_nodes(-1.0, 2.0, 5);
  const auto y = cheb_nodes(0.1, 0.9, 3);
  auto f = [](double a, double b) { return a * a * a * b * b - 2.0 * a * b + 0.3 * b * b * b + a * a * a * a * a; };
  std::vector<double> v;
  for (double a : x)
    for (double b : y) v.push_back(f(a, b));
  for (double a = -1.0; a <= 2.0; a += 0.11)
    for (double b = 0.1; b <= 0.9; b += 0.07) CHECK(std::abs(cheb_eval_2d(x, y, v, a, b) - f(a, b)) < 1e-10);
}

TEST_CASE("domain from the pilot simulation") {
  const SvParams p{100.0, 0.05, 0.2, 0.1, -0.4};
  const TimeGrid g(1.0 / 12.0, 21);
  const ChebDomain d = make_domain(p, g, 1000, 0.1, 50, 20, 3);
  CHECK(d.s_lo < 100.0);
  CHECK(d.s_hi > 100.0);
  CHECK(d.v_lo < 0.2);
  CHECK(d.v_hi > 0.2);
  const ChebDomain wide = make_domain(p, g, 1000, 0.2, 50, 20, 3);
  CHECK(wide.s_lo < d.s_lo);
  CHECK(wide.s_hi > d.s_hi);
  CHECK(wide.v_lo < d.v_lo);
  CHECK(wide.v_hi > d.v_hi);

  SUBCASE("a degenerate volatility axis is widened around its start value") {
    const ChebDomain flat = make_domain({100.0, 0.05, 0.2, 0.0, 0.0}, g, 500, 0.1, 10, 4, 1);
    CHECK(flat.v_lo == doctest::Approx(0.16));
    CHECK(flat.v_hi == doctest::Approx(0.24));
  }
  CHECK_THROWS_AS(make_domain(p, g, 50, 0.1, 50, 20, 3), ParameterError);
  CHECK_THROWS_AS(make_domain(p, g, 1000, 0.1, 3, 20, 3), ParameterError);
}

namespace {

ChebSurface small_surface(std::uint64_t seed = 5) {
  const SvParams p{100.0, 0.05, 0.2, 0.1, -0.4};
  const TimeGrid g(1.0 / 12.0, 21);
  const ChebDomain d = make_domain(p, g, 1000, 0.1, 20, 6, 2);
  return build_surface(p, 100.0, 0.05, d, 500, seed);
}

}  // namespace

TEST_CASE("surface structure") {
  const ChebSurface s = small_surface();
  const int n = s.domain().grid.steps();
  const auto& xs = s.log_price_nodes();
  const auto& vs = s.vol_nodes();
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t j = 0; j < vs.size(); ++j) {
      const double intrinsic = std::max(100.0 - std::exp(xs[i]), 0.0);
      CHECK(s.node_value(n, static_cast<int>(i), static_cast<int>(j)) == doctest::Approx(intrinsic).epsilon(1e-12));
      for (int step = 0; step < n; ++step)
        CHECK(s.node_value(step, static_cast<int>(i), static_cast<int>(j)) >= intrinsic - 1e-12);
    }

  SUBCASE("queries") {
    const double dt = s.domain().grid.dt();
    CHECK(s.price_query(std::exp(xs[4]), vs[2], 7 * dt) == doctest::Approx(s.node_value(7, 4, 2)).epsilon(1e-12));
    CHECK(s.price_query(90.0, 0.2, s.maturity()) == 10.0);
    CHECK(s.price_query(110.0, 0.2, s.maturity()) == 0.0);
    CHECK_THROWS_AS(s.price_query(100.0, 0.2, s.maturity() * 1.01), DomainError);
    Xoshiro256 g(17);
    for (int i = 0; i < 2000; ++i) {
      const double sp = 60.0 + 80.0 * g.uniform();
      const double v = 0.05 + 0.4 * g.uniform();
      const double t = s.maturity() * g.uniform();
      CHECK(s.price_query(sp, v, t) >= std::max(100.0 - sp, 0.0));
    }
  }

  SUBCASE("boundary") {
    for (int step = 0; step <= n; ++step)
      for (std::size_t j = 0; j < vs.size(); ++j) CHECK(s.boundary_node(step, static_cast<int>(j)) <= 100.0);
    CHECK(s.boundary_at(s.maturity(), 0.2) == doctest::Approx(100.0).epsilon(1e-9));
  }

  SUBCASE("monotone in price up to Monte Carlo noise") {
    // A day before expiry the kink is narrower than the node spacing, so check nodes there.
    for (std::size_t j = 0; j < vs.size(); ++j)
      for (std::size_t i = 1; i < xs.size(); ++i)
        CHECK(s.node_value(n - 1, static_cast<int>(i), static_cast<int>(j)) <=
              s.node_value(n - 1, static_cast<int>(i - 1), static_cast<int>(j)) + 0.02);
    for (int step : {0, 10}) {
      const double t = step * s.domain().grid.dt();
      double prev = 1e9;
      for (double sp = 80.0; sp <= 120.0; sp += 1.0) {
        const double v = s.price_query(sp, 0.2, t);
        CHECK(v <= prev + 0.02);
        prev = v;
      }
    }
  }
}

TEST_CASE("rebuilds are bit-identical and seeds matter") {
  const ChebSurface a = small_surface(5);
  const ChebSurface b = small_surface(5);
  CHECK(a.same_contents(b));
  CHECK_FALSE(a.same_contents(small_surface(6)));
}

TEST_CASE("surface file round trip") {
  test::TempDir dir;
  const ChebSurface a = small_surface();
  a.save(dir.file("s.bin"));
  const ChebSurface b = ChebSurface::load(dir.file("s.bin"));
  CHECK(a.same_contents(b));
  CHECK(b.price_query(97.0, 0.21, 0.03) == a.price_query(97.0, 0.21, 0.03));
  test::write_text(dir.file("junk.bin"), "not a surface");
  CHECK_THROWS_AS(ChebSurface::load(dir.file("junk.bin")), FormatError);
  CHECK_THROWS_AS(ChebSurface::load(dir.file("missing.bin")), IoError);
}

TEST_CASE("degenerate GBM case agrees with the binomial tree") {
  const SvParams p{100.0, 0.05, 0.2, 0.0, 0.0};
  const TimeGrid g(1.0, 50);
  const ChebDomain d = make_domain(p, g, 1000, 0.1, 40, 4, 11);
  const ChebSurface s = build_surface(p, 100.0, 0.05, d, 1000, 7);
  const double tree = build_american_put(100.0, 100.0, 0.05, 0.2, 1.0, 5000).price_at(100.0, 0.0);
  CHECK(std::abs(s.price_query(100.0, 0.2, 0.0) - tree) < 0.05);
}

TEST_CASE("American SV value dominates the European Monte Carlo value") {
  const SvParams p{100.0, 0.05, 0.2, 0.1, -0.4};
  const TimeGrid g(1.0 / 12.0, 21);
  const ChebSurface s = small_surface();
  const std::size_t n = 20000;
  const PathSet paths = floor_paths(simulate_sv(p, g, n, 99)).paths;
  const double disc = std::exp(-0.05 * g.maturity());
  double sum = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = disc * std::max(100.0 - paths.price(i, g.steps()), 0.0);
    sum += x;
    sq += x * x;
  }
  const double eu = sum / n;
  const double se = std::sqrt((sq / n - eu * eu) / n);
  CHECK(s.price_query(100.0, 0.2, 0.0) >= eu - 3.0 * se);
}
