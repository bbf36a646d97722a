// SPDX-License-Identifier: Apache-2.0
//
// Acceptance gate. Prints one PASS/FAIL line per criterion and exits non-zero
// if any fails. Usage: acceptance [--work DIR] [--only N[,N...]] [--freeze]
//   --freeze  rewrites the locked empirical Delta fixture from this run.

#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "amhedge/binomial.hpp"
#include "amhedge/black_scholes.hpp"
#include "amhedge/calibration.hpp"
#include "amhedge/chebyshev.hpp"
#include "amhedge/csv.hpp"
#include "amhedge/error.hpp"
#include "amhedge/evaluator.hpp"
#include "amhedge/experiments.hpp"
#include "amhedge/hedging_env.hpp"
#include "amhedge/mlp.hpp"
#include "amhedge/rng.hpp"

using namespace amh;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

// ---- tolerances ----
constexpr double kBsReference = 5.573;  // quoted to three decimals, truncated
constexpr double kChebVsTree = 0.05;
constexpr double kBoundaryGap = 0.02;
constexpr double kMeanTol = 0.10;
constexpr double kStdTol = 0.10;
constexpr double kCostRelTol = 0.10;
constexpr double kMismatchTol = 0.15;
constexpr double kSvMeanTol = 0.10;
constexpr double kSvStdTol = 0.15;
constexpr double kDrlMeanAbs = 0.30;
constexpr double kDrlStd = 1.60;
constexpr int kDrlSeedsNeeded = 3;
constexpr double kGradTol = 1e-4;
constexpr double kReplayTol = 1e-10;
constexpr double kPolyTol = 1e-10;
constexpr double kCalibObjective = 1e-6;
constexpr double kGoldenTol = 1e-8;

// Chebyshev settings for the GBM-degenerate comparisons.
constexpr int kChebSteps = 200;
constexpr int kChebNs = 80;
constexpr int kChebNv = 10;
constexpr int kChebMc = 1000;

const std::string kGolden = std::string(AMHEDGE_SOURCE_DIR) + "/tests/fixtures/empirical_delta_lambda0.03.csv";

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double x, int prec = 4) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(prec) << x;
  return os.str();
}

std::string sci(double x) {
  std::ostringstream os;
  os << std::scientific << std::setprecision(2) << x;
  return os.str();
}

bool within(double x, double target, double tol) { return std::abs(x - target) <= tol; }

ExperimentConfig config(const std::string& name, const std::string& out) {
  auto c = ExperimentConfig::load(std::string(AMHEDGE_SOURCE_DIR) + "/configs/" + name + ".json");
  c.data_dir = std::string(AMHEDGE_SOURCE_DIR) + "/data";
  c.out_dir = out;
  return c;
}

void run(const std::string& command, const ExperimentConfig& c) {
  std::ostringstream out, log;
  try {
    run_command(command, c, out, log);
  } catch (...) {
    std::cerr << log.str();
    throw;
  }
}

/// (strategy, lambda) -> {mean, std} from an evaluate run's summary.json.
std::map<std::pair<std::string, double>, std::pair<double, double>> summary(const fs::path& dir) {
  std::ifstream in(dir / "summary.json");
  if (!in) throw IoError("missing " + (dir / "summary.json").string());
  const json j = json::parse(in);
  std::map<std::pair<std::string, double>, std::pair<double, double>> out;
  for (const auto& r : j.at("reports"))
    out[{r.at("strategy").get<std::string>(), r.at("lambda").get<double>()}] = {r.at("mean").get<double>(),
                                                                                r.at("std").get<double>()};
  return out;
}

// ---------------------------------------------------------------------------

Outcome criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  const double tree = build_american_put(100.0, 100.0, 0.05, 0.2, 1.0, 5000).price_at(100.0, 0.0);
  // European value through std::erfc, not the library's pricer.
  const double d1 = (std::log(1.0) + (0.05 + 0.02) * 1.0) / 0.2, d2 = d1 - 0.2;
  auto cdf = [](double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); };
  const double eu = 100.0 * std::exp(-0.05) * cdf(-d2) - 100.0 * cdf(-d1);
  const SvParams p{100.0, 0.05, 0.2, 0.0, 0.0};
  const TimeGrid g(1.0, kChebSteps);
  const ChebDomain dom = make_domain(p, g, 1000, 0.1, kChebNs, kChebNv, 5);
  const ChebSurface surf = build_surface(p, 100.0, 0.05, dom, kChebMc, 4);
  const double cheb = surf.price_query(100.0, 0.2, 0.0);
  const double secs = seconds_since(t0);
  const bool bs_ok = eu >= kBsReference && eu < kBsReference + 1e-3;
  const bool ok = tree >= eu && bs_ok && std::abs(cheb - tree) < kChebVsTree && secs < 60.0;
  return {ok, "binomial " + fmt(tree) + " >= BS " + fmt(eu, 6) + (bs_ok ? " (reads 5.573)" : " (does not read 5.573)") +
                  "; Chebyshev " + fmt(cheb) + " (|diff| " +
                  fmt(std::abs(cheb - tree)) + " < " + fmt(kChebVsTree, 2) + "); " + fmt(secs, 1) + " s"};
}

Outcome criterion2() {
  const auto tree = build_american_put(100.0, 100.0, 0.05, 0.2, 1.0, 5000);
  const SvParams p{100.0, 0.05, 0.2, 0.0, 0.0};
  const TimeGrid g(1.0, kChebSteps);
  const ChebDomain dom = make_domain(p, g, 1000, 0.1, kChebNs, kChebNv, 5);
  const ChebSurface surf = build_surface(p, 100.0, 0.05, dom, kChebMc, 4);
  double worst = 0.0, at = 0.0;
  for (int n = 0; n <= kChebSteps; ++n) {
    const double t = g.time(n);
    if (t < 0.1 - 1e-12 || t > 0.9 + 1e-12) continue;
    const double b_tree = tree.boundary().at(t);
    const double b_cheb = surf.boundary_at(t, 0.2);
    const double gap = std::abs(b_cheb - b_tree) / b_tree;
    if (gap > worst) {
      worst = gap;
      at = t;
    }
  }
  return {worst < kBoundaryGap, "max relative gap " + fmt(100.0 * worst, 2) + "% at t=" + fmt(at, 3) + " (< " +
                                    fmt(100.0 * kBoundaryGap, 0) + "%)"};
}

Outcome criterion3(const fs::path& work) {
  const auto t0 = std::chrono::steady_clock::now();
  run("evaluate", config("gbm", (work / "c3").string()));
  const double secs = seconds_since(t0);
  const auto s = summary(work / "c3");
  const auto bs0 = s.at({"BS Delta", 0.0}), bin0 = s.at({"Binomial", 0.0});
  const auto bs3 = s.at({"BS Delta", 0.03}), bin3 = s.at({"Binomial", 0.03});
  const bool ok = within(bs0.first, -0.36, kMeanTol) && within(bs0.second, 1.02, kStdTol) &&
                  within(bin0.first, -0.12, kMeanTol) && within(bin0.second, 0.86, kStdTol) &&
                  within(bs3.first, -8.97, kCostRelTol * 8.97) && within(bin3.first, -10.26, kCostRelTol * 10.26) &&
                  secs < 300.0;
  return {ok, "lambda=0: BS " + fmt(bs0.first, 3) + "/" + fmt(bs0.second, 3) + " (want -0.36/1.02), binomial " +
                  fmt(bin0.first, 3) + "/" + fmt(bin0.second, 3) + " (want -0.12/0.86); lambda=3%: BS " +
                  fmt(bs3.first, 2) + " (want -8.97), binomial " + fmt(bin3.first, 2) + " (want -10.26); " +
                  fmt(secs, 1) + " s"};
}

Outcome criterion4(const fs::path& work) {
  auto c = config("gbm-mismatch", (work / "c4").string());
  c.lambdas = {0.0};
  run("evaluate", c);
  const auto s = summary(work / "c4");
  const double bs = s.at({"BS Delta", 0.0}).first, bin = s.at({"Binomial", 0.0}).first;
  return {within(bs, -1.99, kMismatchTol) && within(bin, -1.73, kMismatchTol),
          "BS mean " + fmt(bs, 3) + " (want -1.99), binomial mean " + fmt(bin, 3) + " (want -1.73)"};
}

Outcome criterion5(const fs::path& work) {
  auto c = config("sv-arbitrary", (work / "c5").string());
  c.lambdas = {0.0};
  run("evaluate", c);
  const auto bs = summary(work / "c5").at({"BS Delta", 0.0});
  return {within(bs.first, 0.042, kSvMeanTol) && within(bs.second, 0.44, kSvStdTol),
          "BS mean " + fmt(bs.first, 3) + " (want 0.042), std " + fmt(bs.second, 3) + " (want 0.44)"};
}

Outcome criterion6(const fs::path& work) {
  int wins = 0;
  std::ostringstream detail;
  double mean0 = 0.0, std0 = 0.0, worst_secs = 0.0;
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const auto t0 = std::chrono::steady_clock::now();
    const fs::path dir = work / ("c6_seed" + std::to_string(seed));
    auto c = config("gbm", (dir / "train").string());
    c.seed = seed;
    run("train", c);
    c.out_dir = (dir / "eval").string();
    c.agent_checkpoint = (dir / "train" / "agent.json").string();
    run("evaluate", c);
    worst_secs = std::max(worst_secs, seconds_since(t0));
    const auto s = summary(dir / "eval");
    const double drl3 = s.at({"DRL", 0.03}).first, bs3 = s.at({"BS Delta", 0.03}).first;
    if (seed == 1) {
      mean0 = s.at({"DRL", 0.0}).first;
      std0 = s.at({"DRL", 0.0}).second;
    }
    wins += drl3 > bs3;
    detail << " seed" << seed << ": DRL " << fmt(drl3, 2) << " vs BS " << fmt(bs3, 2) << ";";
  }
  const bool a = std::abs(mean0) <= kDrlMeanAbs && std0 <= kDrlStd;
  const bool b = wins >= kDrlSeedsNeeded;
  return {a && b && worst_secs < 1800.0,
          std::string("(a) ") + (a ? "ok" : "not met") + ": lambda=0 mean " + fmt(mean0, 3) + ", std " +
              fmt(std0, 3) + " (want |mean| <= 0.30, std <= 1.60); (b) " + (b ? "ok" : "not met") + ": " +
              std::to_string(wins) + "/4 seeds beat BS at lambda=3%:" + detail.str() + " slowest seed " +
              fmt(worst_secs, 0) + " s"};
}

Outcome criterion7() {
  std::vector<std::string> failed;

  // Gradient checks.
  Xoshiro256 g(99);
  double worst_grad = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    Mlp net({4, 6, 5, 1}, trial % 2 ? OutputActivation::kSigmoid : OutputActivation::kLinear, g);
    Eigen::MatrixXd x(4, 3), up(1, 3);
    for (int j = 0; j < 3; ++j) {
      for (int i = 0; i < 4; ++i) x(i, j) = 2.0 * g.uniform() - 1.0;
      up(0, j) = 2.0 * g.uniform() - 1.0;
    }
    Mlp::Tape tape;
    net.forward(x, &tape);
    const auto flat = net.flat_gradients(net.backward(tape, up));
    auto f = [&] { return (net.forward(x).array() * up.array()).sum(); };
    for (std::size_t i = 0; i < net.parameter_count(); ++i) {
      const double keep = net.parameter(i), h = 1e-5;
      net.parameter(i) = keep + h;
      const double fp = f();
      net.parameter(i) = keep - h;
      const double fm = f();
      net.parameter(i) = keep;
      const double fd = (fp - fm) / (2 * h);
      const double scale = std::max(std::abs(fd), std::abs(flat[i]));
      worst_grad = std::max(worst_grad, scale < 1e-7 ? std::abs(fd - flat[i]) : std::abs(fd - flat[i]) / scale);
    }
  }
  if (!(worst_grad < kGradTol)) failed.push_back("gradient " + std::to_string(worst_grad));

  // Reward transcript replay.
  auto tree = std::make_shared<BinomialModel>(build_american_put(100.0, 100.0, 0.05, 0.2, 1.0, 1000));
  HedgingEnv env({100.0, 1.0, 25, 0.005, tree, GbmSource{{100.0, 0.05, 0.2}, 3}});
  double worst_reward = 0.0;
  for (std::uint64_t ep = 0; ep < 50; ++ep) {
    env.reset(ep);
    while (!env.done()) env.step(-g.uniform());
    const auto& tr = env.transcript();
    for (std::size_t n = 1; n < tr.size(); ++n) {
      const double da = tr[n].a - tr[n - 1].a;
      const double r = -std::abs(tr[n].a * (tr[n].s - tr[n - 1].s) - (tr[n].c - tr[n - 1].c)) - 0.005 * da * da * tr[n].s;
      worst_reward = std::max(worst_reward, std::abs(r - tr[n].reward));
    }
  }
  if (!(worst_reward < kReplayTol)) failed.push_back("reward replay " + std::to_string(worst_reward));

  // Money-market replay of the final P&L.
  const PathSet paths = simulate_gbm({100.0, 0.05, 0.2}, TimeGrid(1.0, 100), 200, 17);
  const BsDeltaStrategy delta(100.0, 0.05, 0.2);
  double worst_pnl = 0.0;
  for (std::size_t p = 0; p < paths.n_paths(); ++p) {
    const AccountingSpec spec{100.0, 0.05, 0.03};
    const PathOutcome o = run_path(delta, paths.prices(p), {}, paths.grid(), 9.0, &tree->boundary(), spec, true);
    const double growth = std::exp(0.05 * paths.grid().dt());
    double cash = 9.0 - o.log[0].position * o.log[0].s;
    for (std::size_t k = 1; k + 1 < o.log.size(); ++k) {
      const double da = o.log[k].position - o.log[k - 1].position;
      cash = cash * growth - da * o.log[k].s - spec.lambda * std::abs(da) * o.log[k].s;
    }
    const auto& last = o.log.back();
    const double prev = o.log[o.log.size() - 2].position;
    const double pnl = cash * growth + prev * last.s - std::max(100.0 - last.s, 0.0);
    worst_pnl = std::max(worst_pnl, std::abs(pnl - o.pnl));
  }
  if (!(worst_pnl < kReplayTol)) failed.push_back("P&L replay " + std::to_string(worst_pnl));

  // Chebyshev polynomial exactness.
  const auto xs = cheb_nodes(-1.0, 2.0, 9);
  std::vector<double> fx;
  auto poly = [](double u) { return 0.5 - u + 0.25 * std::pow(u, 4) - 0.01 * std::pow(u, 9); };
  for (double u : xs) fx.push_back(poly(u));
  double worst_poly = 0.0;
  for (double u = -1.0; u <= 2.0; u += 0.001) worst_poly = std::max(worst_poly, std::abs(cheb_eval(xs, fx, u) - poly(u)));
  if (!(worst_poly < kPolyTol)) failed.push_back("polynomial " + std::to_string(worst_poly));

  // Byte-exact reruns and a frozen generator value.
  const PathSet a = simulate_sv({100.0, 0.05, 0.2, 0.1, -0.4}, TimeGrid(1.0, 50), 100, 5);
  const PathSet b = simulate_sv({100.0, 0.05, 0.2, 0.1, -0.4}, TimeGrid(1.0, 50), 100, 5);
  const bool same = std::memcmp(a.raw_prices().data(), b.raw_prices().data(), a.raw_prices().size() * sizeof(double)) == 0 &&
                    std::memcmp(a.raw_vols()->data(), b.raw_vols()->data(), a.raw_vols()->size() * sizeof(double)) == 0;
  Xoshiro256 x(42);
  const bool golden = x() == 1546998764402558742ULL;
  if (!same || !golden) failed.push_back("rng determinism");

  std::string d = "grad " + sci(worst_grad) + ", reward replay " + sci(worst_reward) + ", P&L replay " +
                  sci(worst_pnl) + ", polynomial " + sci(worst_poly) + ", rng " +
                  (same && golden ? "byte-exact" : "MISMATCH");
  for (const auto& f : failed) d += "; failed: " + f;
  return {failed.empty(), d};
}

Outcome criterion8() {
  OptionQuote q{"SYN", *Date::parse("2023-08-17"), *Date::parse("2023-09-15"), 95.0, 0.0, 0.25, 100.0};
  CalibrationOptions opts;
  opts.n_paths = 4000;
  opts.rho0 = 0.0;
  opts.nu0 = 0.5;
  const std::uint64_t seed = 42;
  q.mid = model_price(quote_params(q, 0.05, -0.4, 0.1), q.strike, quote_grid(q), 0.05, opts.n_paths, seed);
  const OptionCalibration r = calibrate_option(q, 0.05, {}, seed, opts);

  std::vector<OptionCalibration> rs(3);
  rs[0] = {"A", {}, 1.0, -0.4, 0.1};
  rs[1] = {"A", {}, 2.0, -0.2, 0.3};
  rs[2] = {"B", {}, 1.0, -0.7, 0.45};
  const auto avg = average_by_symbol(rs);
  const bool exact = avg.at("A").rho == (-0.4 + -0.2) / 2.0 && avg.at("A").nu == (0.1 + 0.3) / 2.0 &&
                     avg.at("B").rho == -0.7 && avg.at("B").nu == 0.45 && avg.at("A").n_options == 2;
  return {r.objective < kCalibObjective && exact,
          "objective " + sci(r.objective) + " at (rho, nu) = (" + fmt(r.rho) + ", " + fmt(r.nu) +
              "); averaging " + (exact ? "exact" : "WRONG")};
}

Outcome criterion9(const fs::path& work, bool freeze) {
  // One agent trained under the arbitrary-parameter SV setup serves every option.
  auto t = config("sv-arbitrary", (work / "c9" / "train").string());
  run("train", t);
  auto c = config("empirical", (work / "c9" / "empirical").string());
  c.agent_checkpoint = (work / "c9" / "train" / "agent.json").string();
  run("evaluate-empirical", c);

  const auto table = csv::read((work / "c9" / "empirical" / "empirical_pnl_lambda0.03.csv").string());
  const auto ref = csv::read(std::string(AMHEDGE_SOURCE_DIR) + "/data/reference/a4_empirical.csv");
  const auto chain = load_option_chain(std::string(AMHEDGE_SOURCE_DIR) + "/data/option_chain.csv");
  std::vector<std::string> problems;
  if (table.header != ref.header) problems.push_back("header differs from the reference layout");
  std::set<std::string> keys;
  for (const auto& row : table.rows) {
    keys.insert(row.fields.at(0) + "|" + row.fields.at(1) + "|" + row.fields.at(2));
    const auto rl = csv::parse_double(row.fields.at(3)), bs = csv::parse_double(row.fields.at(4));
    if (!rl || !bs || !std::isfinite(*rl) || !std::isfinite(*bs))
      problems.push_back("missing P&L at line " + std::to_string(row.line));
  }
  if (table.rows.size() != chain.quotes.size() || keys.size() != chain.quotes.size())
    problems.push_back(std::to_string(table.rows.size()) + " rows for " + std::to_string(chain.quotes.size()) +
                       " quotes");

  if (freeze) {
    csv::Writer w(kGolden);
    w.row({"symbol", "maturity", "strike", "delta_pnl"});
    for (const auto& row : table.rows) w.row({row.fields[0], row.fields[1], row.fields[2], row.fields[4]});
    w.close();
  }
  std::string lock = "locked Delta values match";
  if (!fs::exists(kGolden)) {
    problems.push_back("no locked fixture; run with --freeze once");
  } else {
    const auto gold = csv::read(kGolden);
    double worst = 0.0;
    if (gold.rows.size() != table.rows.size()) problems.push_back("locked fixture row count differs");
    for (std::size_t i = 0; i < std::min(gold.rows.size(), table.rows.size()); ++i) {
      const auto& g = gold.rows[i].fields;
      const auto& r = table.rows[i].fields;
      if (g[0] != r[0] || g[1] != r[1] || g[2] != r[2]) {
        problems.push_back("locked fixture key mismatch at row " + std::to_string(i + 1));
        break;
      }
      worst = std::max(worst, std::abs(*csv::parse_double(g[3]) - *csv::parse_double(r[4])));
    }
    if (!(worst <= kGoldenTol)) problems.push_back("Delta P&L drifted by " + std::to_string(worst));
    lock += " (max |diff| " + sci(worst) + ")";
  }
  std::string d = std::to_string(table.rows.size()) + " options with DRL and Delta P&L; " + lock;
  for (const auto& p : problems) d += "; " + p;
  return {problems.empty(), d};
}

}  // namespace

int main(int argc, char** argv) {
  fs::path work = "acceptance_out";
  std::set<int> only;
  bool freeze = false;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--work" && i + 1 < argc) {
      work = argv[++i];
    } else if (a == "--only" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      std::string item;
      while (std::getline(ss, item, ',')) only.insert(std::stoi(item));
    } else if (a == "--freeze") {
      freeze = true;
    } else {
      std::cerr << "usage: acceptance [--work DIR] [--only N[,N...]] [--freeze]\n";
      return 2;
    }
  }
  fs::create_directories(work);

  const std::vector<std::pair<int, std::function<Outcome()>>> criteria = {
      {1, [] { return criterion1(); }},
      {2, [] { return criterion2(); }},
      {3, [&] { return criterion3(work); }},
      {4, [&] { return criterion4(work); }},
      {5, [&] { return criterion5(work); }},
      {6, [&] { return criterion6(work); }},
      {7, [] { return criterion7(); }},
      {8, [] { return criterion8(); }},
      {9, [&] { return criterion9(work, freeze); }},
  };
  int failures = 0;
  for (const auto& [id, fn] : criteria) {
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << ": " << o.detail << std::endl;
  }
  return failures ? 1 : 0;
}
