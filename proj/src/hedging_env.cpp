// SPDX-License-Identifier: Apache-2.0
#include "amhedge/hedging_env.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "amhedge/csv.hpp"
#include "amhedge/error.hpp"

namespace amh {

void EnvConfig::validate() const {
  require(std::isfinite(strike) && strike > 0.0, "env: strike must be positive");
  require(std::isfinite(maturity) && maturity > 0.0, "env: maturity must be positive");
  require(rebalances >= 1, "env: rebalances must be >= 1");
  require(std::isfinite(kappa) && kappa >= 0.0, "env: kappa must be non-negative");
  if (!pricer) throw ConfigError("env: pricer handle missing");
  if (std::abs(pricer->maturity() - maturity) > 1e-12 || std::abs(pricer->strike() - strike) > 1e-12)
    throw ConfigError("env: pricer was built for a different option");
  std::visit(
      [&](const auto& src) {
        using T = std::decay_t<decltype(src)>;
        if constexpr (std::is_same_v<T, GbmSource>) {
          src.params.validate();
        } else if constexpr (std::is_same_v<T, SvSource>) {
          src.params.validate();
        } else {
          if (!src.paths) throw ConfigError("env: path set missing");
          if (src.paths->grid() != TimeGrid(maturity, rebalances))
            throw ConfigError("env: path set grid does not match maturity/rebalances");
        }
      },
      source);
}

HedgingEnv::HedgingEnv(EnvConfig cfg) : cfg_(std::move(cfg)), grid_(cfg_.maturity, cfg_.rebalances) {
  cfg_.validate();
}

AgentState HedgingEnv::reset(std::uint64_t episode) {
  const auto width = static_cast<std::size_t>(grid_.steps()) + 1;
  std::visit(
      [&](const auto& src) {
        using T = std::decay_t<decltype(src)>;
        if constexpr (std::is_same_v<T, GbmSource>) {
          const PathSet p = simulate_gbm(src.params, grid_, 1, stream_key(src.seed, episode));
          s_.assign(p.prices(0).begin(), p.prices(0).end());
          vol_.assign(width, src.params.sigma);
        } else if constexpr (std::is_same_v<T, SvSource>) {
          const PathSet p = floor_paths(simulate_sv(src.params, grid_, 1, stream_key(src.seed, episode))).paths;
          s_.assign(p.prices(0).begin(), p.prices(0).end());
          vol_.assign(p.vols(0).begin(), p.vols(0).end());
        } else {
          if (episode >= src.paths->n_paths()) throw SourceError("env: path source exhausted");
          const auto prices = src.paths->prices(episode);
          s_.assign(prices.begin(), prices.end());
          if (src.paths->has_vols()) {
            const auto vols = src.paths->vols(episode);
            vol_.assign(vols.begin(), vols.end());
          } else {
            vol_.assign(width, std::numeric_limits<double>::quiet_NaN());
          }
        }
      },
      cfg_.source);
  n_ = 0;
  prev_action_ = 0.0;
  c_now_ = option_value(0);
  transcript_.clear();
  transcript_.push_back({0, 0.0, s_[0], vol_[0], c_now_, 0.0, 0.0});
  return state();
}

double HedgingEnv::option_value(int n) const { return cfg_.pricer->price(s_[n], vol_[n], grid_.time(n)); }

AgentState HedgingEnv::state() const {
  require(n_ >= 0, "env: reset() must be called first");
  return {s_[n_] / cfg_.strike, grid_.maturity() - grid_.time(n_), prev_action_};
}

StepResult HedgingEnv::step(double action) {
  if (n_ < 0) throw ParameterError("env: reset() must be called before step()");
  if (done()) throw ParameterError("env: episode already finished");
  if (!(action >= -1.0 && action <= 0.0)) {
    ++clamped_;
    action = std::isnan(action) ? 0.0 : std::clamp(action, -1.0, 0.0);
  }
  const double s0 = s_[n_];
  const double s1 = s_[n_ + 1];
  const double c1 = option_value(n_ + 1);
  const double trade = action - prev_action_;
  const double reward = -std::abs(action * (s1 - s0) - (c1 - c_now_)) - cfg_.kappa * trade * trade * s1;
  ++n_;
  prev_action_ = action;
  c_now_ = c1;
  transcript_.push_back({n_, grid_.time(n_), s1, vol_[n_], c1, action, reward});
  return {state(), reward, done()};
}

void write_transcript_csv(const std::string& path, const std::vector<TranscriptRow>& rows) {
  csv::Writer w(path);
  w.row({"step", "t", "S", "sigma", "C", "A", "R"});
  for (const auto& r : rows)
    w.row({std::to_string(r.step), csv::num(r.t), csv::num(r.s), csv::num(r.vol), csv::num(r.c), csv::num(r.a),
           csv::num(r.reward)});
  w.close();
}

TrainingResult train_agent(HedgingEnv& env, const AgentHyperparams& hp, std::uint64_t seed,
                           const std::function<void(int, const TrainingLog&)>& progress) {
  hp.validate();
  if (hp.steps_per_episode != env.grid().steps())
    throw ConfigError("train: steps_per_episode must equal the environment's rebalance count");
  TrainingResult res{DdpgAgent::create(hp, seed), {}};
  auto& agent = res.agent;
  auto& log = res.log;
  NormalStream noise(seed, 1);
  ReplayBuffer buffer(hp.buffer_capacity, stream_key(seed, 2));
  const auto batch = static_cast<std::size_t>(hp.batch_size);
  const std::size_t clamped_before = env.clamped_actions();

  for (int ep = 0; ep < hp.episodes; ++ep) {
    const double noise_std = hp.noise_at(ep);
    AgentState s = env.reset(static_cast<std::uint64_t>(ep));
    double total = 0.0, loss_sum = 0.0, q_sum = 0.0;
    int updates = 0;
    while (!env.done()) {
      const double a = act(agent.actor, s, noise_std, noise);
      const StepResult r = env.step(a);
      buffer.push({s, a, r.reward, r.state, r.done});
      total += r.reward;
      s = r.state;
      if (buffer.size() >= std::max(hp.warmup, batch)) {
        const auto sample = buffer.sample(batch);
        const auto st = agent.update(sample);
        loss_sum += st.critic_loss;
        q_sum += st.mean_q;
        ++updates;
      }
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    log.episode_reward.push_back(total);
    log.critic_loss.push_back(updates ? loss_sum / updates : nan);
    log.mean_q.push_back(updates ? q_sum / updates : nan);
    log.noise.push_back(noise_std);
    if (progress) progress(ep, log);
  }
  log.clamped_actions = env.clamped_actions() - clamped_before;
  if (!agent.actor.all_finite() || !agent.critic.all_finite())
    throw DomainError("train: network parameters diverged to non-finite values");
  return res;
}

void write_training_curve_csv(const std::string& path, const TrainingLog& log) {
  csv::Writer w(path);
  w.row({"episode", "reward", "critic_loss", "mean_q", "noise_std"});
  for (std::size_t e = 0; e < log.episode_reward.size(); ++e)
    w.row({std::to_string(e), csv::num(log.episode_reward[e]), csv::num(log.critic_loss[e]),
           csv::num(log.mean_q[e]), csv::num(log.noise[e])});
  w.close();
}

}  // namespace amh
