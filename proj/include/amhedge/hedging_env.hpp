// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "amhedge/ddpg.hpp"
#include "amhedge/market_models.hpp"
#include "amhedge/pricing.hpp"

namespace amh {

/// Fresh GBM path per episode from substream (seed, episode).
struct GbmSource {
  GbmParams params;
  std::uint64_t seed = 0;
};

/// Fresh floored SV path per episode from substream (seed, episode).
struct SvSource {
  SvParams params;
  std::uint64_t seed = 0;
};

/// Episode e replays path e of a pregenerated set.
struct PathSetSource {
  std::shared_ptr<const PathSet> paths;
};

using PathSource = std::variant<GbmSource, SvSource, PathSetSource>;

struct EnvConfig {
  double strike = 100.0;
  double maturity = 1.0;
  int rebalances = 25;
  double kappa = 0.005;
  std::shared_ptr<const OptionPricer> pricer;
  PathSource source;

  void validate() const;
};

struct StepResult {
  AgentState state{};
  double reward = 0.0;
  bool done = false;
};

/// Row n holds the post-step values of step n; `a` is the position held over
/// (t_{n-1}, t_n] and `reward` the reward of that step. Row 0 carries A = R = 0.
struct TranscriptRow {
  int step = 0;
  double t = 0.0;
  double s = 0.0;
  double vol = 0.0;
  double c = 0.0;
  double a = 0.0;
  double reward = 0.0;
};

class HedgingEnv {
 public:
  explicit HedgingEnv(EnvConfig cfg);

  AgentState reset(std::uint64_t episode);
  StepResult step(double action);

  const EnvConfig& config() const { return cfg_; }
  const TimeGrid& grid() const { return grid_; }
  int current_step() const { return n_; }
  bool done() const { return n_ >= grid_.steps(); }
  AgentState state() const;
  std::size_t clamped_actions() const { return clamped_; }
  const std::vector<TranscriptRow>& transcript() const { return transcript_; }

 private:
  double option_value(int n) const;

  EnvConfig cfg_;
  TimeGrid grid_;
  std::vector<double> s_, vol_;
  int n_ = -1;
  double prev_action_ = 0.0;
  double c_now_ = 0.0;
  std::size_t clamped_ = 0;
  std::vector<TranscriptRow> transcript_;
};

void write_transcript_csv(const std::string& path, const std::vector<TranscriptRow>& rows);

struct TrainingLog {
  std::vector<double> episode_reward;
  std::vector<double> critic_loss;  // mean over the episode's updates, NaN before warmup
  std::vector<double> mean_q;
  std::vector<double> noise;
  std::size_t clamped_actions = 0;
};

struct TrainingResult {
  DdpgAgent agent;
  TrainingLog log;
};

/// Episode e resets the environment with episode index e. Network init uses
/// substream (seed, 0), exploration (seed, 1), replay sampling (seed, 2).
TrainingResult train_agent(HedgingEnv& env, const AgentHyperparams& hp, std::uint64_t seed,
                           const std::function<void(int, const TrainingLog&)>& progress = {});

void write_training_curve_csv(const std::string& path, const TrainingLog& log);

}  // namespace amh
