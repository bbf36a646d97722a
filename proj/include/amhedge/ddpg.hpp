// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "amhedge/mlp.hpp"
#include "amhedge/rng.hpp"

namespace amh {

/// (S/K, time to maturity in years, previous position).
using AgentState = std::array<double, 3>;

struct Transition {
  AgentState state{};
  double action = 0.0;
  double reward = 0.0;
  AgentState next_state{};
  bool terminal = false;
};

/// Fixed-capacity ring of transitions with uniform sampling.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, std::uint64_t seed);

  void push(const Transition& t);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  std::uint64_t inserted() const { return inserted_; }
  const Transition& at(std::size_t i) const { return items_.at(i); }

  /// Indices drawn uniformly with replacement.
  std::vector<std::size_t> sample_indices(std::size_t batch);
  std::vector<Transition> sample(std::size_t batch);

 private:
  std::size_t capacity_;
  std::vector<Transition> items_;
  std::uint64_t inserted_ = 0;
  Xoshiro256 rng_;
};

struct AgentHyperparams {
  double actor_lr = 5e-6;
  double critic_lr = 5e-4;
  double gamma = 1.0;
  int batch_size = 64;
  double tau = 0.005;
  double noise_start = 0.2;
  double noise_end = 0.02;
  double noise_decay_fraction = 0.8;
  int episodes = 5000;
  int steps_per_episode = 25;
  double kappa = 0.005;
  std::size_t buffer_capacity = 100000;
  std::size_t warmup = 1000;
  int hidden = 64;

  void validate() const;
  /// Exploration std for a 0-based episode index.
  double noise_at(int episode) const;
};

/// Deterministic policy output in [-1, 0].
double policy(const Mlp& actor, const AgentState& state);

/// -sigmoid(actor(state)) plus N(0, noise_std^2), clamped to [-1, 0]. No
/// draw is consumed when noise_std is 0.
double act(const Mlp& actor, const AgentState& state, double noise_std, NormalStream& rng);

/// One SGD step on the critic towards r + gamma (1 - terminal) Q'(s', mu'(s')).
/// Returns the mean squared error before the step.
double critic_update(Mlp& critic, const Mlp& target_actor, const Mlp& target_critic,
                     std::span<const Transition> batch, const AgentHyperparams& hp);

/// One SGD ascent step on mean Q(s, mu(s)). Returns the mean Q before the step.
double actor_update(Mlp& actor, const Mlp& critic, std::span<const AgentState> states,
                    const AgentHyperparams& hp);

/// Actor, critic and their slowly tracking targets.
struct DdpgAgent {
  Mlp actor;
  Mlp critic;
  Mlp target_actor;
  Mlp target_critic;
  AgentHyperparams hp;
  std::uint64_t seed = 0;

  /// Fresh networks drawn from substream (seed, 0).
  static DdpgAgent create(const AgentHyperparams& hp, std::uint64_t seed);

  /// Critic step, actor step, then soft updates of both targets.
  struct UpdateStats {
    double critic_loss = 0.0;
    double mean_q = 0.0;
  };
  UpdateStats update(std::span<const Transition> batch);

  void save(const std::string& path) const;
  static DdpgAgent load(const std::string& path);
};

}  // namespace amh
