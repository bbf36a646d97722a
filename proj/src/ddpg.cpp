// SPDX-License-Identifier: Apache-2.0
#include "amhedge/ddpg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "amhedge/error.hpp"

namespace amh {

namespace {

constexpr int kCheckpointVersion = 1;
constexpr const char* kCheckpointKind = "amhedge-ddpg-checkpoint";

Eigen::MatrixXd state_matrix(std::span<const AgentState> states) {
  Eigen::MatrixXd x(3, static_cast<Eigen::Index>(states.size()));
  for (std::size_t j = 0; j < states.size(); ++j)
    for (int i = 0; i < 3; ++i) x(i, static_cast<Eigen::Index>(j)) = states[j][i];
  return x;
}

/// Stacks states over actions into critic inputs.
Eigen::MatrixXd critic_input(const Eigen::MatrixXd& states, const Eigen::RowVectorXd& actions) {
  Eigen::MatrixXd x(4, states.cols());
  x.topRows(3) = states;
  x.row(3) = actions;
  return x;
}

nlohmann::json net_to_json(const Mlp& net) {
  return {{"sizes", net.sizes()},
          {"output", net.output_activation() == OutputActivation::kSigmoid ? "sigmoid" : "linear"},
          {"parameters", net.flat_parameters()}};
}

Mlp net_from_json(const nlohmann::json& j) {
  const auto sizes = j.at("sizes").get<std::vector<int>>();
  const auto out = j.at("output").get<std::string>();
  if (out != "sigmoid" && out != "linear") throw FormatError("checkpoint: unknown output activation " + out);
  Mlp net = Mlp::zeros(sizes, out == "sigmoid" ? OutputActivation::kSigmoid : OutputActivation::kLinear);
  const auto params = j.at("parameters").get<std::vector<double>>();
  if (params.size() != net.parameter_count()) throw FormatError("checkpoint: parameter count mismatch");
  net.set_flat_parameters(params);
  return net;
}

}  // namespace

ReplayBuffer::ReplayBuffer(std::size_t capacity, std::uint64_t seed) : capacity_(capacity), rng_(seed) {
  require(capacity >= 1, "replay buffer: capacity must be positive");
  items_.reserve(std::min<std::size_t>(capacity, 1u << 20));
}

void ReplayBuffer::push(const Transition& t) {
  if (items_.size() < capacity_) {
    items_.push_back(t);
  } else {
    items_[inserted_ % capacity_] = t;
  }
  ++inserted_;
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t batch) {
  require(!items_.empty(), "replay buffer: cannot sample from an empty buffer");
  std::vector<std::size_t> idx(batch);
  for (auto& i : idx) i = static_cast<std::size_t>(rng_.below(items_.size()));
  return idx;
}

std::vector<Transition> ReplayBuffer::sample(std::size_t batch) {
  std::vector<Transition> out;
  out.reserve(batch);
  for (std::size_t i : sample_indices(batch)) out.push_back(items_[i]);
  return out;
}

void AgentHyperparams::validate() const {
  require(actor_lr > 0.0 && actor_lr < critic_lr, "hyperparams: need 0 < actor_lr < critic_lr");
  require(gamma >= 0.0 && gamma <= 1.0, "hyperparams: gamma must lie in [0, 1]");
  require(batch_size >= 1, "hyperparams: batch_size must be positive");
  require(tau >= 0.0 && tau <= 1.0, "hyperparams: tau must lie in [0, 1]");
  require(noise_start >= 0.0 && noise_end >= 0.0, "hyperparams: noise std must be non-negative");
  require(noise_decay_fraction > 0.0 && noise_decay_fraction <= 1.0,
          "hyperparams: noise_decay_fraction must lie in (0, 1]");
  require(episodes >= 1 && steps_per_episode >= 1, "hyperparams: episodes and steps must be positive");
  require(kappa >= 0.0, "hyperparams: kappa must be non-negative");
  require(buffer_capacity >= 1, "hyperparams: buffer_capacity must be positive");
  require(hidden >= 1, "hyperparams: hidden width must be positive");
}

double AgentHyperparams::noise_at(int episode) const {
  const double horizon = noise_decay_fraction * episodes;
  const double frac = std::clamp(episode / horizon, 0.0, 1.0);
  return noise_start + (noise_end - noise_start) * frac;
}

double policy(const Mlp& actor, const AgentState& state) {
  return -actor.forward(std::span<const double>(state))[0];
}

double act(const Mlp& actor, const AgentState& state, double noise_std, NormalStream& rng) {
  double a = policy(actor, state);
  if (noise_std > 0.0) a += noise_std * rng();
  return std::clamp(a, -1.0, 0.0);
}

double critic_update(Mlp& critic, const Mlp& target_actor, const Mlp& target_critic,
                     std::span<const Transition> batch, const AgentHyperparams& hp) {
  require(!batch.empty(), "critic_update: empty batch");
  const auto n = static_cast<Eigen::Index>(batch.size());
  Eigen::MatrixXd s(3, n), s_next(3, n);
  Eigen::RowVectorXd a(n), r(n), alive(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto& t = batch[static_cast<std::size_t>(j)];
    for (int i = 0; i < 3; ++i) {
      s(i, j) = t.state[i];
      s_next(i, j) = t.next_state[i];
    }
    a(j) = t.action;
    r(j) = t.reward;
    alive(j) = t.terminal ? 0.0 : 1.0;
  }
  const Eigen::RowVectorXd a_next = -target_actor.forward(s_next).row(0);
  const Eigen::RowVectorXd q_next = target_critic.forward(critic_input(s_next, a_next)).row(0);
  const Eigen::RowVectorXd y = r + hp.gamma * alive.cwiseProduct(q_next);

  Mlp::Tape tape;
  const Eigen::RowVectorXd q = critic.forward(critic_input(s, a), &tape).row(0);
  const Eigen::RowVectorXd err = q - y;
  const double loss = err.squaredNorm() / static_cast<double>(n);
  const Eigen::MatrixXd upstream = (2.0 / static_cast<double>(n)) * err;
  critic.apply(critic.backward(tape, upstream), -hp.critic_lr);
  return loss;
}

double actor_update(Mlp& actor, const Mlp& critic, std::span<const AgentState> states,
                    const AgentHyperparams& hp) {
  require(!states.empty(), "actor_update: empty batch");
  const Eigen::MatrixXd s = state_matrix(states);
  const auto n = static_cast<double>(states.size());
  Mlp::Tape actor_tape, critic_tape;
  const Eigen::RowVectorXd a = -actor.forward(s, &actor_tape).row(0);
  const Eigen::RowVectorXd q = critic.forward(critic_input(s, a), &critic_tape).row(0);
  const double mean_q = q.mean();
  const Eigen::MatrixXd ones = Eigen::MatrixXd::Constant(1, s.cols(), 1.0 / n);
  const auto dq = critic.backward(critic_tape, ones, false);
  // a = -sigmoid(.), so d(mean Q)/d(actor output) = -dQ/da / n.
  const Eigen::MatrixXd upstream = -dq.input.row(3);
  actor.apply(actor.backward(actor_tape, upstream), hp.actor_lr);
  return mean_q;
}

DdpgAgent DdpgAgent::create(const AgentHyperparams& hp, std::uint64_t seed) {
  hp.validate();
  Xoshiro256 rng(seed, 0);
  DdpgAgent agent;
  agent.hp = hp;
  agent.seed = seed;
  agent.actor = Mlp({3, hp.hidden, hp.hidden, 1}, OutputActivation::kSigmoid, rng);
  agent.critic = Mlp({4, hp.hidden, hp.hidden, 1}, OutputActivation::kLinear, rng);
  agent.target_actor = agent.actor;
  agent.target_critic = agent.critic;
  return agent;
}

DdpgAgent::UpdateStats DdpgAgent::update(std::span<const Transition> batch) {
  UpdateStats st;
  st.critic_loss = critic_update(critic, target_actor, target_critic, batch, hp);
  std::vector<AgentState> states;
  states.reserve(batch.size());
  for (const auto& t : batch) states.push_back(t.state);
  st.mean_q = actor_update(actor, critic, states, hp);
  soft_update(target_actor, actor, hp.tau);
  soft_update(target_critic, critic, hp.tau);
  return st;
}

void DdpgAgent::save(const std::string& path) const {
  nlohmann::json j;
  j["kind"] = kCheckpointKind;
  j["version"] = kCheckpointVersion;
  j["seed"] = seed;
  j["hyperparams"] = {{"actor_lr", hp.actor_lr},
                      {"critic_lr", hp.critic_lr},
                      {"gamma", hp.gamma},
                      {"batch_size", hp.batch_size},
                      {"tau", hp.tau},
                      {"noise_start", hp.noise_start},
                      {"noise_end", hp.noise_end},
                      {"noise_decay_fraction", hp.noise_decay_fraction},
                      {"episodes", hp.episodes},
                      {"steps_per_episode", hp.steps_per_episode},
                      {"kappa", hp.kappa},
                      {"buffer_capacity", hp.buffer_capacity},
                      {"warmup", hp.warmup},
                      {"hidden", hp.hidden}};
  j["actor"] = net_to_json(actor);
  j["critic"] = net_to_json(critic);
  j["target_actor"] = net_to_json(target_actor);
  j["target_critic"] = net_to_json(target_critic);
  std::ofstream out(path);
  if (!out) throw IoError("cannot write checkpoint " + path);
  out << j.dump() << '\n';
  if (!out) throw IoError("failed writing checkpoint " + path);
}

DdpgAgent DdpgAgent::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open checkpoint " + path);
  nlohmann::json j;
  try {
    in >> j;
    if (j.at("kind").get<std::string>() != kCheckpointKind) throw FormatError("not a checkpoint: " + path);
    const int version = j.at("version").get<int>();
    if (version != kCheckpointVersion)
      throw FormatError("unsupported checkpoint version " + std::to_string(version));
    DdpgAgent a;
    a.seed = j.at("seed").get<std::uint64_t>();
    const auto& h = j.at("hyperparams");
    a.hp.actor_lr = h.at("actor_lr");
    a.hp.critic_lr = h.at("critic_lr");
    a.hp.gamma = h.at("gamma");
    a.hp.batch_size = h.at("batch_size");
    a.hp.tau = h.at("tau");
    a.hp.noise_start = h.at("noise_start");
    a.hp.noise_end = h.at("noise_end");
    a.hp.noise_decay_fraction = h.at("noise_decay_fraction");
    a.hp.episodes = h.at("episodes");
    a.hp.steps_per_episode = h.at("steps_per_episode");
    a.hp.kappa = h.at("kappa");
    a.hp.buffer_capacity = h.at("buffer_capacity");
    a.hp.warmup = h.at("warmup");
    a.hp.hidden = h.at("hidden");
    a.actor = net_from_json(j.at("actor"));
    a.critic = net_from_json(j.at("critic"));
    a.target_actor = net_from_json(j.at("target_actor"));
    a.target_critic = net_from_json(j.at("target_critic"));
    if (a.actor.input_size() != 3 || a.actor.output_size() != 1 || a.critic.input_size() != 4 ||
        a.critic.output_size() != 1)
      throw FormatError("checkpoint: unexpected network shapes");
    return a;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("malformed checkpoint " + path + ": " + e.what());
  }
}

}  // namespace amh
