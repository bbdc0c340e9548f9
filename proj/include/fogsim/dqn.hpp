#pragma once

// Deep Q-network on top of the hand-rolled MLP: ring-buffer replay, a target
// network refreshed every fixed number of updates, and a TD loss masked to
// the taken action.

#include <cstdint>
#include <utility>
#include <vector>

#include "fogsim/errors.hpp"
#include "fogsim/neural.hpp"
#include "fogsim/rl.hpp"
#include "fogsim/rng.hpp"

namespace fogsim {

struct Transition {
  Vec state;
  int action = 0;
  double reward = 0.0;
  Vec next_state;
  bool terminal = false;
};

class ReplayBuffer {
 public:
  explicit ReplayBuffer(int capacity) : capacity_(capacity) {
    if (capacity < 1) throw ParamError("ReplayBuffer: capacity must be >= 1");
    data_.reserve(capacity);
  }

  void push(Transition t) {
    if (static_cast<int>(data_.size()) < capacity_) {
      data_.push_back(std::move(t));
    } else {
      data_[write_] = std::move(t);
    }
    write_ = (write_ + 1) % capacity_;
  }

  std::size_t size() const { return data_.size(); }

  // Uniform sample with replacement.
  std::vector<const Transition*> sample(int batch, Rng& rng) const {
    if (data_.empty()) throw EnvError("ReplayBuffer: sample from empty buffer");
    std::vector<const Transition*> out(batch);
    for (int i = 0; i < batch; ++i)
      out[i] = &data_[rng.next_below(static_cast<std::uint64_t>(data_.size()))];
    return out;
  }

 private:
  int capacity_ = 0;
  int write_ = 0;
  std::vector<Transition> data_;
};

// Mean TD error over the batch with gradients accumulated into `online`; the
// loss only flows through the Q output of each transition's taken action.
inline double dqn_loss_gradients(Mlp& online, const Mlp& target,
                                 const std::vector<const Transition*>& batch, double gamma) {
  if (batch.empty()) throw ParamError("dqn_loss_gradients: empty batch");
  online.zero_grads();
  Mlp::Workspace ws;
  Vec dout;
  double loss = 0.0;
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (const Transition* t : batch) {
    double bootstrap = 0.0;
    if (!t->terminal) {
      const Vec q_next = target.forward(t->next_state);
      bootstrap = q_next[0];
      for (double v : q_next) bootstrap = std::max(bootstrap, v);
    }
    const double y = t->reward + gamma * bootstrap;
    const Vec& q = online.forward(t->state, ws);
    const double err = q[static_cast<std::size_t>(t->action)] - y;
    loss += err * err * scale;
    dout.assign(q.size(), 0.0);
    dout[static_cast<std::size_t>(t->action)] = 2.0 * err * scale;
    online.backward(ws, dout);
  }
  return loss;
}

class DqnAgent {
 public:
  DqnAgent(int feature_dim, int actions, const AgentConfig& cfg)
      : actions_(checked_actions(actions)), cfg_(cfg),
        online_(MlpSpec{{feature_dim, cfg.dqn_hidden, actions},
                        Activation::tanh, Activation::identity},
                derive_seed(cfg.seed, 1001)),
        target_(online_),
        buffer_(cfg.replay_capacity),
        opt_(cfg.dqn_learning_rate) {}

  int greedy_action(const Vec& features) const {
    const Vec q = online_.forward(features);
    int best = 0;
    for (int a = 1; a < actions_; ++a)
      if (q[a] > q[best]) best = a;
    return best;
  }

  int select_action(const Vec& features, double epsilon, Rng& rng) const {
    if (rng.next_double() < epsilon)
      return static_cast<int>(rng.next_below(static_cast<std::uint64_t>(actions_)));
    return greedy_action(features);
  }

  void observe(Transition t) { buffer_.push(std::move(t)); }

  // One optimization step when enough transitions are buffered. Returns the
  // TD loss or a negative value when skipped.
  double maybe_update(Rng& rng) {
    if (static_cast<int>(buffer_.size()) < cfg_.warmup_transitions) return -1.0;
    const auto batch = buffer_.sample(cfg_.batch_size, rng);
    const double loss = dqn_loss_gradients(online_, target_, batch, cfg_.gamma);
    opt_.step(online_.params());
    ++updates_;
    if (updates_ % cfg_.target_sync_interval == 0) target_ = online_;
    return loss;
  }

  long updates() const { return updates_; }
  Mlp& online() { return online_; }
  const Mlp& target() const { return target_; }

 private:
  static int checked_actions(int actions) {
    if (actions < 1) throw ParamError("DqnAgent: need at least one action");
    return actions;
  }

  int actions_ = 0;
  AgentConfig cfg_;
  Mlp online_, target_;
  ReplayBuffer buffer_;
  AdamOptimizer opt_;
  long updates_ = 0;
};

struct DqnResult {
  DqnAgent agent;
  std::vector<double> episode_rewards;  // mean step reward per episode
};

inline DqnResult train_dqn(DiscreteEnv& env, const AgentConfig& cfg) {
  cfg.validate();
  DqnResult result{DqnAgent(env.feature_dim(), env.action_count(), cfg), {}};
  Rng rng(cfg.seed);
  Vec features, next_features;
  result.episode_rewards.reserve(cfg.episodes);
  for (int episode = 0; episode < cfg.episodes; ++episode) {
    const double eps = annealed_epsilon(cfg, episode);
    env.reset(rng);
    env.current_features(features);
    double reward_sum = 0.0;
    int steps = 0;
    for (; steps < cfg.max_steps_per_episode;) {
      const int action = result.agent.select_action(features, eps, rng);
      const StepResult sr = env.step(action, rng);
      env.current_features(next_features);
      result.agent.observe({features, action, sr.reward, next_features, sr.terminal});
      result.agent.maybe_update(rng);
      reward_sum += sr.reward;
      features = next_features;
      ++steps;
      if (sr.done) break;
    }
    result.episode_rewards.push_back(reward_sum / static_cast<double>(std::max(steps, 1)));
  }
  return result;
}

}  // namespace fogsim
