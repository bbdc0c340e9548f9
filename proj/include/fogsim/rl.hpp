#pragma once

// Tabular reinforcement learning: sparse Q-table, epsilon-greedy Q-learning,
// the pursuit learning automata variant that drives exploration from a binary
// feedback signal, and a value-iteration oracle for explicit MDPs.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "fogsim/errors.hpp"
#include "fogsim/matrix.hpp"
#include "fogsim/rng.hpp"

namespace fogsim {

struct StepResult {
  std::uint64_t next_state = 0;
  double reward = 0.0;
  bool done = false;      // episode over (cap or terminal)
  bool terminal = false;  // absorbing state: no bootstrap past it
};

// Environment contract shared by the tabular and DQN trainers. State ids are
// opaque 64-bit keys; `current_features` exposes the same state as a dense
// vector for function approximation.
class DiscreteEnv {
 public:
  virtual ~DiscreteEnv() = default;
  virtual int action_count() const = 0;
  virtual int feature_dim() const = 0;
  virtual std::uint64_t reset(Rng& rng) = 0;
  virtual StepResult step(int action, Rng& rng) = 0;
  virtual void current_features(Vec& out) const = 0;
};

// Sparse state-indexed Q table; absent rows read as zeros.
class QTable {
 public:
  QTable() = default;
  explicit QTable(int actions) : actions_(actions) {
    if (actions < 1) throw ParamError("QTable: need at least one action");
  }

  int actions() const { return actions_; }

  double q(std::uint64_t state, int action) const {
    const auto it = rows_.find(state);
    return it == rows_.end() ? 0.0 : it->second[static_cast<std::size_t>(action)];
  }

  Vec& row(std::uint64_t state) {
    auto [it, inserted] = rows_.try_emplace(state);
    if (inserted) it->second.assign(actions_, 0.0);
    return it->second;
  }

  double max_q(std::uint64_t state) const {
    const auto it = rows_.find(state);
    if (it == rows_.end()) return 0.0;
    double best = it->second[0];
    for (double v : it->second) best = std::max(best, v);
    return best;
  }

  // Lowest-index action whose value is within `eps` of the row maximum, so
  // numerically tied actions resolve deterministically.
  int argmax_tiebreak_low(std::uint64_t state, double eps = 1e-9) const {
    const auto it = rows_.find(state);
    if (it == rows_.end()) return 0;
    double best = it->second[0];
    for (double v : it->second) best = std::max(best, v);
    for (int a = 0; a < actions_; ++a)
      if (it->second[a] >= best - eps) return a;
    return 0;
  }

  // One temporal-difference backup. `terminal` cuts the bootstrap term.
  void q_update(std::uint64_t state, int action, double reward, std::uint64_t next_state,
                bool terminal, double alpha, double gamma) {
    const double target = reward + (terminal ? 0.0 : gamma * max_q(next_state));
    double& cell = row(state)[static_cast<std::size_t>(action)];
    cell += alpha * (target - cell);
  }

  std::size_t visited_states() const { return rows_.size(); }
  const std::unordered_map<std::uint64_t, Vec>& rows() const { return rows_; }

 private:
  int actions_ = 0;
  std::unordered_map<std::uint64_t, Vec> rows_;
};

inline int epsilon_greedy_select(const QTable& table, std::uint64_t state, double epsilon,
                                 Rng& rng) {
  if (epsilon < 0.0 || epsilon > 1.0) throw ParamError("epsilon_greedy_select: epsilon in [0,1]");
  if (rng.next_double() < epsilon)
    return static_cast<int>(rng.next_below(static_cast<std::uint64_t>(table.actions())));
  return table.argmax_tiebreak_low(state);
}

// Pursuit learning automata: one action-probability simplex per state plus a
// running mean of the binary feedback per action. Each update shifts
// probability mass toward the action with the best feedback estimate.
class PursuitLA {
 public:
  PursuitLA() = default;
  PursuitLA(int actions, double lambda) : actions_(actions), lambda_(lambda) {
    if (actions < 1) throw ParamError("PursuitLA: need at least one action");
    if (lambda <= 0.0 || lambda >= 1.0) throw ParamError("PursuitLA: lambda in (0,1)");
  }

  int la_select(std::uint64_t state, Rng& rng) {
    Node& node = node_for(state);
    const double u = rng.next_double();
    double acc = 0.0;
    for (int a = 0; a < actions_; ++a) {
      acc += node.p[a];
      if (u < acc) return a;
    }
    return actions_ - 1;
  }

  // `signal` is the binary feedback in {0,1} for the action just taken.
  void la_update(std::uint64_t state, int action, double signal) {
    if (signal < 0.0 || signal > 1.0) throw ParamError("PursuitLA: signal in [0,1]");
    Node& node = node_for(state);
    node.est_count[action] += 1;
    node.est_mean[action] +=
        (signal - node.est_mean[action]) / static_cast<double>(node.est_count[action]);

    int best = 0;
    for (int a = 1; a < actions_; ++a)
      if (node.est_mean[a] > node.est_mean[best]) best = a;

    for (int a = 0; a < actions_; ++a) node.p[a] *= 1.0 - lambda_;
    node.p[best] += lambda_;
  }

  double probability(std::uint64_t state, int action) const {
    const auto it = nodes_.find(state);
    if (it == nodes_.end()) return 1.0 / static_cast<double>(actions_);
    return it->second.p[static_cast<std::size_t>(action)];
  }

  double estimate(std::uint64_t state, int action) const {
    const auto it = nodes_.find(state);
    if (it == nodes_.end()) return 0.0;
    return it->second.est_mean[static_cast<std::size_t>(action)];
  }

 private:
  struct Node {
    Vec p, est_mean;
    std::vector<long> est_count;
  };

  Node& node_for(std::uint64_t state) {
    auto [it, inserted] = nodes_.try_emplace(state);
    if (inserted) {
      it->second.p.assign(actions_, 1.0 / static_cast<double>(actions_));
      it->second.est_mean.assign(actions_, 0.0);
      it->second.est_count.assign(actions_, 0);
    }
    return it->second;
  }

  int actions_ = 0;
  double lambda_ = 0.1;
  std::unordered_map<std::uint64_t, Node> nodes_;
};

// --- training loop ---------------------------------------------------------

enum class AgentKind { q_learning, laql, dqn };

inline AgentKind parse_agent_kind(const std::string& name) {
  if (name == "q_learning") return AgentKind::q_learning;
  if (name == "laql") return AgentKind::laql;
  if (name == "dqn") return AgentKind::dqn;
  throw ParamError("unknown agent kind: " + name);
}

struct AgentConfig {
  AgentKind kind = AgentKind::q_learning;
  double alpha = 0.75;
  double gamma = 0.6;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  int episodes = 300;
  int max_steps_per_episode = 50;
  double la_lambda = 0.1;
  std::uint64_t seed = 1;

  // DQN-only knobs.
  int dqn_hidden = 32;
  int replay_capacity = 10000;
  int batch_size = 32;
  int target_sync_interval = 100;
  int warmup_transitions = 200;
  double dqn_learning_rate = 1e-3;

  void validate() const {
    if (alpha <= 0.0 || alpha > 1.0) throw ParamError("agent config: alpha in (0,1]");
    if (gamma < 0.0 || gamma >= 1.0) throw ParamError("agent config: gamma in [0,1)");
    if (epsilon_start < 0.0 || epsilon_start > 1.0 || epsilon_end < 0.0 || epsilon_end > 1.0)
      throw ParamError("agent config: epsilon in [0,1]");
    if (episodes < 1) throw ParamError("agent config: episodes must be >= 1");
    if (max_steps_per_episode < 1) throw ParamError("agent config: steps per episode must be >= 1");
    if (la_lambda <= 0.0 || la_lambda >= 1.0) throw ParamError("agent config: la_lambda in (0,1)");
  }
};

// Linear anneal across episodes; episode indices are 0-based.
inline double annealed_epsilon(const AgentConfig& cfg, int episode) {
  if (cfg.episodes <= 1) return cfg.epsilon_end;
  const double frac = static_cast<double>(episode) / static_cast<double>(cfg.episodes - 1);
  return cfg.epsilon_start + (cfg.epsilon_end - cfg.epsilon_start) * frac;
}

struct TabularResult {
  QTable q;
  PursuitLA automata;                  // populated for laql
  std::vector<double> episode_rewards; // mean step reward per episode
};

// Q-learning with either epsilon-greedy exploration (q_learning) or pursuit
// learning-automata exploration (laql). The LA feedback signal is 1 when the
// step reward beats the running mean reward observed at that state.
inline TabularResult train_tabular(DiscreteEnv& env, const AgentConfig& cfg) {
  cfg.validate();
  if (cfg.kind == AgentKind::dqn) throw ParamError("train_tabular: use train_dqn for dqn agents");

  TabularResult result;
  result.q = QTable(env.action_count());
  const bool use_la = cfg.kind == AgentKind::laql;
  if (use_la) result.automata = PursuitLA(env.action_count(), cfg.la_lambda);

  struct Baseline {
    double mean = 0.0;
    long count = 0;
  };
  std::unordered_map<std::uint64_t, Baseline> reward_baseline;

  Rng rng(cfg.seed);
  result.episode_rewards.reserve(cfg.episodes);
  for (int episode = 0; episode < cfg.episodes; ++episode) {
    const double eps = annealed_epsilon(cfg, episode);
    std::uint64_t state = env.reset(rng);
    double reward_sum = 0.0;
    int steps = 0;
    for (; steps < cfg.max_steps_per_episode; ++steps) {
      const int action = use_la ? result.automata.la_select(state, rng)
                                : epsilon_greedy_select(result.q, state, eps, rng);
      const StepResult sr = env.step(action, rng);
      result.q.q_update(state, action, sr.reward, sr.next_state, sr.terminal, cfg.alpha,
                        cfg.gamma);
      if (use_la) {
        Baseline& base = reward_baseline[state];
        const double signal = (base.count == 0 || sr.reward > base.mean) ? 1.0 : 0.0;
        base.count += 1;
        base.mean += (sr.reward - base.mean) / static_cast<double>(base.count);
        result.automata.la_update(state, action, signal);
      }
      reward_sum += sr.reward;
      state = sr.next_state;
      if (sr.done) {
        ++steps;
        break;
      }
    }
    result.episode_rewards.push_back(reward_sum / static_cast<double>(std::max(steps, 1)));
  }
  return result;
}

// --- explicit MDPs and the value-iteration oracle ---------------------------

// Deterministic finite MDP given by dense transition/reward tables.
struct TabularMdp {
  int states = 0;
  int actions = 0;
  int start = 0;
  std::vector<std::vector<int>> next;       // [state][action]
  std::vector<std::vector<double>> reward;  // [state][action]
  std::vector<char> terminal;               // [state]

  void validate() const {
    if (states < 1 || actions < 1) throw ParamError("TabularMdp: empty state or action space");
    if (start < 0 || start >= states) throw ParamError("TabularMdp: start out of range");
    if (static_cast<int>(next.size()) != states || static_cast<int>(reward.size()) != states ||
        static_cast<int>(terminal.size()) != states)
      throw ShapeError("TabularMdp: table sizes disagree with state count");
    for (int s = 0; s < states; ++s) {
      if (static_cast<int>(next[s].size()) != actions ||
          static_cast<int>(reward[s].size()) != actions)
        throw ShapeError("TabularMdp: row sizes disagree with action count");
      for (int a = 0; a < actions; ++a)
        if (next[s][a] < 0 || next[s][a] >= states)
          throw ParamError("TabularMdp: transition target out of range");
    }
  }
};

// Exact Q* for a deterministic MDP. Terminal states have value zero.
inline Mat value_iteration(const TabularMdp& mdp, double gamma, double tol = 1e-12,
                           int max_sweeps = 100000) {
  mdp.validate();
  if (gamma < 0.0 || gamma >= 1.0) throw ParamError("value_iteration: gamma in [0,1)");
  Mat q(mdp.states, mdp.actions);
  Vec v(mdp.states, 0.0);
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double delta = 0.0;
    for (int s = 0; s < mdp.states; ++s) {
      if (mdp.terminal[s]) continue;
      double best = -1e300;
      for (int a = 0; a < mdp.actions; ++a) {
        const int ns = mdp.next[s][a];
        q(s, a) = mdp.reward[s][a] + (mdp.terminal[ns] ? 0.0 : gamma * v[ns]);
        best = std::max(best, q(s, a));
      }
      delta = std::max(delta, std::abs(best - v[s]));
      v[s] = best;
    }
    if (delta < tol) break;
  }
  return q;
}

// DiscreteEnv wrapper so the trainers can run on explicit MDPs. Features are
// a one-hot encoding of the state.
class TabularMdpEnv : public DiscreteEnv {
 public:
  TabularMdpEnv(TabularMdp mdp, int max_steps) : mdp_(std::move(mdp)), max_steps_(max_steps) {
    mdp_.validate();
    if (max_steps < 1) throw ParamError("TabularMdpEnv: max_steps must be >= 1");
  }

  int action_count() const override { return mdp_.actions; }
  int feature_dim() const override { return mdp_.states; }

  std::uint64_t reset(Rng&) override {
    state_ = mdp_.start;
    steps_ = 0;
    return static_cast<std::uint64_t>(state_);
  }

  StepResult step(int action, Rng&) override {
    if (action < 0 || action >= mdp_.actions) throw ParamError("TabularMdpEnv: action out of range");
    if (mdp_.terminal[state_]) throw EnvError("TabularMdpEnv: step from terminal state");
    StepResult sr;
    sr.reward = mdp_.reward[state_][action];
    state_ = mdp_.next[state_][action];
    sr.next_state = static_cast<std::uint64_t>(state_);
    sr.terminal = mdp_.terminal[state_] != 0;
    ++steps_;
    sr.done = sr.terminal || steps_ >= max_steps_;
    return sr;
  }

  void current_features(Vec& out) const override {
    out.assign(mdp_.states, 0.0);
    out[static_cast<std::size_t>(state_)] = 1.0;
  }

  const TabularMdp& mdp() const { return mdp_; }

 private:
  TabularMdp mdp_;
  int max_steps_ = 0;
  int state_ = 0;
  int steps_ = 0;
};

// Shortest-path distances on a deterministic MDP graph, for gridworld oracles.
inline std::vector<int> bfs_distances_to_terminal(const TabularMdp& mdp) {
  mdp.validate();
  std::vector<int> dist(mdp.states, -1);
  std::vector<int> frontier;
  for (int s = 0; s < mdp.states; ++s)
    if (mdp.terminal[s]) {
      dist[s] = 0;
      frontier.push_back(s);
    }
  // reverse adjacency
  std::vector<std::vector<int>> preds(mdp.states);
  for (int s = 0; s < mdp.states; ++s)
    for (int a = 0; a < mdp.actions; ++a)
      if (!mdp.terminal[s]) preds[mdp.next[s][a]].push_back(s);
  while (!frontier.empty()) {
    std::vector<int> next_frontier;
    for (int t : frontier)
      for (int p : preds[t])
        if (dist[p] < 0) {
          dist[p] = dist[t] + 1;
          next_frontier.push_back(p);
        }
    frontier = std::move(next_frontier);
  }
  return dist;
}

}  // namespace fogsim
