#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "fogsim/dqn.hpp"

using namespace fogsim;

namespace {

TabularMdp make_two_state() {
  TabularMdp m;
  m.states = 2;
  m.actions = 2;
  m.start = 0;
  m.next = {{1, 1}, {1, 1}};
  m.reward = {{0.5, 1.0}, {0.0, 0.0}};
  m.terminal = {0, 1};
  return m;
}

TabularMdp make_gridworld(int n) {
  TabularMdp m;
  m.states = n * n;
  m.actions = 4;
  m.start = 0;
  m.next.assign(m.states, std::vector<int>(4));
  m.reward.assign(m.states, std::vector<double>(4, -1.0));
  m.terminal.assign(m.states, 0);
  m.terminal[m.states - 1] = 1;
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) {
      const int s = r * n + c;
      auto at = [&](int rr, int cc) {
        return std::clamp(rr, 0, n - 1) * n + std::clamp(cc, 0, n - 1);
      };
      m.next[s][0] = at(r - 1, c);
      m.next[s][1] = at(r + 1, c);
      m.next[s][2] = at(r, c - 1);
      m.next[s][3] = at(r, c + 1);
    }
  return m;
}

Transition tagged(double reward) {
  Transition t;
  t.state = {0.0};
  t.next_state = {0.0};
  t.reward = reward;
  t.terminal = true;
  return t;
}

std::set<double> sampled_rewards(const ReplayBuffer& buf, int draws) {
  Rng rng(2);
  std::set<double> seen;
  for (const Transition* t : buf.sample(draws, rng)) seen.insert(t->reward);
  return seen;
}

}  // namespace

TEST_CASE("replay buffer wraps around, oldest entry first") {
  ReplayBuffer buf(3);
  CHECK(buf.size() == 0);
  CHECK_THROWS_AS([&] { Rng r(1); buf.sample(1, r); }(), EnvError);

  buf.push(tagged(1.0));
  buf.push(tagged(2.0));
  CHECK(buf.size() == 2);
  CHECK(sampled_rewards(buf, 64) == std::set<double>{1.0, 2.0});

  buf.push(tagged(3.0));
  buf.push(tagged(4.0));  // evicts reward 1.0
  CHECK(buf.size() == 3);
  CHECK(sampled_rewards(buf, 256) == std::set<double>{2.0, 3.0, 4.0});
  buf.push(tagged(5.0));  // evicts reward 2.0
  CHECK(sampled_rewards(buf, 256) == std::set<double>{3.0, 4.0, 5.0});

  CHECK_THROWS_AS(ReplayBuffer(0), ParamError);
}

TEST_CASE("TD loss and gradient on an identity network, by hand") {
  Mlp online(MlpSpec{{2, 2}}, 1);  // single linear layer
  auto params = online.params();
  params[0].value[0] = 1.0;
  params[0].value[1] = 0.0;
  params[0].value[2] = 0.0;
  params[0].value[3] = 1.0;
  params[1].value[0] = 0.0;
  params[1].value[1] = 0.0;
  const Mlp target = online;

  Transition t;
  t.state = {1.0, 0.0};
  t.action = 0;
  t.reward = 1.0;
  t.next_state = {0.0, 1.0};
  t.terminal = false;

  // bootstrap = max target(s') = 1, y = 1 + 0.5*1 = 1.5, q[0] = 1, err = -0.5
  const double loss = dqn_loss_gradients(online, target, {&t}, 0.5);
  CHECK(loss == Catch::Approx(0.25).epsilon(1e-12));
  CHECK(params[0].grad[0] == Catch::Approx(-1.0));  // 2*err * s[0]
  CHECK(params[0].grad[1] == 0.0);
  CHECK(params[0].grad[2] == 0.0);  // untaken action row carries no gradient
  CHECK(params[0].grad[3] == 0.0);
  CHECK(params[1].grad[0] == Catch::Approx(-1.0));
  CHECK(params[1].grad[1] == 0.0);

  // terminal transition drops the bootstrap: y = 1, err = 0
  t.terminal = true;
  CHECK(dqn_loss_gradients(online, target, {&t}, 0.5) == Catch::Approx(0.0).margin(1e-15));

  CHECK_THROWS_AS(dqn_loss_gradients(online, target, {}, 0.5), ParamError);
}

TEST_CASE("TD gradients agree with finite differences") {
  Rng rng(6);
  Mlp online(MlpSpec{{3, 5, 2}, Activation::tanh, Activation::identity}, 7);
  Mlp target(MlpSpec{{3, 5, 2}, Activation::tanh, Activation::identity}, 8);

  std::vector<Transition> pool;
  for (int i = 0; i < 12; ++i) {
    Transition t;
    t.state = {rng.next_double(), rng.next_double(), rng.next_double()};
    t.next_state = {rng.next_double(), rng.next_double(), rng.next_double()};
    t.action = static_cast<int>(rng.next_below(2));
    t.reward = rng.uniform(-1.0, 1.0);
    t.terminal = (i % 4) == 0;
    pool.push_back(std::move(t));
  }
  std::vector<const Transition*> batch;
  for (const auto& t : pool) batch.push_back(&t);

  dqn_loss_gradients(online, target, batch, 0.9);
  auto params = online.params();
  std::vector<std::vector<double>> analytic;
  for (const auto& p : params) analytic.emplace_back(p.grad, p.grad + p.count);

  const double h = 1e-5;
  double worst = 0.0;
  for (std::size_t pi = 0; pi < params.size(); ++pi)
    for (std::size_t k = 0; k < params[pi].count; ++k) {
      double& w = params[pi].value[k];
      const double orig = w;
      w = orig + h;
      const double up = dqn_loss_gradients(online, target, batch, 0.9);
      w = orig - h;
      const double down = dqn_loss_gradients(online, target, batch, 0.9);
      w = orig;
      const double fd = (up - down) / (2.0 * h);
      const double an = analytic[pi][k];
      const double denom = std::max({std::abs(fd), std::abs(an), 1e-8});
      worst = std::max(worst, std::abs(fd - an) / denom);
    }
  CHECK(worst < 1e-4);
}

TEST_CASE("target network syncs on the configured update count") {
  AgentConfig cfg;
  cfg.warmup_transitions = 1;
  cfg.batch_size = 4;
  cfg.target_sync_interval = 5;
  cfg.dqn_hidden = 4;
  DqnAgent agent(2, 2, cfg);
  Rng rng(3);

  const Vec probe{0.3, 0.7};
  CHECK(agent.maybe_update(rng) < 0.0);  // below warmup: skipped
  CHECK(agent.updates() == 0);

  Transition t;
  t.state = {1.0, 0.0};
  t.action = 1;
  t.reward = 0.5;
  t.next_state = {0.0, 1.0};
  t.terminal = false;
  agent.observe(t);

  for (int u = 1; u <= 4; ++u) CHECK(agent.maybe_update(rng) >= 0.0);
  CHECK(agent.updates() == 4);
  // online has stepped away from the stale target
  CHECK(agent.online().forward(probe) != agent.target().forward(probe));
  agent.maybe_update(rng);  // fifth update triggers the sync
  CHECK(agent.online().forward(probe) == agent.target().forward(probe));

  CHECK_THROWS_AS(DqnAgent(2, 0, cfg), ParamError);
}

TEST_CASE("dqn nails the two-state payoffs") {
  TabularMdpEnv env(make_two_state(), 5);
  AgentConfig cfg;
  cfg.kind = AgentKind::dqn;
  cfg.gamma = 0.6;
  cfg.episodes = 1500;
  cfg.max_steps_per_episode = 5;
  cfg.seed = 4;
  cfg.dqn_hidden = 8;
  cfg.batch_size = 16;
  cfg.warmup_transitions = 50;
  cfg.target_sync_interval = 100;
  cfg.dqn_learning_rate = 3e-3;

  DqnResult result = train_dqn(env, cfg);
  CHECK(result.episode_rewards.size() == 1500);

  Rng rng(1);
  env.reset(rng);
  Vec features;
  env.current_features(features);
  // both terminal transitions have constant regression targets, so the net
  // should recover them almost exactly
  const Vec q = result.agent.online().forward(features);
  CHECK(q[0] == Catch::Approx(0.5).margin(1e-3));
  CHECK(q[1] == Catch::Approx(1.0).margin(1e-3));
  CHECK(result.agent.greedy_action(features) == 1);
}

TEST_CASE("dqn learns a working gridworld policy") {
  const TabularMdp mdp = make_gridworld(5);
  TabularMdpEnv env(mdp, 50);
  AgentConfig cfg;
  cfg.kind = AgentKind::dqn;
  cfg.gamma = 0.9;
  cfg.episodes = 600;
  cfg.max_steps_per_episode = 50;
  cfg.seed = 9;
  cfg.dqn_hidden = 24;
  cfg.batch_size = 32;
  cfg.warmup_transitions = 300;
  cfg.target_sync_interval = 200;
  cfg.dqn_learning_rate = 3e-3;

  DqnResult result = train_dqn(env, cfg);

  // greedy rollout from the far corner must reach the goal near-optimally
  Rng rng(1);
  env.reset(rng);
  Vec features;
  int steps = 0;
  bool reached = false;
  for (; steps < 16; ++steps) {
    env.current_features(features);
    const StepResult sr = env.step(result.agent.greedy_action(features), rng);
    if (sr.terminal) {
      reached = true;
      break;
    }
  }
  CHECK(reached);
  CHECK(steps + 1 >= 8);  // cannot beat the Manhattan distance
}
