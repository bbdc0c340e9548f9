#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "fogsim/rl.hpp"

using namespace fogsim;

namespace {

// n x n gridworld: 4 moves clamped at the walls, -1 per step, bottom-right
// corner absorbing.
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

// One-step choice between a small and a large payoff, both ending the episode.
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

int mat_argmax_tied(const Mat& q, int s, double eps = 1e-9) {
  double best = q(s, 0);
  for (int a = 1; a < q.cols; ++a) best = std::max(best, q(s, a));
  for (int a = 0; a < q.cols; ++a)
    if (q(s, a) >= best - eps) return a;
  return 0;
}

}  // namespace

TEST_CASE("temporal-difference backup arithmetic") {
  QTable t(2);
  CHECK(t.q(0, 1) == 0.0);
  CHECK(t.max_q(5) == 0.0);

  t.q_update(0, 1, 1.0, 5, false, 0.5, 0.9);  // empty next row: target = 1.0
  CHECK(t.q(0, 1) == Catch::Approx(0.5));

  t.row(5) = {2.0, 3.0};
  t.q_update(0, 1, 1.0, 5, false, 0.5, 0.9);  // target = 1 + 0.9*3 = 3.7
  CHECK(t.q(0, 1) == Catch::Approx(2.1));

  t.q_update(0, 1, 1.0, 5, true, 0.5, 0.9);  // terminal cuts the bootstrap
  CHECK(t.q(0, 1) == Catch::Approx(1.55));

  CHECK(t.visited_states() == 2);
  CHECK_THROWS_AS(QTable(0), ParamError);
}

TEST_CASE("argmax collapses numerical ties to the lowest index") {
  QTable t(3);
  t.row(7) = {1.0, 1.0 - 1e-12, 0.5};
  CHECK(t.argmax_tiebreak_low(7) == 0);
  t.row(8) = {0.5, 1.0, 1.0};
  CHECK(t.argmax_tiebreak_low(8) == 1);
  t.row(9) = {0.5, 0.4, 0.6};
  CHECK(t.argmax_tiebreak_low(9) == 2);
  CHECK(t.argmax_tiebreak_low(12345) == 0);  // unseen state
}

TEST_CASE("epsilon-greedy splits draws as configured") {
  QTable t(2);
  t.row(0) = {0.0, 1.0};
  Rng rng(5);
  const int n = 100000;
  int greedy = 0;
  for (int i = 0; i < n; ++i)
    if (epsilon_greedy_select(t, 0, 0.3, rng) == 1) ++greedy;
  // P(best) = 0.7 + 0.3/2
  CHECK(static_cast<double>(greedy) / n == Catch::Approx(0.85).margin(0.01));

  for (int i = 0; i < 100; ++i) CHECK(epsilon_greedy_select(t, 0, 0.0, rng) == 1);
  int ones = 0;
  for (int i = 0; i < n; ++i) ones += epsilon_greedy_select(t, 0, 1.0, rng);
  CHECK(static_cast<double>(ones) / n == Catch::Approx(0.5).margin(0.01));

  CHECK_THROWS_AS(epsilon_greedy_select(t, 0, 1.5, rng), ParamError);
}

TEST_CASE("pursuit automata follow the closed-form geometric pull") {
  PursuitLA la(2, 0.1);
  CHECK(la.probability(3, 0) == 0.5);  // unseen state is uniform
  for (int k = 1; k <= 20; ++k) {
    la.la_update(3, 0, 1.0);
    CHECK(la.probability(3, 0) == Catch::Approx(1.0 - 0.5 * std::pow(0.9, k)).epsilon(1e-12));
    CHECK(la.probability(3, 1) == Catch::Approx(0.5 * std::pow(0.9, k)).epsilon(1e-12));
  }
  CHECK(la.estimate(3, 0) == 1.0);
  CHECK(la.estimate(3, 1) == 0.0);

  CHECK_THROWS_AS(PursuitLA(2, 0.0), ParamError);
  CHECK_THROWS_AS(PursuitLA(2, 1.0), ParamError);
  CHECK_THROWS_AS(la.la_update(3, 0, 2.0), ParamError);
}

TEST_CASE("pursuit updates preserve the simplex and only grow the leader") {
  const int actions = 5;
  PursuitLA la(actions, 0.07);
  Rng rng(17);
  for (int iter = 0; iter < 100000; ++iter) {
    const std::uint64_t state = rng.next_below(8);
    const int action = static_cast<int>(rng.next_below(actions));
    std::vector<double> before(actions);
    for (int a = 0; a < actions; ++a) before[a] = la.probability(state, a);
    la.la_update(state, action, rng.next_double() < 0.4 ? 1.0 : 0.0);

    double sum = 0.0;
    int grew = 0;
    for (int a = 0; a < actions; ++a) {
      const double p = la.probability(state, a);
      REQUIRE(p >= 0.0);
      REQUIRE(p <= 1.0);
      const double est = la.estimate(state, a);
      REQUIRE(est >= 0.0);
      REQUIRE(est <= 1.0);
      sum += p;
      if (p > before[a] + 1e-15) ++grew;
    }
    REQUIRE(sum == Catch::Approx(1.0).margin(1e-9));
    REQUIRE(grew <= 1);  // only the current best estimate gains mass
  }
}

TEST_CASE("epsilon anneal is linear with exact endpoints") {
  AgentConfig cfg;
  cfg.epsilon_start = 1.0;
  cfg.epsilon_end = 0.05;
  cfg.episodes = 301;
  CHECK(annealed_epsilon(cfg, 0) == 1.0);
  CHECK(annealed_epsilon(cfg, 300) == Catch::Approx(0.05));
  CHECK(annealed_epsilon(cfg, 150) == Catch::Approx((1.0 + 0.05) / 2.0));
  for (int e = 1; e <= 300; ++e) CHECK(annealed_epsilon(cfg, e) < annealed_epsilon(cfg, e - 1));
  cfg.episodes = 1;
  CHECK(annealed_epsilon(cfg, 0) == 0.05);
}

TEST_CASE("agent config validation") {
  AgentConfig cfg;
  cfg.alpha = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ParamError);
  cfg = {};
  cfg.gamma = 1.0;
  CHECK_THROWS_AS(cfg.validate(), ParamError);
  cfg = {};
  cfg.episodes = 0;
  CHECK_THROWS_AS(cfg.validate(), ParamError);
  cfg = {};
  cfg.la_lambda = 1.0;
  CHECK_THROWS_AS(cfg.validate(), ParamError);

  CHECK(parse_agent_kind("laql") == AgentKind::laql);
  CHECK(parse_agent_kind("q_learning") == AgentKind::q_learning);
  CHECK(parse_agent_kind("dqn") == AgentKind::dqn);
  CHECK_THROWS_AS(parse_agent_kind("sarsa"), ParamError);

  TabularMdpEnv env(make_two_state(), 5);
  cfg = {};
  cfg.kind = AgentKind::dqn;
  CHECK_THROWS_AS(train_tabular(env, cfg), ParamError);
}

TEST_CASE("two-state choice: value iteration and learning agree on Q*") {
  const TabularMdp mdp = make_two_state();
  const Mat qstar = value_iteration(mdp, 0.6);
  CHECK(qstar(0, 0) == Catch::Approx(0.5));
  CHECK(qstar(0, 1) == Catch::Approx(1.0));

  TabularMdpEnv env(mdp, 5);
  AgentConfig cfg;
  cfg.episodes = 200;
  cfg.max_steps_per_episode = 5;
  cfg.seed = 3;
  const TabularResult learned = train_tabular(env, cfg);
  CHECK(learned.q.q(0, 0) == Catch::Approx(0.5).margin(1e-3));
  CHECK(learned.q.q(0, 1) == Catch::Approx(1.0).margin(1e-3));
  CHECK(learned.q.argmax_tiebreak_low(0) == 1);
  CHECK(learned.episode_rewards.size() == 200);

  AgentConfig la_cfg = cfg;
  la_cfg.kind = AgentKind::laql;
  TabularMdpEnv env2(mdp, 5);
  const TabularResult la = train_tabular(env2, la_cfg);
  CHECK(la.q.q(0, 1) == Catch::Approx(1.0).margin(1e-3));
  CHECK(la.q.argmax_tiebreak_low(0) == 1);
  // the automata lock onto the better arm
  CHECK(la.automata.probability(0, 1) > 0.9);
  CHECK(la.automata.probability(0, 0) + la.automata.probability(0, 1) ==
        Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("gridworld: value iteration matches the shortest-path closed form") {
  const TabularMdp mdp = make_gridworld(5);
  const double gamma = 0.9;
  const Mat qstar = value_iteration(mdp, gamma);
  const auto dist = bfs_distances_to_terminal(mdp);

  for (int r = 0; r < 5; ++r)
    for (int c = 0; c < 5; ++c) {
      const int s = r * 5 + c;
      CHECK(dist[s] == (4 - r) + (4 - c));  // Manhattan distance, no obstacles
      if (mdp.terminal[s]) continue;
      double vstar = qstar(s, 0);
      for (int a = 1; a < 4; ++a) vstar = std::max(vstar, qstar(s, a));
      const double expected = -(1.0 - std::pow(gamma, dist[s])) / (1.0 - gamma);
      CHECK(vstar == Catch::Approx(expected).epsilon(1e-9));
    }
}

TEST_CASE("gridworld: the learned greedy policy is optimal everywhere") {
  const TabularMdp mdp = make_gridworld(5);
  const double gamma = 0.9;
  const Mat qstar = value_iteration(mdp, gamma);

  TabularMdpEnv env(mdp, 50);
  AgentConfig cfg;
  cfg.gamma = gamma;
  cfg.episodes = 3000;
  cfg.max_steps_per_episode = 50;
  cfg.seed = 11;
  const TabularResult learned = train_tabular(env, cfg);

  for (int s = 0; s < mdp.states; ++s) {
    if (mdp.terminal[s]) continue;
    double best = qstar(s, 0);
    for (int a = 1; a < 4; ++a) best = std::max(best, qstar(s, a));
    // the learned pick must be one of the oracle-optimal actions
    const int pick = learned.q.argmax_tiebreak_low(s);
    CHECK(qstar(s, pick) == Catch::Approx(best).margin(1e-9));
    CHECK(learned.q.max_q(s) == Catch::Approx(best).margin(1e-3));
  }
  // fully optimal play from the far corner scores -8/8 per step over 8 steps
  (void)mat_argmax_tied(qstar, 0);
}

TEST_CASE("explicit MDP validation catches malformed tables") {
  TabularMdp m = make_two_state();
  m.start = 7;
  CHECK_THROWS_AS(m.validate(), ParamError);
  m = make_two_state();
  m.next[0][1] = 9;
  CHECK_THROWS_AS(m.validate(), ParamError);
  m = make_two_state();
  m.reward[1].pop_back();
  CHECK_THROWS_AS(m.validate(), ShapeError);
  m = make_two_state();
  m.terminal.pop_back();
  CHECK_THROWS_AS(m.validate(), ShapeError);
}

TEST_CASE("env wrapper separates step-cap 'done' from absorbing 'terminal'") {
  // two states looping forever: the cap fires, the bootstrap must not be cut
  TabularMdp loop;
  loop.states = 2;
  loop.actions = 1;
  loop.start = 0;
  loop.next = {{1}, {0}};
  loop.reward = {{0.1}, {0.1}};
  loop.terminal = {0, 0};
  TabularMdpEnv env(loop, 3);
  Rng rng(1);
  CHECK(env.reset(rng) == 0);
  CHECK(env.feature_dim() == 2);
  Vec feat;
  env.current_features(feat);
  CHECK(feat == Vec{1.0, 0.0});

  StepResult sr = env.step(0, rng);
  CHECK_FALSE(sr.done);
  CHECK_FALSE(sr.terminal);
  env.step(0, rng);
  sr = env.step(0, rng);
  CHECK(sr.done);
  CHECK_FALSE(sr.terminal);

  // absorbing end: done and terminal together, and stepping on is an error
  TabularMdpEnv tenv(make_two_state(), 5);
  tenv.reset(rng);
  sr = tenv.step(1, rng);
  CHECK(sr.done);
  CHECK(sr.terminal);
  CHECK_THROWS_AS(tenv.step(0, rng), EnvError);
  CHECK_THROWS_AS(tenv.step(5, rng), ParamError);
}
