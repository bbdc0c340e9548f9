#pragma once

// Cache-aided MEC offloading: tasks arrive per step, a decision picks the
// compute site (local / fog / cloud) and whether to cache the result at the
// serving AP, and the cost splits into the four phases (offload, process,
// fronthaul escalation, download). Rewards trade normalized latency against
// normalized energy with a deadline penalty.

#include <algorithm>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fogsim/errors.hpp"
#include "fogsim/noma.hpp"
#include "fogsim/popularity.hpp"
#include "fogsim/rl.hpp"
#include "fogsim/rng.hpp"
#include "fogsim/scenario.hpp"

namespace fogsim {

struct MecTask {
  int type_id = 0;
  double input_bits = 0.0;
  double cycles = 0.0;
  double result_bits = 0.0;
  double deadline_s = 0.0;

  void validate() const {
    if (input_bits <= 0 || cycles <= 0 || result_bits <= 0 || deadline_s <= 0)
      throw ParamError("MecTask: sizes, cycles and deadline must be > 0");
  }
};

// Default catalog: even ids are compute-heavy with small payloads (offload
// friendly), odd ids are light compute with bulky inputs (local friendly);
// deadlines cycle through four tiers.
inline std::vector<MecTask> make_task_catalog(int n_types) {
  if (n_types < 1) throw ParamError("make_task_catalog: need at least one type");
  static constexpr double deadlines[4] = {0.5, 1.0, 2.0, 5.0};
  std::vector<MecTask> out;
  out.reserve(n_types);
  for (int t = 0; t < n_types; ++t) {
    MecTask task;
    task.type_id = t;
    if (t % 2 == 0) {
      task.cycles = 1e9 + 2e8 * t;
      task.input_bits = 2e5;
    } else {
      task.cycles = 1e8;
      task.input_bits = 6e6 + 2e5 * t;
    }
    task.result_bits = 1e5;
    task.deadline_s = deadlines[t % 4];
    out.push_back(task);
  }
  return out;
}

struct MecSites {
  double fog_cpu_hz = 5e9;
  double cloud_cpu_hz = 5e10;
  double fronthaul_rate_bps = 2e6;  // AP <-> cloud, both directions

  void validate() const {
    if (fog_cpu_hz <= 0 || cloud_cpu_hz <= 0 || fronthaul_rate_bps <= 0)
      throw ParamError("MecSites: rates and frequencies must be > 0");
    if (cloud_cpu_hz < fog_cpu_hz)
      throw ParamError("MecSites: cloud cpu must be at least the fog cpu");
  }
};

enum class MecSite { local, fog, cloud };

struct MecDecision {
  MecSite site = MecSite::local;
  bool cache_result = false;  // meaningful only for fog/cloud
};

// Actions of the MEC MDP in a fixed order.
inline constexpr int kMecActionCount = 5;

inline MecDecision decode_mec_action(int action) {
  switch (action) {
    case 0: return {MecSite::local, false};
    case 1: return {MecSite::fog, false};
    case 2: return {MecSite::fog, true};
    case 3: return {MecSite::cloud, false};
    case 4: return {MecSite::cloud, true};
    default: throw EnvError("MecEnv: action id out of range");
  }
}

// Exact-LRU presence cache over task type ids.
class ResultCache {
 public:
  ResultCache() = default;
  explicit ResultCache(int capacity) : capacity_(capacity) {
    if (capacity < 1) throw ParamError("ResultCache: capacity must be >= 1");
  }

  int capacity() const { return capacity_; }
  int size() const { return static_cast<int>(order_.size()); }

  bool contains(int type_id) const {
    return std::find(order_.begin(), order_.end(), type_id) != order_.end();
  }

  // Marks the entry most-recently used; no-op when absent.
  void touch(int type_id) {
    auto it = std::find(order_.begin(), order_.end(), type_id);
    if (it == order_.end()) return;
    order_.erase(it);
    order_.push_back(type_id);
  }

  // Inserts (or refreshes) an entry, evicting the least-recently used one
  // when full.
  void insert(int type_id) {
    auto it = std::find(order_.begin(), order_.end(), type_id);
    if (it != order_.end()) {
      order_.erase(it);
    } else if (static_cast<int>(order_.size()) >= capacity_) {
      order_.erase(order_.begin());
    }
    order_.push_back(type_id);
  }

  // Least-recently used first.
  const std::vector<int>& recency_order() const { return order_; }

  void clear() { order_.clear(); }

 private:
  int capacity_ = 1;
  std::vector<int> order_;
};

struct PhaseBreakdown {
  double upload_s = 0.0;
  double compute_s = 0.0;
  double fronthaul_s = 0.0;
  double download_s = 0.0;

  double total() const { return upload_s + compute_s + fronthaul_s + download_s; }
};

struct MecCost {
  double latency_s = 0.0;
  double energy_j = 0.0;  // UE-side energy
  PhaseBreakdown phases;
};

struct MecCostParams {
  double ue_tx_power_w = 0.1;
  double w_time = 0.5;
  double w_energy = 0.5;
  double energy_ref_j = 1.0;
  double deadline_penalty = 1.0;
};

// Latency/energy of one task under one decision. `result_cached` says whether
// the serving AP already holds this type's result: offloaded work then skips
// straight to the download phase and costs the UE no energy.
inline MecCost offload_cost(const MecTask& task, const MecDecision& decision, const FogUser& ue,
                            bool result_cached, double uplink_rate_bps, double downlink_rate_bps,
                            const MecSites& sites, double ue_tx_power_w = 0.1) {
  task.validate();
  sites.validate();
  if (uplink_rate_bps <= 0 || downlink_rate_bps <= 0)
    throw ParamError("offload_cost: link rates must be > 0");

  MecCost cost;
  if (decision.site == MecSite::local) {
    cost.phases.compute_s = task.cycles / ue.local_cpu_freq_hz;
    cost.energy_j = ue.local_energy_coeff * ue.local_cpu_freq_hz * ue.local_cpu_freq_hz * task.cycles;
  } else if (result_cached) {
    cost.phases.download_s = task.result_bits / downlink_rate_bps;
  } else {
    cost.phases.upload_s = task.input_bits / uplink_rate_bps;
    cost.phases.download_s = task.result_bits / downlink_rate_bps;
    cost.energy_j = ue_tx_power_w * cost.phases.upload_s;
    if (decision.site == MecSite::fog) {
      cost.phases.compute_s = task.cycles / sites.fog_cpu_hz;
    } else {
      cost.phases.compute_s = task.cycles / sites.cloud_cpu_hz;
      cost.phases.fronthaul_s =
          task.input_bits / sites.fronthaul_rate_bps + task.result_bits / sites.fronthaul_rate_bps;
    }
  }
  cost.latency_s = cost.phases.total();
  return cost;
}

inline double mec_reward(const MecCost& cost, const MecTask& task, const MecCostParams& p) {
  double r = -(p.w_time * cost.latency_s / task.deadline_s +
               p.w_energy * cost.energy_j / p.energy_ref_j);
  if (cost.latency_s > task.deadline_s) r -= p.deadline_penalty;
  return r;
}

// --- the MDP ----------------------------------------------------------------

struct MecEnvConfig {
  int steps_per_episode = 100;
  int result_cache_capacity = 3;
};

// State = (arriving task type, whether its result is cached at the serving
// AP). Arrivals draw a uniform user and a type from the task-popularity
// column of the episode; the serving AP is the user's best-gain AP.
class MecEnv : public DiscreteEnv {
 public:
  MecEnv(Scenario scenario, std::vector<MecTask> catalog, PopularitySeries task_popularity,
         MecSites sites = {}, MecCostParams cost_params = {}, MecEnvConfig cfg = {})
      : scenario_(std::move(scenario)), catalog_(std::move(catalog)),
        popularity_(std::move(task_popularity)), sites_(sites), params_(cost_params), cfg_(cfg) {
    if (scenario_.aps.empty()) throw EnvError("MecEnv: scenario has no access points");
    if (scenario_.ues.empty()) throw EnvError("MecEnv: scenario has no users");
    if (catalog_.empty()) throw EnvError("MecEnv: empty task catalog");
    if (popularity_.contents != static_cast<int>(catalog_.size()))
      throw ShapeError("MecEnv: popularity width must match the task catalog");
    if (cfg.steps_per_episode < 1) throw ParamError("MecEnv: steps_per_episode must be >= 1");
    sites_.validate();
    for (const auto& t : catalog_) t.validate();
    caches_.assign(scenario_.aps.size(), ResultCache(cfg_.result_cache_capacity));

    const int n_ue = static_cast<int>(scenario_.ues.size());
    serving_ap_.resize(n_ue);
    uplink_bps_.resize(n_ue);
    downlink_bps_.resize(n_ue);
    for (int u = 0; u < n_ue; ++u) {
      int best = 0;
      double best_gain = channel_gain(scenario_.aps[0], scenario_.ues[u], scenario_.channel);
      for (int ap = 1; ap < static_cast<int>(scenario_.aps.size()); ++ap) {
        const double g = channel_gain(scenario_.aps[ap], scenario_.ues[u], scenario_.channel);
        if (g > best_gain) {
          best_gain = g;
          best = ap;
        }
      }
      serving_ap_[u] = best;
      // Single-user NOMA clusters in both directions; uplink swaps the roles
      // so the UE is the transmitter.
      NomaCluster c;
      c.strong_user = 0;
      c.strong_gain = best_gain;
      uplink_bps_[u] = noma_rates(c, params_.ue_tx_power_w, scenario_.channel).strong_rate_bps;
      downlink_bps_[u] =
          noma_rates(c, scenario_.aps[best].transmit_power_w, scenario_.channel).strong_rate_bps;
    }
  }

  int action_count() const override { return kMecActionCount; }
  int feature_dim() const override { return static_cast<int>(catalog_.size()) + 1; }

  std::uint64_t reset(Rng& rng) override {
    ++episode_;
    step_ = 0;
    caches_.assign(scenario_.aps.size(), ResultCache(cfg_.result_cache_capacity));
    sample_arrival(rng);
    return state_id();
  }

  StepResult step(int action, Rng& rng) override {
    const MecDecision decision = decode_mec_action(action);
    const MecTask& task = catalog_[arrival_type_];
    ResultCache& cache = caches_[serving_ap_[arrival_ue_]];
    const bool cached = cache.contains(arrival_type_);

    last_cost_ = offload_cost(task, decision, scenario_.ues[arrival_ue_], cached,
                              uplink_bps_[arrival_ue_], downlink_bps_[arrival_ue_], sites_,
                              params_.ue_tx_power_w);
    last_violation_ = last_cost_.latency_s > task.deadline_s;
    const double reward = mec_reward(last_cost_, task, params_);

    if (decision.site != MecSite::local) {
      if (cached) cache.touch(arrival_type_);
      if (decision.cache_result) cache.insert(arrival_type_);
    }

    sample_arrival(rng);
    StepResult sr;
    sr.next_state = state_id();
    sr.reward = reward;
    sr.terminal = false;
    sr.done = ++step_ >= cfg_.steps_per_episode;
    return sr;
  }

  void current_features(Vec& out) const override {
    out.assign(catalog_.size() + 1, 0.0);
    out[static_cast<std::size_t>(arrival_type_)] = 1.0;
    out.back() = arrival_cached() ? 1.0 : 0.0;
  }

  std::uint64_t state_id() const {
    return static_cast<std::uint64_t>(arrival_type_) * 2 + (arrival_cached() ? 1 : 0);
  }

  // Cost of answering the pending arrival with `action`, without mutating
  // anything — the myopic baseline shops across all actions with this.
  MecCost preview_cost(int action) const {
    const MecDecision decision = decode_mec_action(action);
    return offload_cost(catalog_[arrival_type_], decision, scenario_.ues[arrival_ue_],
                        arrival_cached(), uplink_bps_[arrival_ue_], downlink_bps_[arrival_ue_],
                        sites_, params_.ue_tx_power_w);
  }

  double preview_reward(int action) const {
    return mec_reward(preview_cost(action), catalog_[arrival_type_], params_);
  }

  bool arrival_cached() const {
    return caches_[serving_ap_[arrival_ue_]].contains(arrival_type_);
  }

  int arrival_type() const { return arrival_type_; }
  int arrival_ue() const { return arrival_ue_; }
  const MecCost& last_cost() const { return last_cost_; }
  bool last_violation() const { return last_violation_; }
  const MecTask& task(int type_id) const { return catalog_.at(type_id); }
  const std::vector<MecTask>& catalog() const { return catalog_; }
  const ResultCache& cache_at(int ap) const { return caches_.at(ap); }
  double uplink_bps(int ue) const { return uplink_bps_.at(ue); }
  double downlink_bps(int ue) const { return downlink_bps_.at(ue); }

 private:
  void sample_arrival(Rng& rng) {
    const Vec probs = normalize_column(popularity_.column(episode_ % popularity_.slots));
    arrival_ue_ = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(scenario_.ues.size())));
    const double u = rng.next_double();
    double acc = 0.0;
    arrival_type_ = static_cast<int>(probs.size()) - 1;
    for (int i = 0; i < static_cast<int>(probs.size()); ++i) {
      acc += probs[i];
      if (u < acc) {
        arrival_type_ = i;
        break;
      }
    }
  }

  Scenario scenario_;
  std::vector<MecTask> catalog_;
  PopularitySeries popularity_;
  MecSites sites_;
  MecCostParams params_;
  MecEnvConfig cfg_;

  std::vector<int> serving_ap_;
  Vec uplink_bps_, downlink_bps_;
  std::vector<ResultCache> caches_;
  int arrival_ue_ = 0;
  int arrival_type_ = 0;
  MecCost last_cost_;
  bool last_violation_ = false;
  int episode_ = -1;
  int step_ = 0;
};

// --- experiment driver --------------------------------------------------------

enum class MecPolicy { always_local, always_fog, greedy_min_cost, q_learning };

inline std::string mec_policy_name(MecPolicy p) {
  switch (p) {
    case MecPolicy::always_local: return "always_local";
    case MecPolicy::always_fog: return "always_fog";
    case MecPolicy::greedy_min_cost: return "greedy_min_cost";
    case MecPolicy::q_learning: return "q_learning";
  }
  return "?";
}

struct MecSchemeResult {
  std::string policy;
  double mean_latency_s = 0.0;
  double mean_energy_j = 0.0;
  double violation_rate = 0.0;
  double mean_reward = 0.0;
};

inline int mec_policy_action(MecPolicy policy, const MecEnv& env, const QTable* q) {
  switch (policy) {
    case MecPolicy::always_local:
      return 0;
    case MecPolicy::always_fog:
      return 1;
    case MecPolicy::greedy_min_cost: {
      int best = 0;
      double best_reward = env.preview_reward(0);
      for (int a = 1; a < kMecActionCount; ++a) {
        const double r = env.preview_reward(a);
        if (r > best_reward) {
          best_reward = r;
          best = a;
        }
      }
      return best;
    }
    case MecPolicy::q_learning:
      return q->argmax_tiebreak_low(env.state_id());
  }
  return 0;
}

// Deterministic rollout of one policy. The arrival draws depend only on the
// seeds, never on the actions, so every policy faces the same traces.
inline MecSchemeResult evaluate_mec_policy(MecEnv env, MecPolicy policy, const QTable* q,
                                           int episodes, std::uint64_t seed) {
  if (episodes < 1) throw ParamError("evaluate_mec_policy: episodes must be >= 1");
  if (policy == MecPolicy::q_learning && q == nullptr)
    throw ParamError("evaluate_mec_policy: q_learning needs a trained table");
  MecSchemeResult res;
  res.policy = mec_policy_name(policy);
  long steps = 0;
  for (int e = 0; e < episodes; ++e) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(e)));
    env.reset(rng);
    bool done = false;
    while (!done) {
      const int action = mec_policy_action(policy, env, q);
      const StepResult sr = env.step(action, rng);
      res.mean_latency_s += env.last_cost().latency_s;
      res.mean_energy_j += env.last_cost().energy_j;
      res.violation_rate += env.last_violation() ? 1.0 : 0.0;
      res.mean_reward += sr.reward;
      ++steps;
      done = sr.done;
    }
  }
  res.mean_latency_s /= static_cast<double>(steps);
  res.mean_energy_j /= static_cast<double>(steps);
  res.violation_rate /= static_cast<double>(steps);
  res.mean_reward /= static_cast<double>(steps);
  return res;
}

// Trains the tabular agent, then scores every policy on identical traces.
inline std::vector<MecSchemeResult> run_mec_experiment(const MecEnv& prototype,
                                                       const AgentConfig& agent_cfg,
                                                       int eval_episodes, std::uint64_t seed) {
  MecEnv train_env = prototype;
  AgentConfig cfg = agent_cfg;
  cfg.kind = AgentKind::q_learning;
  const TabularResult trained = train_tabular(train_env, cfg);

  const std::uint64_t eval_seed = derive_seed(seed, 0xE7A1u);
  std::vector<MecSchemeResult> out;
  for (MecPolicy policy : {MecPolicy::always_local, MecPolicy::always_fog,
                           MecPolicy::greedy_min_cost, MecPolicy::q_learning}) {
    out.push_back(evaluate_mec_policy(prototype, policy, &trained.q, eval_episodes, eval_seed));
  }
  return out;
}

}  // namespace fogsim
