#pragma once

// Cooperative caching MDP: the joint cache placement across the access points
// is the state, one action replaces a single cache slot, and the reward is
// the mean opinion score of delivering one batch of requests over NOMA.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <unordered_set>
#include <utility>
#include <vector>

#include "fogsim/errors.hpp"
#include "fogsim/noma.hpp"
#include "fogsim/popularity.hpp"
#include "fogsim/rl.hpp"
#include "fogsim/rng.hpp"
#include "fogsim/scenario.hpp"

namespace fogsim {

// Slot-level cache assignment; content -1 marks an empty slot. The boolean
// AP-by-content view and the per-AP capacity bound follow by construction.
struct CachePlacement {
  int ap_count = 0;
  int capacity = 0;
  int catalog = 0;
  std::vector<int> slots;  // ap * capacity + slot

  static CachePlacement empty_placement(int aps, int capacity, int catalog) {
    if (aps < 1 || capacity < 1 || catalog < 1)
      throw ParamError("CachePlacement: aps, capacity, catalog must be >= 1");
    CachePlacement p;
    p.ap_count = aps;
    p.capacity = capacity;
    p.catalog = catalog;
    p.slots.assign(static_cast<std::size_t>(aps) * capacity, -1);
    return p;
  }

  // Capacity-saturating uniform placement: every AP caches `capacity`
  // distinct contents.
  static CachePlacement random_placement(int aps, int capacity, int catalog, Rng& rng) {
    CachePlacement p = empty_placement(aps, capacity, catalog);
    if (capacity > catalog)
      throw ParamError("CachePlacement: capacity exceeds catalog, distinct fill impossible");
    std::vector<int> ids(catalog);
    for (int ap = 0; ap < aps; ++ap) {
      std::iota(ids.begin(), ids.end(), 0);
      for (int k = 0; k < capacity; ++k) {
        const int pick = k + static_cast<int>(rng.next_below(
                                 static_cast<std::uint64_t>(catalog - k)));
        std::swap(ids[k], ids[pick]);
        p.set(ap, k, ids[k]);
      }
    }
    return p;
  }

  int at(int ap, int slot) const { return slots[static_cast<std::size_t>(ap) * capacity + slot]; }

  void set(int ap, int slot, int content) {
    if (ap < 0 || ap >= ap_count || slot < 0 || slot >= capacity || content < -1 ||
        content >= catalog)
      throw EnvError("CachePlacement: slot edit out of range");
    slots[static_cast<std::size_t>(ap) * capacity + slot] = content;
  }

  bool contains(int ap, int content) const {
    for (int k = 0; k < capacity; ++k)
      if (at(ap, k) == content) return true;
    return false;
  }

  std::vector<std::vector<char>> matrix() const {
    std::vector<std::vector<char>> m(ap_count, std::vector<char>(catalog, 0));
    for (int ap = 0; ap < ap_count; ++ap)
      for (int k = 0; k < capacity; ++k)
        if (at(ap, k) >= 0) m[ap][at(ap, k)] = 1;
    return m;
  }

  // Network-wide count of distinct cached contents (the diversity metric).
  int distinct_cached() const {
    std::vector<char> seen(catalog, 0);
    int n = 0;
    for (int v : slots)
      if (v >= 0 && !seen[v]) {
        seen[v] = 1;
        ++n;
      }
    return n;
  }

  // Exact bit-packing of slot contents when they fit in 64 bits, otherwise a
  // deterministic splitmix fold (collisions possible but vanishingly rare).
  std::uint64_t encode() const {
    int bits = 1;
    while ((1u << bits) < static_cast<unsigned>(catalog + 1)) ++bits;
    if (static_cast<std::size_t>(bits) * slots.size() <= 64) {
      std::uint64_t code = 0;
      for (int v : slots) code = (code << bits) | static_cast<std::uint64_t>(v + 1);
      return code;
    }
    std::uint64_t h = 0x9E3779B97F4A7C15ull;
    for (int v : slots) h = mix64(h ^ static_cast<std::uint64_t>(v + 2));
    return h;
  }

  bool operator==(const CachePlacement& o) const {
    return ap_count == o.ap_count && capacity == o.capacity && catalog == o.catalog &&
           slots == o.slots;
  }
};

struct CachingAction {
  int ap = 0;
  int slot = 0;
  int content = 0;
};

inline int caching_action_count(int aps, int capacity, int catalog) {
  return aps * capacity * catalog;
}

inline int encode_action(const CachingAction& a, int capacity, int catalog) {
  return (a.ap * capacity + a.slot) * catalog + a.content;
}

inline CachingAction decode_action(int id, int capacity, int catalog) {
  CachingAction a;
  a.content = id % catalog;
  const int rest = id / catalog;
  a.slot = rest % capacity;
  a.ap = rest / capacity;
  return a;
}

// --- request service --------------------------------------------------------

struct BatchOutcome {
  double mean_mos = 0.0;
  double hit_ratio = 0.0;
};

struct CachingWorldConfig {
  int request_batch = 50;
  double power_split_weak = kDefaultPowerSplitWeak;
  double mos_best_delay_s = 0.01;
  double mos_worst_delay_s = 10.0;
};

// Immutable world shared by the training environment and the evaluators:
// scenario geometry, deterministic channel gains, and the popularity series
// that drives request sampling.
class CachingWorld {
 public:
  CachingWorld(Scenario scenario, PopularitySeries popularity, CachingWorldConfig cfg = {})
      : scenario_(std::move(scenario)), popularity_(std::move(popularity)), cfg_(cfg) {
    if (scenario_.aps.empty()) throw EnvError("CachingWorld: scenario has no access points");
    if (scenario_.ues.empty()) throw EnvError("CachingWorld: scenario has no users");
    if (popularity_.contents != static_cast<int>(scenario_.catalog.size()))
      throw ShapeError("CachingWorld: popularity width must match the catalog");
    if (cfg.request_batch < 1) throw ParamError("CachingWorld: request_batch must be >= 1");
    gains_.assign(scenario_.aps.size(), Vec(scenario_.ues.size(), 0.0));
    for (std::size_t i = 0; i < scenario_.aps.size(); ++i)
      for (std::size_t u = 0; u < scenario_.ues.size(); ++u)
        gains_[i][u] = channel_gain(scenario_.aps[i], scenario_.ues[u], scenario_.channel);
  }

  const Scenario& scenario() const { return scenario_; }
  const PopularitySeries& popularity() const { return popularity_; }
  const CachingWorldConfig& config() const { return cfg_; }
  double gain(int ap, int ue) const { return gains_[ap][ue]; }

  // Serves one batch of requests against a fixed placement. Requests draw a
  // uniform user and a content from the normalized popularity column; each
  // cache hit is served by the caching AP with the best gain to the user, a
  // total miss by the nearest AP with the fronthaul delay added. Users at one
  // AP are NOMA-clustered and share its transmit power per cluster.
  BatchOutcome serve_batch(const CachePlacement& placement, double transmit_power_w, int column,
                           Rng& rng) const {
    if (transmit_power_w <= 0) throw ParamError("serve_batch: transmit power must be > 0");
    const Vec probs = normalize_column(popularity_.column(column));
    const int n_ap = static_cast<int>(scenario_.aps.size());
    const int n_ue = static_cast<int>(scenario_.ues.size());

    struct Request {
      int ue = 0, content = 0, ap = 0;
      bool hit = false;
      double rate = 0.0;
    };
    std::vector<Request> reqs(cfg_.request_batch);
    for (auto& r : reqs) {
      r.ue = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n_ue)));
      r.content = sample_index(probs, rng);
      int best_ap = -1;
      for (int ap = 0; ap < n_ap; ++ap)
        if (placement.contains(ap, r.content) &&
            (best_ap < 0 || gains_[ap][r.ue] > gains_[best_ap][r.ue]))
          best_ap = ap;
      if (best_ap >= 0) {
        r.hit = true;
        r.ap = best_ap;
      } else {
        r.hit = false;
        r.ap = nearest_ap(r.ue);
      }
    }

    // NOMA clustering per serving AP, full per-cluster power reuse.
    std::vector<std::vector<std::pair<int, double>>> per_ap(n_ap);
    for (int i = 0; i < static_cast<int>(reqs.size()); ++i)
      per_ap[reqs[i].ap].push_back({i, gains_[reqs[i].ap][reqs[i].ue]});
    for (int ap = 0; ap < n_ap; ++ap) {
      if (per_ap[ap].empty()) continue;
      const auto clusters = cluster_users(per_ap[ap], cfg_.power_split_weak);
      for (const auto& c : clusters) {
        const RateReport rr = noma_rates(c, transmit_power_w, scenario_.channel);
        reqs[c.strong_user].rate = rr.strong_rate_bps;
        if (c.weak_user >= 0) reqs[c.weak_user].rate = rr.weak_rate_bps;
      }
    }

    BatchOutcome out;
    int hits = 0;
    for (const auto& r : reqs) {
      const double fronthaul = r.hit ? 0.0 : scenario_.aps[r.ap].fronthaul_delay_s;
      const double delay =
          delivery_delay(scenario_.catalog[r.content].size_bits, r.rate, fronthaul);
      out.mean_mos += mos_score(delay, cfg_.mos_best_delay_s, cfg_.mos_worst_delay_s);
      hits += r.hit ? 1 : 0;
    }
    out.mean_mos /= static_cast<double>(reqs.size());
    out.hit_ratio = static_cast<double>(hits) / static_cast<double>(reqs.size());
    return out;
  }

  int nearest_ap(int ue) const {
    int best = 0;
    double best_d = distance(scenario_.aps[0].position, scenario_.ues[ue].position);
    for (int ap = 1; ap < static_cast<int>(scenario_.aps.size()); ++ap) {
      const double d = distance(scenario_.aps[ap].position, scenario_.ues[ue].position);
      if (d < best_d) {
        best_d = d;
        best = ap;
      }
    }
    return best;
  }

  static int sample_index(const Vec& probs, Rng& rng) {
    const double u = rng.next_double();
    double acc = 0.0;
    for (int i = 0; i < static_cast<int>(probs.size()); ++i) {
      acc += probs[i];
      if (u < acc) return i;
    }
    return static_cast<int>(probs.size()) - 1;
  }

 private:
  Scenario scenario_;
  PopularitySeries popularity_;
  CachingWorldConfig cfg_;
  std::vector<Vec> gains_;  // [ap][ue]
};

// --- the MDP ----------------------------------------------------------------

struct CachingEnvConfig {
  int steps_per_episode = 100;
  bool random_initial_placement = false;
  double transmit_power_w = 0.0;  // 0 = use the scenario's AP power
};

class CachingEnv : public DiscreteEnv {
 public:
  CachingEnv(const CachingWorld& world, CachingEnvConfig cfg = {})
      : world_(world), cfg_(cfg),
        placement_(CachePlacement::empty_placement(
            static_cast<int>(world.scenario().aps.size()), world.scenario().aps[0].cache_capacity,
            static_cast<int>(world.scenario().catalog.size()))) {
    if (cfg.steps_per_episode < 1) throw ParamError("CachingEnv: steps_per_episode must be >= 1");
    power_w_ = cfg.transmit_power_w > 0 ? cfg.transmit_power_w
                                        : world.scenario().aps[0].transmit_power_w;
  }

  int action_count() const override {
    return caching_action_count(placement_.ap_count, placement_.capacity, placement_.catalog);
  }

  int feature_dim() const override { return static_cast<int>(placement_.slots.size()); }

  std::uint64_t reset(Rng& rng) override {
    ++episode_;
    step_ = 0;
    placement_ = cfg_.random_initial_placement
                     ? CachePlacement::random_placement(placement_.ap_count, placement_.capacity,
                                                        placement_.catalog, rng)
                     : CachePlacement::empty_placement(placement_.ap_count, placement_.capacity,
                                                       placement_.catalog);
    return placement_.encode();
  }

  StepResult step(int action, Rng& rng) override {
    if (action < 0 || action >= action_count())
      throw EnvError("CachingEnv: action id out of range");
    const CachingAction a = decode_action(action, placement_.capacity, placement_.catalog);
    placement_.set(a.ap, a.slot, a.content);
    last_outcome_ = world_.serve_batch(placement_, power_w_, current_column(), rng);
    StepResult sr;
    sr.next_state = placement_.encode();
    sr.reward = last_outcome_.mean_mos;
    sr.terminal = false;
    sr.done = ++step_ >= cfg_.steps_per_episode;
    return sr;
  }

  void current_features(Vec& out) const override {
    out.resize(placement_.slots.size());
    for (std::size_t i = 0; i < placement_.slots.size(); ++i)
      out[i] = static_cast<double>(placement_.slots[i] + 1) / static_cast<double>(placement_.catalog);
  }

  int current_column() const {
    const int slots = world_.popularity().slots;
    return episode_ < 0 ? 0 : episode_ % slots;
  }

  const CachePlacement& placement() const { return placement_; }
  const BatchOutcome& last_outcome() const { return last_outcome_; }
  double transmit_power_w() const { return power_w_; }

 private:
  const CachingWorld& world_;
  CachingEnvConfig cfg_;
  CachePlacement placement_;
  BatchOutcome last_outcome_;
  double power_w_ = 0.0;
  int episode_ = -1;
  int step_ = 0;
};

// --- baselines and evaluation ------------------------------------------------

inline CachePlacement baseline_random(const Scenario& s, std::uint64_t seed) {
  Rng rng(seed);
  return CachePlacement::random_placement(static_cast<int>(s.aps.size()),
                                          s.aps.at(0).cache_capacity,
                                          static_cast<int>(s.catalog.size()), rng);
}

// Every AP caches the globally most popular contents; popularity ties go to
// the lower content id.
inline CachePlacement baseline_noncooperative(const Scenario& s,
                                              const std::vector<double>& popularity_column) {
  const int catalog = static_cast<int>(s.catalog.size());
  if (static_cast<int>(popularity_column.size()) != catalog)
    throw ShapeError("baseline_noncooperative: popularity width must match the catalog");
  const int capacity = s.aps.at(0).cache_capacity;
  std::vector<int> order(catalog);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (popularity_column[a] != popularity_column[b])
      return popularity_column[a] > popularity_column[b];
    return a < b;
  });
  CachePlacement p = CachePlacement::empty_placement(static_cast<int>(s.aps.size()), capacity,
                                                     catalog);
  for (int ap = 0; ap < p.ap_count; ++ap)
    for (int k = 0; k < std::min(capacity, catalog); ++k) p.set(ap, k, order[k]);
  return p;
}

struct MosEvaluation {
  double mean_mos = 0.0;
  double std_mos = 0.0;
  double hit_ratio = 0.0;
};

// Mean/std MOS over independently seeded request batches at a fixed transmit
// power. Batches spread across the popularity series so the score reflects
// the whole horizon, and the batch seeds depend only on (seed, batch index),
// so different placements face identical request sequences.
inline MosEvaluation evaluate_placement(const CachingWorld& world, const CachePlacement& placement,
                                        double transmit_power_w, int eval_batches,
                                        std::uint64_t seed) {
  if (eval_batches < 1) throw ParamError("evaluate_placement: eval_batches must be >= 1");
  const int slots = world.popularity().slots;
  const int stride = std::max(1, slots / eval_batches);
  Vec batch_mos(eval_batches, 0.0);
  double hit_acc = 0.0;
  for (int b = 0; b < eval_batches; ++b) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(b)));
    const BatchOutcome out =
        world.serve_batch(placement, transmit_power_w, (b * stride) % slots, rng);
    batch_mos[b] = out.mean_mos;
    hit_acc += out.hit_ratio;
  }
  MosEvaluation ev;
  for (double m : batch_mos) ev.mean_mos += m;
  ev.mean_mos /= eval_batches;
  for (double m : batch_mos) ev.std_mos += (m - ev.mean_mos) * (m - ev.mean_mos);
  ev.std_mos = eval_batches > 1 ? std::sqrt(ev.std_mos / eval_batches) : 0.0;
  ev.hit_ratio = hit_acc / eval_batches;
  return ev;
}

// Follows the greedy policy of a trained Q table through placement space
// until it revisits a placement or exhausts the edit budget; the placement it
// settles on is what gets evaluated.
inline CachePlacement greedy_rollout(const QTable& q, CachePlacement placement,
                                     int max_edits = 64) {
  std::unordered_set<std::uint64_t> visited;
  visited.insert(placement.encode());
  for (int i = 0; i < max_edits; ++i) {
    const int action = q.argmax_tiebreak_low(placement.encode());
    const CachingAction a = decode_action(action, placement.capacity, placement.catalog);
    placement.set(a.ap, a.slot, a.content);
    if (!visited.insert(placement.encode()).second) break;
  }
  return placement;
}

}  // namespace fogsim
