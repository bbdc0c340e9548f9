#pragma once

// Experiment orchestration: runs the forecasting, cooperative caching, and
// MEC experiment families across seeds (and the transmit-power sweep for
// caching), writes versioned CSVs plus a summary JSON, and keeps every output
// byte-identical across reruns with the same config and seeds.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "fogsim/caching_env.hpp"
#include "fogsim/config.hpp"
#include "fogsim/errors.hpp"
#include "fogsim/mec_env.hpp"
#include "fogsim/neural.hpp"
#include "fogsim/popularity.hpp"
#include "fogsim/rl.hpp"
#include "fogsim/rng.hpp"
#include "fogsim/scenario.hpp"

namespace fogsim {

// Fixed sub-stream tags so every component of a run draws from an
// independent, reproducible seed.
namespace seed_tag {
inline constexpr std::uint64_t scenario = 21;
inline constexpr std::uint64_t popularity = 22;
inline constexpr std::uint64_t laql_train = 23;
inline constexpr std::uint64_t ql_train = 24;
inline constexpr std::uint64_t random_baseline = 25;
inline constexpr std::uint64_t evaluation = 26;
inline constexpr std::uint64_t forecast_data = 27;
inline constexpr std::uint64_t forecast_shuffle = 28;
inline constexpr std::uint64_t forecast_weights = 29;
inline constexpr std::uint64_t mec_train = 30;
inline constexpr std::uint64_t mec_eval = 31;
}  // namespace seed_tag

// Runs fn(0..n-1) across up to `workers` threads; the first exception thrown
// by any worker is rethrown after all of them join. Callers store results by
// index, so the output order never depends on the scheduling.
template <class Fn>
void parallel_for_indexed(int n, int workers, Fn fn) {
  if (n <= 0) return;
  const int nthreads = std::min(std::max(workers, 1), n);
  if (nthreads == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex error_mu;
  std::vector<std::thread> pool;
  pool.reserve(nthreads);
  for (int t = 0; t < nthreads; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mu);
          if (!first_error) first_error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

// --- forecasting experiment ---------------------------------------------------

struct ForecastRow {
  std::string cell;
  std::uint64_t seed = 0;
  int epochs_used = 0;
  double final_train_mse = 0.0;
  double test_mse = 0.0;
  bool goal_reached = false;
  std::vector<double> loss_history;
};

struct ForecastOutcome {
  std::vector<ForecastRow> rows;  // ordered (seed, cell)
};

inline ForecastOutcome run_forecast_experiment(const ExperimentConfig& c) {
  const int n_seeds = static_cast<int>(c.seeds.size());
  ForecastOutcome out;
  out.rows.resize(static_cast<std::size_t>(n_seeds) * 2);

  TrainConfig tc;
  tc.goal_mse = c.forecast.goal_mse;
  tc.max_epochs = c.forecast.max_epochs;
  tc.learning_rate = c.forecast.learning_rate;
  tc.optimizer = c.forecast.optimizer == "sgd" ? OptimizerKind::sgd : OptimizerKind::adam;

  parallel_for_indexed(n_seeds, c.workers, [&](int i) {
    const std::uint64_t seed = c.seeds[i];
    const PopularitySeries series =
        random_walk_series(c.popularity.slots, c.scenario.content_count, c.popularity.step_bound,
                           c.popularity.x0, derive_seed(seed, seed_tag::forecast_data));
    const WindowedDataset dataset =
        window_dataset(series, c.forecast.content, c.popularity.window,
                       derive_seed(seed, seed_tag::forecast_shuffle));

    const std::uint64_t wseed = derive_seed(seed, seed_tag::forecast_weights);
    LstmForecaster lstm(c.popularity.window, c.forecast.hidden, wseed);
    RnnForecaster rnn(c.popularity.window, c.forecast.hidden, derive_seed(wseed, 1));

    const TrainReport lstm_report = train_to_goal(lstm, dataset, tc);
    const TrainReport rnn_report = train_to_goal(rnn, dataset, tc);

    auto fill = [&](ForecastRow& row, const char* cell, const TrainReport& rep) {
      row.cell = cell;
      row.seed = seed;
      row.epochs_used = rep.epochs_used;
      row.final_train_mse = rep.final_train_mse;
      row.test_mse = rep.test_mse;
      row.goal_reached = rep.final_train_mse <= tc.goal_mse;
      row.loss_history = rep.loss_history;
    };
    fill(out.rows[static_cast<std::size_t>(i) * 2], "lstm", lstm_report);
    fill(out.rows[static_cast<std::size_t>(i) * 2 + 1], "rnn", rnn_report);
  });
  return out;
}

// --- cooperative caching experiment -------------------------------------------

struct CacheRow {
  std::string scheme;
  double power_dbm = 0.0;
  double mean_mos = 0.0;
  double std_mos = 0.0;
  double hit_ratio = 0.0;
  std::uint64_t seed = 0;
};

struct CacheSeedRun {
  std::vector<CacheRow> rows;  // scheme-major, then power
  std::vector<double> laql_curve, ql_curve;
  int laql_diversity = 0, noncoop_diversity = 0;
};

struct CacheOutcome {
  std::vector<CacheSeedRun> runs;  // by seed index
};

// Popularity for the caching runs: a slow random walk started from a
// Zipf-shaped profile (or a flat one when disabled).
inline PopularitySeries cache_popularity(const ExperimentConfig& c, std::uint64_t seed) {
  const int n = c.scenario.content_count;
  std::vector<double> x0(static_cast<std::size_t>(n), c.popularity.x0);
  if (c.cache.zipf_skewed_init) {
    const std::vector<double> z = zipf_distribution(n, c.popularity.zipf_exponent);
    for (int f = 0; f < n; ++f) x0[static_cast<std::size_t>(f)] = 0.9 * z[f] / z[0];
  }
  return random_walk_series(c.popularity.slots, n, c.cache.pop_step_bound, x0,
                            derive_seed(seed, seed_tag::popularity));
}

inline std::vector<double> mean_popularity_column(const PopularitySeries& s) {
  std::vector<double> m(static_cast<std::size_t>(s.contents), 0.0);
  for (int t = 0; t < s.slots; ++t)
    for (int f = 0; f < s.contents; ++f) m[static_cast<std::size_t>(f)] += s.at(t, f);
  for (double& v : m) v /= static_cast<double>(s.slots);
  return m;
}

inline CacheSeedRun run_cache_seed(const ExperimentConfig& c, std::uint64_t seed) {
  const Scenario scenario =
      generate_scenario(c.scenario_template(), derive_seed(seed, seed_tag::scenario));
  CachingWorldConfig wcfg;
  wcfg.request_batch = c.cache.request_batch;
  const CachingWorld world(scenario, cache_popularity(c, seed), wcfg);

  CachingEnvConfig env_cfg;
  env_cfg.steps_per_episode = c.rl.steps_per_episode;
  env_cfg.transmit_power_w = dbm_to_watts(c.cache.train_power_dbm);

  AgentConfig acfg;
  acfg.alpha = c.rl.alpha;
  acfg.gamma = c.rl.gamma;
  acfg.epsilon_start = c.rl.epsilon_start;
  acfg.epsilon_end = c.rl.epsilon_end;
  acfg.episodes = c.rl.episodes;
  acfg.max_steps_per_episode = c.rl.steps_per_episode;
  acfg.la_lambda = c.rl.la_lambda;

  CacheSeedRun run;

  acfg.kind = AgentKind::laql;
  acfg.seed = derive_seed(seed, seed_tag::laql_train);
  CachingEnv laql_env(world, env_cfg);
  const TabularResult laql = train_tabular(laql_env, acfg);
  run.laql_curve = laql.episode_rewards;

  acfg.kind = AgentKind::q_learning;
  acfg.seed = derive_seed(seed, seed_tag::ql_train);
  CachingEnv ql_env(world, env_cfg);
  const TabularResult ql = train_tabular(ql_env, acfg);
  run.ql_curve = ql.episode_rewards;

  const int aps = static_cast<int>(scenario.aps.size());
  const int capacity = scenario.aps[0].cache_capacity;
  const int catalog = static_cast<int>(scenario.catalog.size());
  const CachePlacement start = CachePlacement::empty_placement(aps, capacity, catalog);

  struct Scheme {
    const char* name;
    CachePlacement placement;
  };
  const std::vector<Scheme> schemes = {
      {"laql", greedy_rollout(laql.q, start)},
      {"q_learning", greedy_rollout(ql.q, start)},
      {"noncoop", baseline_noncooperative(scenario, mean_popularity_column(world.popularity()))},
      {"random", baseline_random(scenario, derive_seed(seed, seed_tag::random_baseline))},
  };
  run.laql_diversity = schemes[0].placement.distinct_cached();
  run.noncoop_diversity = schemes[2].placement.distinct_cached();

  const std::uint64_t eval_seed = derive_seed(seed, seed_tag::evaluation);
  for (const Scheme& s : schemes) {
    for (double dbm : c.cache.sweep_dbm) {
      const MosEvaluation ev = evaluate_placement(world, s.placement, dbm_to_watts(dbm),
                                                  c.cache.eval_batches, eval_seed);
      run.rows.push_back({s.name, dbm, ev.mean_mos, ev.std_mos, ev.hit_ratio, seed});
    }
  }
  return run;
}

inline CacheOutcome run_cache_experiment(const ExperimentConfig& c) {
  CacheOutcome out;
  out.runs.resize(c.seeds.size());
  parallel_for_indexed(static_cast<int>(c.seeds.size()), c.workers,
                       [&](int i) { out.runs[i] = run_cache_seed(c, c.seeds[i]); });
  return out;
}

// --- MEC experiment -------------------------------------------------------------

struct MecSeedRun {
  std::vector<MecSchemeResult> schemes;
  std::uint64_t seed = 0;
};

struct MecOutcome {
  std::vector<MecSeedRun> runs;
};

inline MecEnv make_mec_env(const ExperimentConfig& c, std::uint64_t seed) {
  const Scenario scenario =
      generate_scenario(c.scenario_template(), derive_seed(seed, seed_tag::scenario));

  PopularitySeries task_pop;
  task_pop.slots = 1;
  task_pop.contents = c.mec.task_types;
  task_pop.values = zipf_distribution(c.mec.task_types, c.mec.zipf_exponent);

  MecSites sites;
  sites.fog_cpu_hz = c.mec.fog_cpu_hz;
  sites.cloud_cpu_hz = c.mec.cloud_cpu_hz;
  sites.fronthaul_rate_bps = c.mec.fronthaul_rate_bps;

  MecCostParams params;
  params.ue_tx_power_w = c.mec.ue_tx_power_w;
  params.w_time = c.mec.w_time;
  params.w_energy = c.mec.w_energy;
  params.energy_ref_j = c.mec.energy_ref_j;
  params.deadline_penalty = c.mec.deadline_penalty;

  MecEnvConfig ecfg;
  ecfg.steps_per_episode = c.rl.steps_per_episode;
  ecfg.result_cache_capacity = c.mec.cache_capacity;

  return MecEnv(scenario, make_task_catalog(c.mec.task_types), task_pop, sites, params, ecfg);
}

inline MecOutcome run_mec_experiment_all(const ExperimentConfig& c) {
  MecOutcome out;
  out.runs.resize(c.seeds.size());
  parallel_for_indexed(static_cast<int>(c.seeds.size()), c.workers, [&](int i) {
    const std::uint64_t seed = c.seeds[i];
    const MecEnv env = make_mec_env(c, seed);
    AgentConfig acfg;
    acfg.kind = AgentKind::q_learning;
    acfg.alpha = c.rl.alpha;
    acfg.gamma = c.rl.gamma;
    acfg.epsilon_start = c.rl.epsilon_start;
    acfg.epsilon_end = c.rl.epsilon_end;
    acfg.episodes = c.rl.episodes;
    acfg.max_steps_per_episode = c.rl.steps_per_episode;
    acfg.seed = derive_seed(seed, seed_tag::mec_train);
    out.runs[i].seed = seed;
    out.runs[i].schemes =
        run_mec_experiment(env, acfg, c.mec.eval_episodes, derive_seed(seed, seed_tag::mec_eval));
  });
  return out;
}

// --- emission -------------------------------------------------------------------

inline void write_text_file(const std::filesystem::path& path, const std::string& body) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open for writing: " + path.string());
  f << body;
  if (!f) throw Error("write failed: " + path.string());
}

inline std::string iso_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm_utc{};
  gmtime_r(&t, &tm_utc);
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

// Mean percent gap 100 * (a - b) / b computed per power point, then averaged.
inline double mean_percent_gap(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.empty()) throw ShapeError("mean_percent_gap: length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += 100.0 * (a[i] - b[i]) / b[i];
  return acc / static_cast<double>(a.size());
}

struct PairedGap {
  double mean_diff = 0.0;
  double ci95_low = 0.0;  // one-sided lower bound
  int n = 0;
};

inline PairedGap paired_gap(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) throw ShapeError("paired_gap: need matched samples");
  PairedGap g;
  g.n = static_cast<int>(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) g.mean_diff += a[i] - b[i];
  g.mean_diff /= g.n;
  double var = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i] - g.mean_diff;
    var += d * d;
  }
  var /= (g.n - 1);
  // one-sided 95% t bound; 1.70 covers df >= 29 conservatively
  g.ci95_low = g.mean_diff - 1.70 * std::sqrt(var / g.n);
  return g;
}

struct RunResult {
  int exit_code = 0;
  std::vector<std::string> summary_lines;
  std::vector<std::string> files_written;
};

inline RunResult run_experiment(const ExperimentConfig& cfg) {
  namespace fs = std::filesystem;
  validate_config(cfg);
  RunResult result;
  const fs::path out_dir(cfg.output_dir);
  fs::create_directories(out_dir);

  auto emit = [&](const char* name, const std::string& body) {
    write_text_file(out_dir / name, body);
    result.files_written.push_back((out_dir / name).string());
  };

  try {
    if (cfg.experiment == "forecast") {
      const ForecastOutcome fo = run_forecast_experiment(cfg);

      std::string csv = "# schema: forecast-results v1\n";
      csv += "cell,seed,epochs_used,final_train_mse,test_mse,goal_reached\n";
      std::string loss_csv = "# schema: forecast-loss v1\ncell,seed,epoch,train_mse\n";
      for (const auto& r : fo.rows) {
        csv += r.cell + "," + std::to_string(r.seed) + "," + std::to_string(r.epochs_used) + "," +
               fmt_double(r.final_train_mse) + "," + fmt_double(r.test_mse) + "," +
               (r.goal_reached ? "1" : "0") + "\n";
        for (std::size_t e = 0; e < r.loss_history.size(); ++e)
          loss_csv += r.cell + "," + std::to_string(r.seed) + "," + std::to_string(e + 1) + "," +
                      fmt_double(r.loss_history[e]) + "\n";
      }
      emit("forecast_results.csv", csv);
      emit("forecast_loss.csv", loss_csv);

      nlohmann::json summary;
      summary["experiment"] = "forecast";
      summary["generated_at"] = iso_timestamp();
      summary["goal_mse"] = cfg.forecast.goal_mse;
      for (const char* cell : {"lstm", "rnn"}) {
        nlohmann::json per;
        std::vector<double> test_mses;
        int reached = 0;
        for (const auto& r : fo.rows) {
          if (r.cell != cell) continue;
          per["final_train_mse"].push_back(r.final_train_mse);
          per["test_mse"].push_back(r.test_mse);
          per["epochs_used"].push_back(r.epochs_used);
          test_mses.push_back(r.test_mse);
          reached += r.goal_reached ? 1 : 0;
        }
        std::sort(test_mses.begin(), test_mses.end());
        per["median_test_mse"] = test_mses[test_mses.size() / 2];
        per["goal_reached_count"] = reached;
        summary[cell] = per;

        char line[160];
        std::snprintf(line, sizeof line, "%s: goal %s reached on %d/%zu seeds, median test mse %.6g",
                      cell, fmt_double(cfg.forecast.goal_mse).c_str(), reached, cfg.seeds.size(),
                      test_mses[test_mses.size() / 2]);
        result.summary_lines.push_back(line);
      }
      emit("summary.json", summary.dump(2) + "\n");
    } else if (cfg.experiment == "cache-sim") {
      const CacheOutcome co = run_cache_experiment(cfg);

      std::string csv = "# schema: cache-results v1\n";
      csv += "scheme,transmit_power_dbm,mean_mos,std_mos,hit_ratio,seed\n";
      std::string curve_csv = "# schema: cache-training v1\nscheme,seed,episode,mean_reward\n";
      for (std::size_t i = 0; i < co.runs.size(); ++i) {
        for (const auto& r : co.runs[i].rows)
          csv += r.scheme + "," + fmt_double(r.power_dbm) + "," + fmt_double(r.mean_mos) + "," +
                 fmt_double(r.std_mos) + "," + fmt_double(r.hit_ratio) + "," +
                 std::to_string(r.seed) + "\n";
        const std::uint64_t seed = cfg.seeds[i];
        for (std::size_t e = 0; e < co.runs[i].laql_curve.size(); ++e)
          curve_csv += "laql," + std::to_string(seed) + "," + std::to_string(e + 1) + "," +
                       fmt_double(co.runs[i].laql_curve[e]) + "\n";
        for (std::size_t e = 0; e < co.runs[i].ql_curve.size(); ++e)
          curve_csv += "q_learning," + std::to_string(seed) + "," + std::to_string(e + 1) + "," +
                       fmt_double(co.runs[i].ql_curve[e]) + "\n";
      }
      emit("cache_results.csv", csv);
      emit("cache_training.csv", curve_csv);

      // Aggregate: per scheme, mean MOS per power point across seeds, plus
      // per-(seed,power) samples for the paired comparison.
      const std::vector<std::string> scheme_names = {"laql", "q_learning", "noncoop", "random"};
      const std::size_t n_powers = cfg.cache.sweep_dbm.size();
      std::map<std::string, std::vector<double>> per_power_mean;  // [scheme][power]
      std::map<std::string, std::vector<double>> samples;         // [scheme][(seed,power)]
      for (const auto& name : scheme_names) {
        per_power_mean[name].assign(n_powers, 0.0);
        samples[name].clear();
      }
      for (const auto& run : co.runs)
        for (const auto& r : run.rows) {
          const auto it = std::find(cfg.cache.sweep_dbm.begin(), cfg.cache.sweep_dbm.end(),
                                    r.power_dbm);
          per_power_mean[r.scheme][it - cfg.cache.sweep_dbm.begin()] +=
              r.mean_mos / static_cast<double>(co.runs.size());
          samples[r.scheme].push_back(r.mean_mos);
        }

      nlohmann::json summary;
      summary["experiment"] = "cache-sim";
      summary["generated_at"] = iso_timestamp();
      summary["sweep_dbm"] = cfg.cache.sweep_dbm;
      for (const auto& name : scheme_names) {
        double grand = 0.0;
        for (double v : per_power_mean[name]) grand += v;
        grand /= static_cast<double>(n_powers);
        summary["schemes"][name]["mean_mos_per_power"] = per_power_mean[name];
        summary["schemes"][name]["grand_mean_mos"] = grand;

        char line[160];
        std::snprintf(line, sizeof line, "%s: grand mean MOS %.4f", name.c_str(), grand);
        result.summary_lines.push_back(line);
      }
      summary["gaps_pct"]["laql_vs_q_learning"] =
          mean_percent_gap(per_power_mean["laql"], per_power_mean["q_learning"]);
      summary["gaps_pct"]["laql_vs_random"] =
          mean_percent_gap(per_power_mean["laql"], per_power_mean["random"]);
      summary["gaps_pct"]["q_learning_vs_noncoop"] =
          mean_percent_gap(per_power_mean["q_learning"], per_power_mean["noncoop"]);
      summary["gaps_pct"]["noncoop_vs_random"] =
          mean_percent_gap(per_power_mean["noncoop"], per_power_mean["random"]);
      const PairedGap gap = paired_gap(samples["laql"], samples["random"]);
      summary["laql_minus_random"]["mean_diff"] = gap.mean_diff;
      summary["laql_minus_random"]["ci95_low"] = gap.ci95_low;
      summary["laql_minus_random"]["n"] = gap.n;
      emit("summary.json", summary.dump(2) + "\n");
    } else if (cfg.experiment == "mec-sim") {
      const MecOutcome mo = run_mec_experiment_all(cfg);

      std::string csv = "# schema: mec-results v1\n";
      csv += "policy,mean_latency_s,mean_energy_j,violation_rate,seed\n";
      for (const auto& run : mo.runs)
        for (const auto& s : run.schemes)
          csv += s.policy + "," + fmt_double(s.mean_latency_s) + "," + fmt_double(s.mean_energy_j) +
                 "," + fmt_double(s.violation_rate) + "," + std::to_string(run.seed) + "\n";
      emit("mec_results.csv", csv);

      nlohmann::json summary;
      summary["experiment"] = "mec-sim";
      summary["generated_at"] = iso_timestamp();
      for (const char* policy :
           {"always_local", "always_fog", "greedy_min_cost", "q_learning"}) {
        double lat = 0, en = 0, viol = 0, rew = 0;
        for (const auto& run : mo.runs)
          for (const auto& s : run.schemes)
            if (s.policy == policy) {
              lat += s.mean_latency_s / mo.runs.size();
              en += s.mean_energy_j / mo.runs.size();
              viol += s.violation_rate / mo.runs.size();
              rew += s.mean_reward / mo.runs.size();
            }
        summary["policies"][policy] = {{"mean_latency_s", lat},
                                       {"mean_energy_j", en},
                                       {"violation_rate", viol},
                                       {"mean_reward", rew}};
        char line[200];
        std::snprintf(line, sizeof line,
                      "%s: mean latency %.4gs, mean energy %.4gJ, violations %.1f%%", policy, lat,
                      en, viol * 100.0);
        result.summary_lines.push_back(line);
      }
      emit("summary.json", summary.dump(2) + "\n");
    } else {
      throw ConfigError("experiment: must be forecast, cache-sim or mec-sim");
    }
  } catch (const std::exception& e) {
    // keep partial outputs, drop a marker, and fail the run
    write_text_file(out_dir / "FAILED", std::string(e.what()) + "\n");
    result.files_written.push_back((out_dir / "FAILED").string());
    result.summary_lines.push_back(std::string("run failed: ") + e.what());
    result.exit_code = 1;
  }
  return result;
}

}  // namespace fogsim
