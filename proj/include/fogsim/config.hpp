#pragma once

// Experiment configuration: a flat `key = value` file format with `#`
// comments and dotted section keys. Unknown keys are rejected with their line
// number; range violations name the offending key.

#include <cstdint>
#include <cstdlib>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "fogsim/errors.hpp"
#include "fogsim/scenario.hpp"

namespace fogsim {

struct ExperimentConfig {
  std::string experiment;  // forecast | cache-sim | mec-sim (set by CLI subcommand or key)
  std::string output_dir = "out";
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  int workers = 1;

  struct {
    double region_diameter_m = 4000.0;
    int ap_count = 2;
    int ue_count = 20;
    int content_count = 10;
    double content_size_bits = 1e7;
    int cache_capacity = 2;
    double ap_power_dbm = 25.0;
    double fronthaul_delay_s = 1.0;
    double ue_cpu_freq_hz = 1e9;
    double ue_energy_coeff = 1e-28;
  } scenario;

  struct {
    double path_loss_exponent = 3.5;
    double reference_gain = 1e-3;
    double noise_power_w = 1e-13;
    double bandwidth_hz = 1e7;
  } channel;

  struct {
    int slots = 500;
    int window = 5;
    double step_bound = 0.05;
    double x0 = 0.5;
    double zipf_exponent = 1.2;
  } popularity;

  struct {
    int hidden = 16;
    double goal_mse = 0.01;
    int max_epochs = 5000;
    double learning_rate = 0.01;
    std::string optimizer = "adam";
    int content = 0;
  } forecast;

  struct {
    double alpha = 0.75;
    double gamma = 0.6;
    double epsilon_start = 1.0;
    double epsilon_end = 0.05;
    int episodes = 150;
    int steps_per_episode = 100;
    double la_lambda = 0.1;
  } rl;

  struct {
    int request_batch = 50;
    int eval_batches = 30;
    double train_power_dbm = 25.0;
    double pop_step_bound = 0.01;  // per-episode popularity drift during caching runs
    bool zipf_skewed_init = true;
    std::vector<double> sweep_dbm = {10, 15, 20, 25, 30, 35, 40};
  } cache;

  struct {
    int task_types = 10;
    int cache_capacity = 3;
    double fog_cpu_hz = 5e9;
    double cloud_cpu_hz = 5e10;
    double fronthaul_rate_bps = 2e6;
    double ue_tx_power_w = 0.1;
    double w_time = 0.5;
    double w_energy = 0.5;
    double energy_ref_j = 1.0;
    double deadline_penalty = 1.0;
    double zipf_exponent = 0.8;
    int eval_episodes = 20;
  } mec;

  ScenarioTemplate scenario_template() const {
    ScenarioTemplate t;
    t.region_diameter_m = scenario.region_diameter_m;
    t.ap_count = scenario.ap_count;
    t.ue_count = scenario.ue_count;
    t.content_count = scenario.content_count;
    t.content_size_bits = scenario.content_size_bits;
    t.cache_capacity = scenario.cache_capacity;
    t.ap_transmit_power_w = dbm_to_watts(scenario.ap_power_dbm);
    t.fronthaul_delay_s = scenario.fronthaul_delay_s;
    t.ue_cpu_freq_hz = scenario.ue_cpu_freq_hz;
    t.ue_energy_coeff = scenario.ue_energy_coeff;
    t.channel.path_loss_exponent = channel.path_loss_exponent;
    t.channel.reference_gain = channel.reference_gain;
    t.channel.noise_power_w = channel.noise_power_w;
    t.channel.bandwidth_hz = channel.bandwidth_hz;
    return t;
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& v, int line) {
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (end == v.c_str() || *end != '\0')
    throw ParseError("line " + std::to_string(line) + ": expected a number, got '" + v + "'");
  return x;
}

inline int parse_int(const std::string& v, int line) {
  const double x = parse_double(v, line);
  const int i = static_cast<int>(x);
  if (static_cast<double>(i) != x)
    throw ParseError("line " + std::to_string(line) + ": expected an integer, got '" + v + "'");
  return i;
}

inline bool parse_bool(const std::string& v, int line) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ParseError("line " + std::to_string(line) + ": expected true/false, got '" + v + "'");
}

template <class T, class Parse>
std::vector<T> parse_list(const std::string& v, int line, Parse parse) {
  std::vector<T> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty())
      throw ParseError("line " + std::to_string(line) + ": empty element in list '" + v + "'");
    out.push_back(parse(item, line));
  }
  if (out.empty()) throw ParseError("line " + std::to_string(line) + ": empty list");
  return out;
}

inline std::uint64_t parse_u64(const std::string& v, int line) {
  char* end = nullptr;
  const unsigned long long x = std::strtoull(v.c_str(), &end, 10);
  if (end == v.c_str() || *end != '\0')
    throw ParseError("line " + std::to_string(line) + ": expected an unsigned integer, got '" + v +
                     "'");
  return static_cast<std::uint64_t>(x);
}

}  // namespace detail

inline void validate_config(const ExperimentConfig& c) {
  auto fail = [](const std::string& key, const std::string& why) {
    throw ConfigError(key + ": " + why);
  };
  if (!c.experiment.empty() && c.experiment != "forecast" && c.experiment != "cache-sim" &&
      c.experiment != "mec-sim")
    fail("experiment", "must be forecast, cache-sim or mec-sim");
  if (c.seeds.empty()) fail("seeds", "must be non-empty");
  if (c.workers < 1) fail("workers", "must be >= 1");
  validate_template(c.scenario_template());  // names scenario/channel fields itself
  if (c.popularity.slots < 2) fail("popularity.slots", "must be >= 2");
  if (c.popularity.window < 1) fail("popularity.window", "must be >= 1");
  if (c.popularity.window >= c.popularity.slots)
    fail("popularity.window", "must be smaller than popularity.slots");
  if (c.popularity.step_bound <= 0) fail("popularity.step_bound", "must be > 0");
  if (c.popularity.x0 < 0 || c.popularity.x0 > 1) fail("popularity.x0", "must lie in [0,1]");
  if (c.popularity.zipf_exponent < 0) fail("popularity.zipf_exponent", "must be >= 0");
  if (c.forecast.hidden < 1) fail("forecast.hidden", "must be >= 1");
  if (c.forecast.goal_mse <= 0) fail("forecast.goal_mse", "must be > 0");
  if (c.forecast.max_epochs < 1) fail("forecast.max_epochs", "must be >= 1");
  if (c.forecast.learning_rate <= 0) fail("forecast.learning_rate", "must be > 0");
  if (c.forecast.optimizer != "adam" && c.forecast.optimizer != "sgd")
    fail("forecast.optimizer", "must be adam or sgd");
  if (c.forecast.content < 0 || c.forecast.content >= c.scenario.content_count)
    fail("forecast.content", "must index a catalog content");
  if (c.rl.alpha <= 0 || c.rl.alpha > 1) fail("rl.alpha", "must lie in (0,1]");
  if (c.rl.gamma < 0 || c.rl.gamma >= 1) fail("rl.gamma", "must lie in [0,1)");
  if (c.rl.epsilon_start < 0 || c.rl.epsilon_start > 1)
    fail("rl.epsilon_start", "must lie in [0,1]");
  if (c.rl.epsilon_end < 0 || c.rl.epsilon_end > 1) fail("rl.epsilon_end", "must lie in [0,1]");
  if (c.rl.episodes < 1) fail("rl.episodes", "must be >= 1");
  if (c.rl.steps_per_episode < 1) fail("rl.steps_per_episode", "must be >= 1");
  if (c.rl.la_lambda <= 0 || c.rl.la_lambda >= 1) fail("rl.la_lambda", "must lie in (0,1)");
  if (c.cache.request_batch < 1) fail("cache.request_batch", "must be >= 1");
  if (c.cache.eval_batches < 1) fail("cache.eval_batches", "must be >= 1");
  if (c.cache.pop_step_bound <= 0) fail("cache.pop_step_bound", "must be > 0");
  if (c.cache.sweep_dbm.empty()) fail("cache.sweep_dbm", "must be non-empty");
  if (c.mec.task_types < 1) fail("mec.task_types", "must be >= 1");
  if (c.mec.cache_capacity < 1) fail("mec.cache_capacity", "must be >= 1");
  if (c.mec.fog_cpu_hz <= 0) fail("mec.fog_cpu_hz", "must be > 0");
  if (c.mec.cloud_cpu_hz < c.mec.fog_cpu_hz)
    fail("mec.cloud_cpu_hz", "must be at least mec.fog_cpu_hz");
  if (c.mec.fronthaul_rate_bps <= 0) fail("mec.fronthaul_rate_bps", "must be > 0");
  if (c.mec.ue_tx_power_w <= 0) fail("mec.ue_tx_power_w", "must be > 0");
  if (c.mec.w_time < 0 || c.mec.w_energy < 0) fail("mec.w_time", "weights must be >= 0");
  if (c.mec.energy_ref_j <= 0) fail("mec.energy_ref_j", "must be > 0");
  if (c.mec.deadline_penalty < 0) fail("mec.deadline_penalty", "must be >= 0");
  if (c.mec.zipf_exponent < 0) fail("mec.zipf_exponent", "must be >= 0");
  if (c.mec.eval_episodes < 1) fail("mec.eval_episodes", "must be >= 1");
}

// Parses the flat key=value format into a fully-validated config.
inline ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig c;
  using Setter = std::function<void(ExperimentConfig&, const std::string&, int)>;
  static const std::map<std::string, Setter> keys = {
      {"experiment", [](ExperimentConfig& c, const std::string& v, int) { c.experiment = v; }},
      {"output_dir", [](ExperimentConfig& c, const std::string& v, int) { c.output_dir = v; }},
      {"seeds",
       [](ExperimentConfig& c, const std::string& v, int ln) {
         c.seeds = detail::parse_list<std::uint64_t>(v, ln, detail::parse_u64);
       }},
      {"workers",
       [](ExperimentConfig& c, const std::string& v, int ln) { c.workers = detail::parse_int(v, ln); }},

      {"scenario.region_diameter_m",
       [](ExperimentConfig& c, const std::string& v, int ln) {
         c.scenario.region_diameter_m = detail::parse_double(v, ln);
       }},
      {"scenario.ap_count",
       [](ExperimentConfig& c, const std::string& v, int ln) {
         c.scenario.ap_count = detail::parse_int(v, ln);
       }},
      {"scenario.ue_count",
       [](ExperimentConfig& c, const std::string& v, int ln) {
         c.scenario.ue_count = detail::parse_int(v, ln);
       }},
      {"scenario.content_count",
       [](ExperimentConfig& c, const std::string& v, int ln) {
         c.scenario.content_count = detail::parse_int(v, ln);
       }},
      {"scenario.content_size_bits",
       [](ExperimentConfig& c, const std::string& v, int ln) {
         c.scenario.content_size_bits = detail::parse_double(v, ln);
       }},
      {"scenario.cache_capacity",
       [](ExperimentConfig& c, const std::string& v, int ln) {
         c.scenario.cache_capacity = detail::parse_int(v, ln);
       }},
      {"scenario.ap_power_dbm",
       [](ExperimentConfig& c, const std::string& v, int ln) {
         c.scenario.ap_power_dbm = detail::parse_double(v, ln);
       }},
      {"scenario.fronthaul_delay_s",
       [](ExperimentConfig& c, const std::string& v, int ln) {
         c.scenario.fronthaul_delay_s = detail::parse_double(v, ln);
       }},
      {"scenario.ue_cpu_freq_hz",
       [](ExperimentConfig& c, const std::string& v, int ln) {
         c.scenario.ue_cpu_freq_hz = detail::parse_double(v, ln);
       }},
      {"scenario.ue_energy_coeff",
       [](ExperimentConfig& c, const std::string& v, int ln) {
         c.scenario.ue_energy_coeff = detail::parse_double(v, ln);
       }},

      {"channel.path_loss_exponent",
       [](ExperimentConfig& c, const std::string& v, int ln) {
         c.channel.path_loss_exponent = detail::parse_double(v, ln);
       }},
      {"channel.reference_gain",
       [](ExperimentConfig& c, const std::string& v, int ln) {
         c.channel.reference_gain = detail::parse_double(v, ln);
       }},
      {"channel.noise_power_w",
       [](ExperimentConfig& c, const std::string& v, int ln) {
         c.channel.noise_power_w = detail::parse_double(v, ln);
       }},
      {"channel.bandwidth_hz",
       [](ExperimentConfig& c, const std::string& v, int ln) {
         c.channel.bandwidth_hz = detail::parse_double(v, ln);
       }},

      {"popularity.slots",
       [](ExperimentConfig& c, const std::string& v, int ln) {
         c.popularity.slots = detail::parse_int(v, ln);
       }},
      {"popularity.window",
       [](ExperimentConfig& c, const std::string& v, int ln) {
         c.popularity.window = detail::parse_int(v, ln);
       }},
      {"popularity.step_bound",
       [](ExperimentConfig& c, const std::string& v, int ln) {
         c.popularity.step_bound = detail::parse_double(v, ln);
       }},
      {"popularity.x0",
       [](ExperimentConfig& c, const std::string& v, int ln) {
         c.popularity.x0 = detail::parse_double(v, ln);
       }},
      {"popularity.zipf_exponent",
       [](ExperimentConfig& c, const std::string& v, int ln) {
         c.popularity.zipf_exponent = detail::parse_double(v, ln);
       }},

      {"forecast.hidden",
       [](ExperimentConfig& c, const std::string& v, int ln) {
         c.forecast.hidden = detail::parse_int(v, ln);
       }},
      {"forecast.goal_mse",
       [](ExperimentConfig& c, const std::string& v, int ln) {
         c.forecast.goal_mse = detail::parse_double(v, ln);
       }},
      {"forecast.max_epochs",
       [](ExperimentConfig& c, const std::string& v, int ln) {
         c.forecast.max_epochs = detail::parse_int(v, ln);
       }},
      {"forecast.learning_rate",
       [](ExperimentConfig& c, const std::string& v, int ln) {
         c.forecast.learning_rate = detail::parse_double(v, ln);
       }},
      {"forecast.optimizer",
       [](ExperimentConfig& c, const std::string& v, int) { c.forecast.optimizer = v; }},
      {"forecast.content",
       [](ExperimentConfig& c, const std::string& v, int ln) {
         c.forecast.content = detail::parse_int(v, ln);
       }},

      {"rl.alpha",
       [](ExperimentConfig& c, const std::string& v, int ln) {
         c.rl.alpha = detail::parse_double(v, ln);
       }},
      {"rl.gamma",
       [](ExperimentConfig& c, const std::string& v, int ln) {
         c.rl.gamma = detail::parse_double(v, ln);
       }},
      {"rl.epsilon_start",
       [](ExperimentConfig& c, const std::string& v, int ln) {
         c.rl.epsilon_start = detail::parse_double(v, ln);
       }},
      {"rl.epsilon_end",
       [](ExperimentConfig& c, const std::string& v, int ln) {
         c.rl.epsilon_end = detail::parse_double(v, ln);
       }},
      {"rl.episodes",
       [](ExperimentConfig& c, const std::string& v, int ln) {
         c.rl.episodes = detail::parse_int(v, ln);
       }},
      {"rl.steps_per_episode",
       [](ExperimentConfig& c, const std::string& v, int ln) {
         c.rl.steps_per_episode = detail::parse_int(v, ln);
       }},
      {"rl.la_lambda",
       [](ExperimentConfig& c, const std::string& v, int ln) {
         c.rl.la_lambda = detail::parse_double(v, ln);
       }},

      {"cache.request_batch",
       [](ExperimentConfig& c, const std::string& v, int ln) {
         c.cache.request_batch = detail::parse_int(v, ln);
       }},
      {"cache.eval_batches",
       [](ExperimentConfig& c, const std::string& v, int ln) {
         c.cache.eval_batches = detail::parse_int(v, ln);
       }},
      {"cache.train_power_dbm",
       [](ExperimentConfig& c, const std::string& v, int ln) {
         c.cache.train_power_dbm = detail::parse_double(v, ln);
       }},
      {"cache.pop_step_bound",
       [](ExperimentConfig& c, const std::string& v, int ln) {
         c.cache.pop_step_bound = detail::parse_double(v, ln);
       }},
      {"cache.zipf_skewed_init",
       [](ExperimentConfig& c, const std::string& v, int ln) {
         c.cache.zipf_skewed_init = detail::parse_bool(v, ln);
       }},
      {"cache.sweep_dbm",
       [](ExperimentConfig& c, const std::string& v, int ln) {
         c.cache.sweep_dbm = detail::parse_list<double>(v, ln, detail::parse_double);
       }},

      {"mec.task_types",
       [](ExperimentConfig& c, const std::string& v, int ln) {
         c.mec.task_types = detail::parse_int(v, ln);
       }},
      {"mec.cache_capacity",
       [](ExperimentConfig& c, const std::string& v, int ln) {
         c.mec.cache_capacity = detail::parse_int(v, ln);
       }},
      {"mec.fog_cpu_hz",
       [](ExperimentConfig& c, const std::string& v, int ln) {
         c.mec.fog_cpu_hz = detail::parse_double(v, ln);
       }},
      {"mec.cloud_cpu_hz",
       [](ExperimentConfig& c, const std::string& v, int ln) {
         c.mec.cloud_cpu_hz = detail::parse_double(v, ln);
       }},
      {"mec.fronthaul_rate_bps",
       [](ExperimentConfig& c, const std::string& v, int ln) {
         c.mec.fronthaul_rate_bps = detail::parse_double(v, ln);
       }},
      {"mec.ue_tx_power_w",
       [](ExperimentConfig& c, const std::string& v, int ln) {
         c.mec.ue_tx_power_w = detail::parse_double(v, ln);
       }},
      {"mec.w_time",
       [](ExperimentConfig& c, const std::string& v, int ln) {
         c.mec.w_time = detail::parse_double(v, ln);
       }},
      {"mec.w_energy",
       [](ExperimentConfig& c, const std::string& v, int ln) {
         c.mec.w_energy = detail::parse_double(v, ln);
       }},
      {"mec.energy_ref_j",
       [](ExperimentConfig& c, const std::string& v, int ln) {
         c.mec.energy_ref_j = detail::parse_double(v, ln);
       }},
      {"mec.deadline_penalty",
       [](ExperimentConfig& c, const std::string& v, int ln) {
         c.mec.deadline_penalty = detail::parse_double(v, ln);
       }},
      {"mec.zipf_exponent",
       [](ExperimentConfig& c, const std::string& v, int ln) {
         c.mec.zipf_exponent = detail::parse_double(v, ln);
       }},
      {"mec.eval_episodes",
       [](ExperimentConfig& c, const std::string& v, int ln) {
         c.mec.eval_episodes = detail::parse_int(v, ln);
       }},
  };

  std::stringstream ss(text);
  std::string raw;
  int line = 0;
  while (std::getline(ss, raw)) {
    ++line;
    const std::size_t hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string stripped = detail::trim(raw);
    if (stripped.empty()) continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos)
      throw ParseError("line " + std::to_string(line) + ": expected 'key = value'");
    const std::string key = detail::trim(stripped.substr(0, eq));
    const std::string value = detail::trim(stripped.substr(eq + 1));
    if (key.empty()) throw ParseError("line " + std::to_string(line) + ": missing key");
    if (value.empty())
      throw ParseError("line " + std::to_string(line) + ": missing value for '" + key + "'");
    const auto it = keys.find(key);
    if (it == keys.end())
      throw ParseError("line " + std::to_string(line) + ": unknown key '" + key + "'");
    it->second(c, value, line);
  }

  validate_config(c);
  return c;
}

}  // namespace fogsim
