#include <catch2/catch_amalgamated.hpp>

#include <cstdint>
#include <string>
#include <vector>

#include "fogsim/config.hpp"

using namespace fogsim;

namespace {

// Checks that parsing `text` raises E and that the message mentions `needle`.
template <class E>
void expect_error(const std::string& text, const std::string& needle) {
  try {
    parse_config(text);
    FAIL("expected an exception for: " << text);
  } catch (const E& e) {
    INFO("message: " << e.what());
    CHECK(std::string(e.what()).find(needle) != std::string::npos);
  }
}

}  // namespace

TEST_CASE("empty config yields the documented defaults") {
  const ExperimentConfig c = parse_config("");
  CHECK(c.experiment.empty());
  CHECK(c.output_dir == "out");
  CHECK(c.seeds == std::vector<std::uint64_t>{1, 2, 3, 4, 5});
  CHECK(c.workers == 1);
  CHECK(c.scenario.region_diameter_m == 4000.0);
  CHECK(c.scenario.ap_count == 2);
  CHECK(c.scenario.ue_count == 20);
  CHECK(c.scenario.content_count == 10);
  CHECK(c.scenario.ap_power_dbm == 25.0);
  CHECK(c.channel.path_loss_exponent == 3.5);
  CHECK(c.channel.bandwidth_hz == 1e7);
  CHECK(c.popularity.slots == 500);
  CHECK(c.popularity.window == 5);
  CHECK(c.forecast.hidden == 16);
  CHECK(c.forecast.optimizer == "adam");
  CHECK(c.rl.alpha == 0.75);
  CHECK(c.rl.gamma == 0.6);
  CHECK(c.rl.epsilon_start == 1.0);
  CHECK(c.rl.epsilon_end == 0.05);
  CHECK(c.cache.request_batch == 50);
  CHECK(c.cache.zipf_skewed_init);
  CHECK(c.cache.sweep_dbm == std::vector<double>{10, 15, 20, 25, 30, 35, 40});
  CHECK(c.mec.task_types == 10);
  CHECK(c.mec.cloud_cpu_hz == 5e10);

  // A comments-only file is the same as an empty one.
  const ExperimentConfig c2 = parse_config("# nothing here\n\n   \n# still nothing\n");
  CHECK(c2.rl.alpha == c.rl.alpha);
  CHECK(c2.seeds == c.seeds);
}

TEST_CASE("every section accepts assignments") {
  const std::string text =
      "experiment = cache-sim\n"
      "output_dir = results/run1\n"
      "seeds = 7, 8, 9\n"
      "workers = 4\n"
      "scenario.region_diameter_m = 1000\n"
      "scenario.ap_count = 3\n"
      "scenario.ue_count = 12\n"
      "scenario.content_count = 6\n"
      "scenario.content_size_bits = 2e7\n"
      "scenario.cache_capacity = 3\n"
      "scenario.ap_power_dbm = 30\n"
      "scenario.fronthaul_delay_s = 0.5\n"
      "scenario.ue_cpu_freq_hz = 2e9\n"
      "scenario.ue_energy_coeff = 2e-28\n"
      "channel.path_loss_exponent = 4\n"
      "channel.reference_gain = 1e-2\n"
      "channel.noise_power_w = 1e-12\n"
      "channel.bandwidth_hz = 2e7\n"
      "popularity.slots = 200\n"
      "popularity.window = 4\n"
      "popularity.step_bound = 0.02\n"
      "popularity.x0 = 0.4\n"
      "popularity.zipf_exponent = 0.9\n"
      "forecast.hidden = 8\n"
      "forecast.goal_mse = 0.005\n"
      "forecast.max_epochs = 2000\n"
      "forecast.learning_rate = 0.02\n"
      "forecast.optimizer = sgd\n"
      "forecast.content = 2\n"
      "rl.alpha = 0.75\n"
      "rl.gamma = 0.5\n"
      "rl.epsilon_start = 0.9\n"
      "rl.epsilon_end = 0.1\n"
      "rl.episodes = 80\n"
      "rl.steps_per_episode = 40\n"
      "rl.la_lambda = 0.2\n"
      "cache.request_batch = 25\n"
      "cache.eval_batches = 10\n"
      "cache.train_power_dbm = 20\n"
      "cache.pop_step_bound = 0.02\n"
      "cache.zipf_skewed_init = false\n"
      "cache.sweep_dbm = 10, 20, 30\n"
      "mec.task_types = 5\n"
      "mec.cache_capacity = 2\n"
      "mec.fog_cpu_hz = 4e9\n"
      "mec.cloud_cpu_hz = 4e10\n"
      "mec.fronthaul_rate_bps = 1e6\n"
      "mec.ue_tx_power_w = 0.2\n"
      "mec.w_time = 0.7\n"
      "mec.w_energy = 0.3\n"
      "mec.energy_ref_j = 0.5\n"
      "mec.deadline_penalty = 2\n"
      "mec.zipf_exponent = 1.1\n"
      "mec.eval_episodes = 5\n";
  const ExperimentConfig c = parse_config(text);
  CHECK(c.experiment == "cache-sim");
  CHECK(c.output_dir == "results/run1");
  CHECK(c.seeds == std::vector<std::uint64_t>{7, 8, 9});
  CHECK(c.workers == 4);
  CHECK(c.scenario.region_diameter_m == 1000.0);
  CHECK(c.scenario.ap_count == 3);
  CHECK(c.scenario.content_size_bits == 2e7);
  CHECK(c.channel.path_loss_exponent == 4.0);
  CHECK(c.channel.reference_gain == 1e-2);
  CHECK(c.popularity.slots == 200);
  CHECK(c.popularity.zipf_exponent == 0.9);
  CHECK(c.forecast.optimizer == "sgd");
  CHECK(c.forecast.content == 2);
  CHECK(c.rl.alpha == 0.75);
  CHECK(c.rl.la_lambda == 0.2);
  CHECK_FALSE(c.cache.zipf_skewed_init);
  CHECK(c.cache.sweep_dbm == std::vector<double>{10, 20, 30});
  CHECK(c.mec.task_types == 5);
  CHECK(c.mec.eval_episodes == 5);
}

TEST_CASE("whitespace and inline comments are tolerated") {
  const ExperimentConfig c = parse_config(
      "  \t rl.alpha=0.5   # tight spacing on purpose\n"
      "workers   =    2\r\n"
      "# full-line comment\n"
      "\n"
      "forecast.optimizer = sgd # trailing note\n");
  CHECK(c.rl.alpha == 0.5);
  CHECK(c.workers == 2);
  CHECK(c.forecast.optimizer == "sgd");
}

TEST_CASE("unknown keys are reported with their line number") {
  expect_error<ParseError>("# header\n\nbogus.key = 1\n", "line 3");
  expect_error<ParseError>("bogus.key = 1\n", "bogus.key");
  // Comment lines still advance the line counter.
  expect_error<ParseError>("# one\n# two\nworkers = 1\nnope = 0\n", "line 4");
}

TEST_CASE("malformed lines raise ParseError") {
  expect_error<ParseError>("workers\n", "expected 'key = value'");
  expect_error<ParseError>("= 5\n", "missing key");
  expect_error<ParseError>("workers =\n", "missing value");
  expect_error<ParseError>("workers = abc\n", "expected a number");
  expect_error<ParseError>("workers = 1.5\n", "expected an integer");
  expect_error<ParseError>("seeds = x3\n", "unsigned");
  expect_error<ParseError>("cache.zipf_skewed_init = maybe\n", "true/false");
  expect_error<ParseError>("seeds = 1,,2\n", "empty element");
}

TEST_CASE("range violations name the offending key") {
  expect_error<ConfigError>("rl.alpha = 1.5\n", "rl.alpha");
  expect_error<ConfigError>("rl.alpha = 0\n", "rl.alpha");
  expect_error<ConfigError>("rl.gamma = 1\n", "rl.gamma");
  expect_error<ConfigError>("rl.la_lambda = 1\n", "rl.la_lambda");
  expect_error<ConfigError>("workers = 0\n", "workers");
  expect_error<ConfigError>("experiment = train\n", "experiment");
  expect_error<ConfigError>("popularity.window = 500\n", "popularity.window");
  expect_error<ConfigError>("popularity.x0 = 1.2\n", "popularity.x0");
  expect_error<ConfigError>("forecast.optimizer = rmsprop\n", "forecast.optimizer");
  expect_error<ConfigError>("forecast.content = 10\n", "forecast.content");
  expect_error<ConfigError>("mec.cloud_cpu_hz = 1e9\n", "mec.cloud_cpu_hz");
  expect_error<ConfigError>("mec.eval_episodes = 0\n", "mec.eval_episodes");
  // Scenario/channel ranges are checked through the shared template validator.
  expect_error<ConfigError>("scenario.content_count = 0\n", "content_count");
  expect_error<ConfigError>("channel.path_loss_exponent = 1\n", "path_loss_exponent");
}

TEST_CASE("validator also covers states unreachable from text") {
  ExperimentConfig c;
  c.seeds.clear();
  try {
    validate_config(c);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("seeds") != std::string::npos);
  }

  ExperimentConfig c2;
  c2.mec.w_time = -1;
  CHECK_THROWS_AS(validate_config(c2), ConfigError);
}

TEST_CASE("later assignments override earlier ones") {
  const ExperimentConfig c = parse_config("rl.alpha = 0.3\nrl.alpha = 0.9\n");
  CHECK(c.rl.alpha == 0.9);
}

TEST_CASE("config maps onto a scenario template") {
  const ExperimentConfig c = parse_config(
      "scenario.ap_power_dbm = 30\n"
      "scenario.ue_count = 7\n"
      "channel.noise_power_w = 1e-12\n");
  const ScenarioTemplate t = c.scenario_template();
  CHECK(t.ap_transmit_power_w == Catch::Approx(1.0).epsilon(1e-12));
  CHECK(t.ue_count == 7);
  CHECK(t.channel.noise_power_w == 1e-12);
  CHECK_NOTHROW(validate_template(t));
}
