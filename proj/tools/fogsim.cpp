// Command-line front end: `fogsim <forecast|cache-sim|mec-sim>` runs one
// experiment family per invocation, reading the flat key=value config and
// writing CSVs plus a summary JSON into the output directory.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "fogsim/fogsim.hpp"

namespace {

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw fogsim::ConfigError("cannot read config file: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

int run(const std::string& experiment, const std::string& config_path,
        std::optional<std::uint64_t> seed, const std::string& out_dir, int workers) {
  fogsim::ExperimentConfig cfg =
      config_path.empty() ? fogsim::ExperimentConfig{} : fogsim::parse_config(slurp(config_path));
  cfg.experiment = experiment;
  if (seed) cfg.seeds = {*seed};
  if (!out_dir.empty()) cfg.output_dir = out_dir;
  if (workers > 0) cfg.workers = workers;

  const fogsim::RunResult result = fogsim::run_experiment(cfg);
  for (const auto& line : result.summary_lines) std::printf("%s\n", line.c_str());
  for (const auto& file : result.files_written) std::printf("wrote %s\n", file.c_str());
  return result.exit_code;
}

void add_subcommand(CLI::App& app, const std::string& name, const std::string& desc) {
  auto* sub = app.add_subcommand(name, desc);
  auto config_path = std::make_shared<std::string>();
  auto seed = std::make_shared<std::int64_t>(-1);
  auto out_dir = std::make_shared<std::string>();
  auto workers = std::make_shared<int>(0);
  sub->add_option("--config", *config_path, "config file (flat key = value lines)");
  sub->add_option("--seed", *seed, "run a single seed instead of the config's seed list");
  sub->add_option("--out", *out_dir, "output directory (overrides output_dir)");
  sub->add_option("--workers", *workers, "worker threads (overrides workers)");
  sub->callback([&app, name, config_path, seed, out_dir, workers] {
    std::optional<std::uint64_t> seed_opt;
    if (*seed >= 0) seed_opt = static_cast<std::uint64_t>(*seed);
    const int code = run(name, *config_path, seed_opt, *out_dir, *workers);
    if (code != 0) throw CLI::RuntimeError(code);
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fog-RAN caching and offloading simulator"};
  app.require_subcommand(1);
  add_subcommand(app, "forecast", "train popularity forecasters on random-walk series");
  add_subcommand(app, "cache-sim", "cooperative caching schemes over a transmit-power sweep");
  add_subcommand(app, "mec-sim", "cache-aided task offloading policies");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
