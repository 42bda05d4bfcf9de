#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rwre/env_model.hpp"
#include "rwre/pvp_core.hpp"

namespace rwre::harness {

enum ExitCode : int { kPass = 0, kCheckFailed = 1, kConfigError = 2 };

struct SimulateParams {
  std::size_t steps = 1000;
  std::size_t trials = 100;
  Mode mode = Mode::refresh;
  bool annealed = false;
  std::size_t export_paths = 0;  // trajectories and polylines written for the first k trials
};

struct CheckToggles {
  bool nondeterministic = true;
  std::optional<std::pair<double, double>> decay = std::make_pair(1.0, 1.0);  // (K, gamma)
  bool doubly_stochastic = true;
  bool zero_drift = true;
  std::int64_t window_radius = 4;
};

struct RunConfig {
  RunConfig(nlohmann::json effective_config, Environment environment)
      : effective(std::move(effective_config)), env(std::move(environment)) {}

  nlohmann::json effective;  // config after flag overrides
  Environment env;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  SimulateParams simulate;
  CheckToggles checks;
  nlohmann::json verify = nlohmann::json::object();
  std::vector<LatticeVec> generators;
  std::filesystem::path out_dir;
  std::string config_hash;  // FNV-1a of the effective config minus threads and output
};

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;
  std::optional<std::size_t> steps;
  std::optional<std::string> out;
  std::optional<unsigned> threads;
};

// Throws ConfigError on schema violations, including a missing seed.
RunConfig parse_config(nlohmann::json j, const Overrides& overrides = {});
RunConfig load_config(const std::filesystem::path& path, const Overrides& overrides = {});

struct CommandResult {
  int exit_code = kPass;
  nlohmann::json report;
  std::vector<std::string> lines;  // human-readable summary
};

CommandResult cmd_validate(const RunConfig& cfg);
CommandResult cmd_simulate(const RunConfig& cfg);
CommandResult cmd_verify(const RunConfig& cfg);
// Re-summarises an endpoints CSV. n_steps falls back to summary.json next to it.
CommandResult cmd_analyze(const std::filesystem::path& endpoints_csv, std::optional<std::size_t> n_steps,
                          const std::filesystem::path& out_dir);

std::string format_double(double x);
std::string fnv1a_hex(const std::string& bytes);

int run_cli(int argc, char** argv);

}  // namespace rwre::harness
