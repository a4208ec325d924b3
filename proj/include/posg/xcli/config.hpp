#pragma once

// Experiment configuration: a line-oriented "key = value" text file.
// Lists are comma separated; '#' starts a comment.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "posg/mpgp/mpgp.hpp"
#include "posg/scenarios/scenarios.hpp"

namespace posg {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  ScenarioConfig scenario{};
  BrainMode mode = BrainMode::Separate;
  std::vector<GatherMode> gather;  // empty: all active
  std::size_t k_all = 1000;
  std::size_t k_batch = 10;
  std::size_t k_eval = 0;
  double gamma = 0.1;
  std::vector<std::size_t> n_eq;  // empty: 1 per player
  std::size_t max_iters = 100;
  std::size_t warm_iters = 0;
  double eps_tol = 1e-3;
  double learning_rate = 1e-3;
  std::vector<std::size_t> hidden{64, 64};
  std::size_t steps = 20;
  std::size_t trials = 10;
  std::uint64_t seed = 0;
  bool common_agent_seeds = true;
  std::size_t report_player = 1;
  bool record_first_trace = false;
  double resample_ess_fraction = 0.0;
  bool dump_particles = false;
  std::filesystem::path output_dir = "out";

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Parses config text; `origin` names the source in diagnostics.
ExperimentConfig parse_config_text(const std::string& text, const std::string& origin = "config");
ExperimentConfig parse_config(const std::filesystem::path& path);

/// Every key with its current value, in a form parse_config_text accepts.
void write_config(const ExperimentConfig& config, std::ostream& out);
std::string config_echo(const ExperimentConfig& config);

/// Names of all accepted keys.
std::vector<std::string> config_keys();

/// Planner settings derived from the experiment config.
MpgpConfig mpgp_config(const ExperimentConfig& config);

}  // namespace posg
