#pragma once

// Trial batteries, parameter sweeps and the text files they produce.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "posg/mpgp/mpgp.hpp"
#include "posg/xcli/config.hpp"

namespace posg {

// Trial records. Header lines "# key = value", then one tab-separated row per
// step: t, state, actions, costs, iterations, surprisal, mean_step_seconds,
// degenerate. Lists are comma separated, per-player/agent groups ';'
// separated, surprisal entries agent:target:value.
void write_record(const TrialRecord& record, std::ostream& out);
TrialRecord read_record(std::istream& in);
void save_record(const TrialRecord& record, const std::filesystem::path& path);
TrialRecord load_record(const std::filesystem::path& path);
/// Every *.record file in `dir`, in filename order.
std::vector<TrialRecord> load_records(const std::filesystem::path& dir);

/// Display names of the cost groups reported for a scenario (teams in the
/// tag chain, single players otherwise) and their member players.
struct CostGroup {
  std::string name;
  std::vector<std::size_t> players;
};
std::vector<CostGroup> cost_groups(const Game& game);

struct SummaryRow {
  std::string configuration;
  std::string group;
  std::size_t trials = 0;
  double mean = 0.0;
  double std_error = 0.0;
  double step_seconds_mean = 0.0;
  double step_seconds_std = 0.0;
  friend bool operator==(const SummaryRow&, const SummaryRow&) = default;
};

using SummaryTable = std::vector<SummaryRow>;

void write_summary(const SummaryTable& table, std::ostream& out);
SummaryTable read_summary(std::istream& in);

/// Per-configuration rows of `records`, all of which share one configuration.
std::vector<SummaryRow> summarize(const Game& game, const std::string& configuration,
                                  const std::vector<TrialRecord>& records);

struct MatrixConfiguration {
  std::string label;
  std::vector<GatherMode> gather;
};

/// Every active/passive combination: per player for two-player games, per
/// team for the tag chain, and only P2's mode for the warehouse.
std::vector<MatrixConfiguration> matrix_configurations(const Game& game);

struct MatrixResult {
  SummaryTable table;
  std::vector<MatrixConfiguration> configurations;
  std::vector<std::vector<TrialRecord>> records;  // [configuration][trial]
  std::vector<std::string> warnings;
};

/// Runs config.trials seeded episodes (seed = base + trial) for every
/// configuration. Writes records, summary and config echo under
/// config.output_dir when `write_files`.
MatrixResult run_matrix(const ExperimentConfig& config, bool write_files = true);

struct SweepRow {
  std::string parameter;
  std::string value;
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  double cost = 0.0;               // report_player's episode cost
  double seconds_per_step = 0.0;   // planning wall time per MPGP step
  double step_seconds = 0.0;       // mean wall time per gradient step
  double distance = 0.0;           // mean distance between players 0 and 1
  std::vector<double> surprisal;   // per agent, mean over steps and targets
  friend bool operator==(const SweepRow&, const SweepRow&) = default;
};

/// Applies a sweep value to the config. Parameters: t_future, k_batch, n_eq
/// (a single count for every player or a per-player list "a:b").
ExperimentConfig apply_sweep_value(ExperimentConfig config, const std::string& parameter,
                                   const std::string& value);

std::vector<SweepRow> sweep(const ExperimentConfig& config, const std::string& parameter,
                            const std::vector<std::string>& values, bool write_files = true);

void write_sweep(const std::vector<SweepRow>& rows, std::ostream& out);
std::vector<SweepRow> read_sweep(std::istream& in);

/// Mean over steps and targets of one agent's surprisal entries.
double mean_surprisal(const TrialRecord& record, std::size_t agent);

class EmitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class PlotKind { Trajectory, Convergence, Surprisal, ParticleCloud };
PlotKind parse_plot_kind(const std::string& text);

/// Writes plot data for `records`. Convergence uses `player`'s trace.
/// Particle clouds are copied from `particle_dump`.
void emit_plot_data(const Game& game, const std::vector<TrialRecord>& records, PlotKind kind,
                    std::ostream& out, std::size_t player = 0,
                    const std::filesystem::path& particle_dump = {});

}  // namespace posg
