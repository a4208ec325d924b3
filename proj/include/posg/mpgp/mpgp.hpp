#pragma once

// Receding-horizon game play: agents re-solve the game from their particle
// beliefs every step and only the first action of each plan reaches the world.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "posg/beliefs/particles.hpp"
#include "posg/game/game.hpp"
#include "posg/policy/adam.hpp"
#include "posg/policy/policy.hpp"
#include "posg/solver/solver.hpp"

namespace posg {

enum class BrainMode : std::uint8_t { Shared, Separate };

std::string to_string(BrainMode mode);
BrainMode parse_brain_mode(const std::string& text);

struct MpgpConfig {
  BrainMode mode = BrainMode::Separate;
  std::vector<GatherMode> gather;  // per player; empty means all active
  std::vector<std::size_t> n_eq;   // per player; empty means 1 each
  std::size_t k_all = 1000;
  double gamma = 0.1;
  SolverConfig solver{};
  /// Iteration cap for steps after the first; 0 keeps solver.max_iters.
  std::size_t warm_iters = 0;
  AdamConfig adam{};
  std::vector<std::size_t> hidden{64, 64};
  std::size_t steps = 20;
  /// Separate mode: every agent uses the same particle and solver seeds.
  bool common_agent_seeds = false;
  bool record_first_trace = false;
  std::optional<std::filesystem::path> particle_dump;  // agent 0's cloud
  /// Systematic resampling when ESS < fraction * K_all; 0 disables (the default).
  double resample_ess_fraction = 0.0;
};

struct Candidate {
  JointPolicy theta;
  std::vector<AdamState> adam;
};

/// One planner. A shared-brain agent controls every player; a separate-brain
/// agent controls only `player`.
struct AgentRuntime {
  std::optional<std::size_t> player;  // empty for the shared brain
  ParticleSet particles;
  std::vector<Candidate> candidates;
  std::vector<double> windows;  // true observation windows, history layout
  double gamma = 0.0;
  std::uint64_t seed = 0;
  double resample_ess_fraction = 0.0;
  std::size_t resamples = 0;

  [[nodiscard]] bool controls(std::size_t p) const { return !player || *player == p; }
};

struct WorldSim {
  std::vector<double> state;
  std::uint64_t seed = 0;
  std::size_t step = 0;
};

/// Solves every candidate from its warm start and stores the new parameters
/// and Adam states back into the agent.
std::vector<EquilibriumResult> plan(AgentRuntime& agent, const Game& game,
                                    const SolverConfig& solver, std::size_t step);

struct ActOutcome {
  std::vector<double> state;
  std::vector<std::vector<double>> observations;  // per player
};

/// Advances the world one transition and samples each player's observation.
/// `noise` overrides the draws (one vector per player) when given.
ActOutcome act(WorldSim& world, const Game& game, std::span<const std::vector<double>> actions,
               const std::vector<std::vector<double>>* noise = nullptr);

/// Action of the agent's first candidate for player `p` from its true window.
std::vector<double> agent_action(const AgentRuntime& agent, const Game& game, std::size_t p);

/// Filter step after acting: each candidate's partition block advances under
/// that candidate's policy; a separate-brain agent conditions on its own
/// observation only. Appends the observation(s) to the agent's windows.
NormalizeOutcome update_beliefs(AgentRuntime& agent, const Game& game,
                                std::span<const double> own_observation, std::size_t step);
/// Shared-brain variant: open loop (gamma 0), all players' windows advance.
NormalizeOutcome update_beliefs_shared(AgentRuntime& agent, const Game& game,
                                       std::span<const std::vector<double>> observations,
                                       std::size_t step);

struct SurprisalEntry {
  std::size_t agent = 0;
  std::size_t target = 0;
  double value = 0.0;
  friend bool operator==(const SurprisalEntry&, const SurprisalEntry&) = default;
};

struct StepRow {
  std::size_t t = 0;
  std::vector<double> state;                 // after the step
  std::vector<std::vector<double>> actions;  // per player
  std::vector<double> costs;                 // reported instantaneous cost per player
  std::vector<std::vector<std::size_t>> iterations;  // [agent][candidate]
  std::vector<SurprisalEntry> surprisal;
  double mean_step_seconds = 0.0;  // mean wall time per gradient step this round
  bool degenerate = false;         // some agent's weights underflowed
  friend bool operator==(const StepRow&, const StepRow&) = default;
};

struct TrialRecord {
  std::string scenario;
  BrainMode mode = BrainMode::Separate;
  std::uint64_t seed = 0;
  std::size_t players = 0;
  std::vector<double> initial_state;
  std::vector<StepRow> rows;
  std::vector<double> step_seconds;  // every gradient step of every solve
  std::vector<TracePoint> first_trace;
  bool aborted = false;
  std::string diagnostic;

  [[nodiscard]] std::vector<double> total_costs() const;
  friend bool operator==(const TrialRecord&, const TrialRecord&) = default;
};

/// Stepwise episode driver; run_episode loops step() to completion.
class Episode {
 public:
  Episode(const Game& game, MpgpConfig config, std::uint64_t seed);

  /// Plays one round. Returns false once the episode is over or aborted.
  bool step();
  [[nodiscard]] bool done() const;

  [[nodiscard]] const std::vector<AgentRuntime>& agents() const { return agents_; }
  [[nodiscard]] const WorldSim& world() const { return world_; }
  [[nodiscard]] const TrialRecord& record() const { return record_; }
  TrialRecord take_record() { return std::move(record_); }

 private:
  const Game& game_;
  MpgpConfig config_;
  std::vector<AgentRuntime> agents_;
  WorldSim world_;
  TrialRecord record_;
};

TrialRecord run_episode(const Game& game, const MpgpConfig& config, std::uint64_t seed);

/// Mean Euclidean distance between two players' positions over the episode.
double mean_distance(const Game& game, const TrialRecord& record, std::size_t a, std::size_t b);

}  // namespace posg
