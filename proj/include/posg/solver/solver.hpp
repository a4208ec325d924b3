#pragma once

// Monte Carlo rollout objective over particles and the gradient-play
// equilibrium search built on it.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "posg/beliefs/particles.hpp"
#include "posg/game/game.hpp"
#include "posg/policy/adam.hpp"
#include "posg/policy/policy.hpp"

namespace posg {

/// Standard normal draws for one rollout, laid out step-major:
/// [t * total_noise_dim + noise offset of player i + j].
std::vector<double> draw_rollout_noise(const Game& game, std::uint64_t seed);

/// Plain-value record of one closed-loop rollout.
struct RolloutSample {
  std::vector<std::vector<double>> states;                     // T_future + 1 joint states
  std::vector<std::vector<std::vector<double>>> actions;       // [t][player]
  std::vector<std::vector<std::vector<double>>> observations;  // [t][player], of states[t+1]
  std::vector<double> costs;                                   // per player
  std::vector<double> noise;
};

/// Builds the rollout on `tape` and returns each player's cost
/// -sum_t r(x_t) as a Var. `policies` holds one lifted policy per player.
/// When `sample` is non-null the trajectory is recorded into it.
std::vector<Var> rollout(const Game& game, Tape& tape, std::span<const double> state,
                         std::span<const double> history, std::span<const PolicyVars> policies,
                         std::span<const double> noise, RolloutSample* sample = nullptr);

/// Plain-value rollout on a private tape.
RolloutSample rollout_sample(const Game& game, std::span<const double> state,
                             std::span<const double> history, const JointPolicy& policy,
                             std::span<const double> noise);

/// Particle indices plus one noise seed per rollout.
struct RolloutBatch {
  std::vector<std::size_t> particles;
  std::vector<std::uint64_t> noise_seeds;
  [[nodiscard]] std::size_t size() const { return particles.size(); }
};

RolloutBatch make_batch(const ParticleSet& particles, std::size_t k_batch, Rng& rng);

struct CostEstimate {
  double cost = 0.0;
  std::vector<double> gradient;  // w.r.t. the player's parameters, flat() order
};

struct CostOptions {
  bool parallel = true;
  bool gradient = true;
};

/// Mean rollout cost of `player` over the batch and its gradient w.r.t. that
/// player's parameters; other players' parameters are constants.
CostEstimate expected_cost(const Game& game, const ParticleSet& particles,
                           const JointPolicy& policy, std::size_t player,
                           const RolloutBatch& batch, CostOptions options = {});

/// Mean rollout cost of every player over the batch, without gradients.
std::vector<double> expected_costs(const Game& game, const ParticleSet& particles,
                                   const JointPolicy& policy, const RolloutBatch& batch,
                                   bool parallel = true);

struct SolverConfig {
  double eps_tol = 1e-3;
  std::size_t max_iters = 100;
  std::size_t k_batch = 10;
  /// Size of the fixed evaluation batch used for the stopping test; 0 uses k_batch.
  std::size_t k_eval = 0;
  bool parallel = true;
  bool record_trace = false;
};

struct TracePoint {
  std::size_t iteration = 0;
  std::size_t player = 0;
  double cost = 0.0;
  friend bool operator==(const TracePoint&, const TracePoint&) = default;
};

struct EquilibriumResult {
  JointPolicy theta;
  std::vector<double> costs;   // per player, on the evaluation batch
  std::vector<double> deltas;  // per player, last cost change
  std::size_t iterations = 0;
  bool converged = false;
  bool aborted = false;
  std::string diagnostic;
  std::vector<TracePoint> trace;     // iteration 0 holds the initial costs
  std::vector<double> step_seconds;  // wall time of each per-player gradient step
};

/// Gradient play: each iteration visits players in order, takes one Adam step
/// on a fresh batch gradient, then re-evaluates that player's cost on a fixed
/// evaluation batch. Stops when every |delta| < eps_tol or at max_iters.
/// `adam` holds one state per player and is updated in place for warm starts;
/// an empty vector is initialized with default settings.
EquilibriumResult calc_eq(const Game& game, const ParticleSet& particles, JointPolicy theta,
                          std::vector<AdamState>& adam, const SolverConfig& config,
                          std::uint64_t seed);

std::vector<AdamState> make_adam_states(const JointPolicy& theta, AdamConfig config = {});

}  // namespace posg
