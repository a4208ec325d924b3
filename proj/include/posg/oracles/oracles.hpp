#pragma once

// Independent checks used by the CLI and the test suites: finite-difference
// gradient checks over random rollouts, and a two-state filtering problem
// whose posterior can be enumerated exactly.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "posg/game/game.hpp"
#include "posg/scenarios/scenarios.hpp"

namespace posg::oracles {

struct GradcheckReport {
  std::string scenario;
  std::size_t programs = 0;
  std::size_t directions = 0;
  double max_error = 0.0;
  double seconds = 0.0;
};

/// `programs` random rollout programs: random particle and history, random
/// joint policy (hidden widths `hidden`), random player and noise. Each program
/// maps a `directions`-dimensional point p to the player's rollout cost at
/// theta0 + U p for a fixed random U, so every parameter is exercised.
GradcheckReport gradcheck_scenario(const ScenarioConfig& config, std::size_t programs,
                                   std::uint64_t seed, std::size_t directions = 4,
                                   std::vector<std::size_t> hidden = {16, 16}, double h = 1e-6);

/// One hidden binary state that flips every step, observed correctly with
/// probability `accuracy`. Single player, one dummy action.
class BinaryFlipGame : public Game {
 public:
  BinaryFlipGame(double prior_one = 0.3, double accuracy = 0.8, Horizon horizon = {1, 1});

  [[nodiscard]] std::string name() const override { return "binaryflip"; }
  [[nodiscard]] std::size_t num_players() const override { return 1; }
  [[nodiscard]] std::size_t state_dim() const override { return 1; }
  [[nodiscard]] std::size_t action_dim(std::size_t) const override { return 1; }
  [[nodiscard]] std::size_t obs_dim(std::size_t) const override { return 1; }
  [[nodiscard]] std::size_t noise_dim(std::size_t) const override { return 1; }
  [[nodiscard]] double action_scale(std::size_t) const override { return 1.0; }

  Var transition(Tape& tape, Var state, std::span<const Var> actions) const override;
  Var observe(Tape& tape, Var state, std::size_t player,
              std::span<const double> noise) const override;
  Var reward(Tape& tape, Var state, std::size_t player) const override;
  [[nodiscard]] double observation_log_density(std::span<const double> state, std::size_t player,
                                               std::span<const double> obs) const override;
  [[nodiscard]] std::vector<double> sample_initial(Rng& rng) const override;

  [[nodiscard]] double prior_one() const { return prior_one_; }
  [[nodiscard]] double accuracy() const { return accuracy_; }

 private:
  double prior_one_;
  double accuracy_;
  double flip_threshold_;  // observation wrong when the noise draw is below this
};

/// P(x_t = 1 | observations z_1..z_t) for t = 1..T by exact enumeration.
std::vector<double> exact_posterior(double prior_one, double accuracy,
                                    const std::vector<int>& observations);

struct BeliefCheckReport {
  std::vector<int> observations;
  std::vector<double> exact;     // P(x_t = 1 | z_1..t)
  std::vector<double> particle;  // weighted particle fraction with x_t = 1
  double max_tv = 0.0;           // total variation, max over steps
  double seconds = 0.0;
};

/// Runs the particle update with gamma = 1 on a sampled true trajectory and
/// compares its marginal with exact enumeration after every step.
BeliefCheckReport belief_check(std::size_t particles, std::size_t steps, std::uint64_t seed,
                               double gamma = 1.0);

}  // namespace posg::oracles
