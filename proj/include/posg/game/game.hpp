#pragma once

// Differentiable partially observable stochastic game.
//
// A Game is immutable after construction and safe to share across threads.
// All stochasticity enters through the noise draws handed to observe() and the
// Rng handed to sample_initial(); transition, observe and reward are otherwise
// deterministic and built on a Tape so rollouts can be differentiated.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "posg/ad/tape.hpp"
#include "posg/rng.hpp"

namespace posg {

using ad::Tape;
using ad::Var;

struct Horizon {
  std::size_t past = 6;
  std::size_t future = 6;
  friend bool operator==(const Horizon&, const Horizon&) = default;
};

class Game {
 public:
  explicit Game(Horizon horizon) : horizon_(horizon) {}
  virtual ~Game() = default;

  [[nodiscard]] virtual std::string name() const = 0;
  [[nodiscard]] virtual std::size_t num_players() const = 0;
  [[nodiscard]] virtual std::size_t state_dim() const = 0;
  [[nodiscard]] virtual std::size_t action_dim(std::size_t player) const = 0;
  [[nodiscard]] virtual std::size_t obs_dim(std::size_t player) const = 0;
  [[nodiscard]] virtual std::size_t noise_dim(std::size_t player) const = 0;
  /// Bound on |a|_inf for the player's actions.
  [[nodiscard]] virtual double action_scale(std::size_t player) const = 0;

  /// Joint state after applying one action per player.
  virtual Var transition(Tape& tape, Var state, std::span<const Var> actions) const = 0;
  /// One observation for `player`; `noise` holds noise_dim(player) standard normals.
  virtual Var observe(Tape& tape, Var state, std::size_t player,
                      std::span<const double> noise) const = 0;
  /// Instantaneous reward including penalties.
  virtual Var reward(Tape& tape, Var state, std::size_t player) const = 0;
  /// Reward excluding boundary and obstacle penalties (used for reporting).
  virtual Var task_reward(Tape& tape, Var state, std::size_t player) const {
    return reward(tape, state, player);
  }
  /// log O(obs | state) for the player's full observation vector.
  [[nodiscard]] virtual double observation_log_density(std::span<const double> state,
                                                       std::size_t player,
                                                       std::span<const double> obs) const = 0;
  [[nodiscard]] virtual std::vector<double> sample_initial(Rng& rng) const = 0;
  /// Offset of the player's planar position inside the joint state, if any.
  [[nodiscard]] virtual std::optional<std::size_t> position_offset(std::size_t /*player*/) const {
    return std::nullopt;
  }

  [[nodiscard]] const Horizon& horizon() const { return horizon_; }
  [[nodiscard]] std::size_t window_size(std::size_t player) const {
    return horizon_.past * obs_dim(player);
  }
  [[nodiscard]] std::size_t window_offset(std::size_t player) const;
  [[nodiscard]] std::size_t history_dim() const { return window_offset(num_players()); }
  [[nodiscard]] std::size_t total_noise_dim() const;

  // Plain-value conveniences built on a scratch tape.
  [[nodiscard]] std::vector<double> step(std::span<const double> state,
                                         std::span<const std::vector<double>> actions) const;
  [[nodiscard]] std::vector<double> observe_value(std::span<const double> state, std::size_t player,
                                                  std::span<const double> noise) const;
  [[nodiscard]] double reward_value(std::span<const double> state, std::size_t player) const;
  [[nodiscard]] double reported_cost(std::span<const double> state, std::size_t player) const;

 private:
  Horizon horizon_;
};

}  // namespace posg
