#pragma once

// Concrete games: field-of-view tag, the tag chain, hide and seek, and the
// warehouse pickup problem.

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "posg/game/blocks.hpp"
#include "posg/game/game.hpp"

namespace posg {

using Point = std::array<double, 2>;

struct Obstacle {
  Point center{0.0, 0.0};
  double radius = 0.5;
  friend bool operator==(const Obstacle&, const Obstacle&) = default;
};

enum class SpawnMode : std::uint8_t { Normal, TwoSpawn };

struct ScenarioConfig {
  std::string name = "tag";
  Horizon horizon{};
  std::size_t players = 0;  // 0 selects the scenario default (4 for tagchain, else 2)

  // UAV scenarios.
  double play_radius = 5.0;
  double boundary_weight = 10.0;
  double fov = 1.5707963267948966;
  double sigma2_base = 0.01;
  double c_scale = 5.0;
  double init_sigma = 1.0;
  SpawnMode spawn = SpawnMode::Normal;
  Point spawn_east{2.0, 0.0};
  Point spawn_west{-2.0, 0.0};
  std::vector<Obstacle> obstacles{{{2.0, 0.0}, 0.8}, {{-2.0, 0.0}, 0.8}};
  double occlusion_sharpness = 10.0;

  // Per-player limits; empty selects scenario defaults.
  std::vector<double> v_max;
  std::vector<double> accel_max;

  // Warehouse.
  double alpha = 4.0;
  double beta = 20.0;
  double eta1 = 4.0;
  double eta2 = 4.0;
  Point station{0.5, 1.0};
  std::vector<Point> tasks;  // empty: drawn per episode
  std::size_t task_count = 2;

  /// Variance assigned to exactly observed components when evaluating
  /// observation densities for particle reweighting.
  double obs_density_floor = 0.01;

  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

/// Two-player field-of-view tag; player 0 pursues, player 1 evades.
class TagGame : public Game {
 public:
  explicit TagGame(ScenarioConfig config);

  [[nodiscard]] std::string name() const override { return "tag"; }
  [[nodiscard]] std::size_t num_players() const override { return 2; }
  [[nodiscard]] std::size_t state_dim() const override { return 8; }
  [[nodiscard]] std::size_t action_dim(std::size_t) const override { return 2; }
  [[nodiscard]] std::size_t obs_dim(std::size_t) const override { return 6; }
  [[nodiscard]] std::size_t noise_dim(std::size_t) const override { return 2; }
  [[nodiscard]] double action_scale(std::size_t player) const override;

  Var transition(Tape& tape, Var state, std::span<const Var> actions) const override;
  Var observe(Tape& tape, Var state, std::size_t player,
              std::span<const double> noise) const override;
  Var reward(Tape& tape, Var state, std::size_t player) const override;
  Var task_reward(Tape& tape, Var state, std::size_t player) const override;
  [[nodiscard]] double observation_log_density(std::span<const double> state, std::size_t player,
                                               std::span<const double> obs) const override;
  [[nodiscard]] std::vector<double> sample_initial(Rng& rng) const override;
  [[nodiscard]] std::optional<std::size_t> position_offset(std::size_t player) const override {
    return blocks::kBlock * player;
  }

  [[nodiscard]] const ScenarioConfig& config() const { return config_; }

  /// Variance of `target`'s observed position as seen by `observer`.
  virtual Var observation_variance(Tape& tape, Var state, std::size_t observer,
                                   std::size_t target) const;
  /// Penalties (boundary, obstacles) subtracted from the task reward.
  virtual Var penalty(Tape& tape, Var state, std::size_t player) const;

 protected:
  [[nodiscard]] blocks::FovParams fov_params() const;
  ScenarioConfig config_;
};

/// Tag with circular obstacles that occlude sight lines and penalize contact.
class HideSeekGame : public TagGame {
 public:
  explicit HideSeekGame(ScenarioConfig config);

  [[nodiscard]] std::string name() const override { return "hideseek"; }
  Var observation_variance(Tape& tape, Var state, std::size_t observer,
                           std::size_t target) const override;
  Var penalty(Tape& tape, Var state, std::size_t player) const override;

  /// Smooth minimum over obstacles of (sight-line distance - radius).
  Var clearance(Tape& tape, Var from, Var to) const;
};

/// Cycle of pursuit-evasion pairs. Players 0..N/2-1 are pursuers P_i, players
/// N/2..N-1 are evaders E_i; P_i chases E_i while E_i flees P_{i+1}.
class TagChainGame : public Game {
 public:
  explicit TagChainGame(ScenarioConfig config);

  [[nodiscard]] std::string name() const override { return "tagchain"; }
  [[nodiscard]] std::size_t num_players() const override { return players_; }
  [[nodiscard]] std::size_t state_dim() const override { return blocks::kBlock * players_; }
  [[nodiscard]] std::size_t action_dim(std::size_t) const override { return 2; }
  [[nodiscard]] std::size_t obs_dim(std::size_t) const override { return 4 + 2 * (players_ - 1); }
  [[nodiscard]] std::size_t noise_dim(std::size_t) const override { return 2 * (players_ - 1); }
  [[nodiscard]] double action_scale(std::size_t player) const override;

  Var transition(Tape& tape, Var state, std::span<const Var> actions) const override;
  Var observe(Tape& tape, Var state, std::size_t player,
              std::span<const double> noise) const override;
  Var reward(Tape& tape, Var state, std::size_t player) const override;
  Var task_reward(Tape& tape, Var state, std::size_t player) const override;
  [[nodiscard]] double observation_log_density(std::span<const double> state, std::size_t player,
                                               std::span<const double> obs) const override;
  [[nodiscard]] std::vector<double> sample_initial(Rng& rng) const override;
  [[nodiscard]] std::optional<std::size_t> position_offset(std::size_t player) const override {
    return blocks::kBlock * player;
  }

  [[nodiscard]] bool is_pursuer(std::size_t player) const { return player < players_ / 2; }
  /// The player whose distance drives `player`'s reward.
  [[nodiscard]] std::size_t counterpart(std::size_t player) const;

 private:
  ScenarioConfig config_;
  std::size_t players_;
};

/// Greedy loader P1 (player 0) and station-assisted P2 (player 1) in [0,1]^2.
class WarehouseGame : public Game {
 public:
  WarehouseGame(ScenarioConfig config, std::vector<Point> tasks);

  [[nodiscard]] std::string name() const override { return "warehouse"; }
  [[nodiscard]] std::size_t num_players() const override { return 2; }
  [[nodiscard]] std::size_t state_dim() const override { return 8; }
  [[nodiscard]] std::size_t action_dim(std::size_t) const override { return 2; }
  /// P1 sees its own position; P2 sees its own position and P1's.
  [[nodiscard]] std::size_t obs_dim(std::size_t player) const override {
    return player == 0 ? 2 : 4;
  }
  [[nodiscard]] std::size_t noise_dim(std::size_t player) const override {
    return player == 0 ? 0 : 2;
  }
  [[nodiscard]] double action_scale(std::size_t player) const override;

  Var transition(Tape& tape, Var state, std::span<const Var> actions) const override;
  Var observe(Tape& tape, Var state, std::size_t player,
              std::span<const double> noise) const override;
  Var reward(Tape& tape, Var state, std::size_t player) const override;
  [[nodiscard]] double observation_log_density(std::span<const double> state, std::size_t player,
                                               std::span<const double> obs) const override;
  [[nodiscard]] std::vector<double> sample_initial(Rng& rng) const override;
  [[nodiscard]] std::optional<std::size_t> position_offset(std::size_t player) const override {
    return blocks::kBlock * player;
  }

  /// eta1 |p1 - s| + eta2 |p2 - s|.
  Var noise_scale(Tape& tape, Var state) const;
  [[nodiscard]] const std::vector<Point>& tasks() const { return tasks_; }
  [[nodiscard]] const ScenarioConfig& config() const { return config_; }

 private:
  ScenarioConfig config_;
  std::vector<Point> tasks_;
};

/// Task locations uniform in [0,1]^2.
std::vector<Point> sample_tasks(std::size_t count, Rng& rng);

/// Builds the scenario named in `config`. Warehouse tasks not fixed in the
/// config are drawn from `episode_seed`.
std::unique_ptr<Game> make_game(const ScenarioConfig& config, std::uint64_t episode_seed = 0);

/// Scenario defaults for per-player velocity and acceleration limits.
std::vector<double> default_v_max(const std::string& scenario, std::size_t players);

}  // namespace posg
