#pragma once

// Small hand-analyzable games assembled from callables.

#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include "posg/game/game.hpp"
#include "posg/policy/policy.hpp"

namespace posg::testing {

struct ToySpec {
  std::size_t players = 1;
  std::size_t state_dim = 1;
  std::size_t action_dim = 1;
  std::size_t obs_dim = 1;
  std::size_t noise_dim = 0;
  double scale = 5.0;
  Horizon horizon{0, 1};
  std::function<Var(Tape&, Var, std::span<const Var>)> transition;
  std::function<Var(Tape&, Var, std::size_t, std::span<const double>)> observe;
  std::function<Var(Tape&, Var, std::size_t)> reward;
  std::function<std::vector<double>(Rng&)> initial;
  double obs_sigma = 1.0;  // density used for reweighting: N(observe(x, 0), obs_sigma^2)
};

class ToyGame : public Game {
 public:
  explicit ToyGame(ToySpec spec) : Game(spec.horizon), s_(std::move(spec)) {}

  [[nodiscard]] std::string name() const override { return "toy"; }
  [[nodiscard]] std::size_t num_players() const override { return s_.players; }
  [[nodiscard]] std::size_t state_dim() const override { return s_.state_dim; }
  [[nodiscard]] std::size_t action_dim(std::size_t) const override { return s_.action_dim; }
  [[nodiscard]] std::size_t obs_dim(std::size_t) const override { return s_.obs_dim; }
  [[nodiscard]] std::size_t noise_dim(std::size_t) const override { return s_.noise_dim; }
  [[nodiscard]] double action_scale(std::size_t) const override { return s_.scale; }

  Var transition(Tape& t, Var x, std::span<const Var> a) const override {
    return s_.transition(t, x, a);
  }
  Var observe(Tape& t, Var x, std::size_t p, std::span<const double> e) const override {
    return s_.observe(t, x, p, e);
  }
  Var reward(Tape& t, Var x, std::size_t p) const override { return s_.reward(t, x, p); }
  [[nodiscard]] double observation_log_density(std::span<const double> x, std::size_t p,
                                               std::span<const double> z) const override {
    const std::vector<double> zero(s_.noise_dim, 0.0);
    const std::vector<double> mean = observe_value(x, p, zero);
    double lp = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
      const double d = (z[i] - mean[i]) / s_.obs_sigma;
      lp += -0.5 * d * d - std::log(s_.obs_sigma * std::sqrt(2.0 * std::numbers::pi));
    }
    return lp;
  }
  [[nodiscard]] std::vector<double> sample_initial(Rng& rng) const override {
    return s_.initial ? s_.initial(rng) : std::vector<double>(s_.state_dim, 0.0);
  }

 private:
  ToySpec s_;
};

/// State holds the last joint action; observation is the state.
inline ToySpec action_state_spec(std::size_t players, Horizon horizon = {0, 1}) {
  ToySpec s;
  s.players = players;
  s.state_dim = players;
  s.obs_dim = players;
  s.horizon = horizon;
  s.transition = [](Tape& t, Var, std::span<const Var> a) {
    return t.concat(std::vector<Var>(a.begin(), a.end()));
  };
  s.observe = [](Tape& t, Var x, std::size_t, std::span<const double>) { return t.scale(x, 1.0); };
  return s;
}

/// One player, reward -(a - 2)^2.
inline ToyGame quadratic_game() {
  ToySpec s = action_state_spec(1);
  s.reward = [](Tape& t, Var x, std::size_t) {
    return t.scale(t.sum(t.square(t.add_const(x, -2.0))), -1.0);
  };
  return ToyGame(s);
}

/// c1 = (a1 - a2)^2 + 0.1 a1^2, c2 = (a2 - 1)^2; Nash at (1/1.1, 1).
inline ToyGame nash_game(double scale_player0 = 1.0) {
  ToySpec s = action_state_spec(2);
  s.reward = [scale_player0](Tape& t, Var x, std::size_t p) {
    Var a1 = t.slice(x, 0, 1);
    Var a2 = t.slice(x, 1, 1);
    if (p == 0) {
      Var c = t.square(a1 - a2) + t.scale(t.square(a1), 0.1);
      return t.sum(t.scale(c, -scale_player0));
    }
    return t.sum(t.scale(t.square(t.add_const(a2, -1.0)), -1.0));
  };
  return ToyGame(s);
}

/// Constant reward -1 every step, deterministic.
inline ToyGame constant_reward_game(std::size_t future) {
  ToySpec s = action_state_spec(1, {0, future});
  s.reward = [](Tape& t, Var x, std::size_t) { return t.add_const(t.scale(t.sum(x), 0.0), -1.0); };
  return ToyGame(s);
}

/// Planar points x_i' = x_i + a_i; player i sees player i+1 with noise 0.1 eps;
/// reward -|x_i|^2 - 0.5 |x_i - x_{i+1}|^2, scaled by `scale_player0` for player 0.
inline ToyGame planar_game(std::size_t players = 1, Horizon horizon = {2, 3},
                           double scale_player0 = 1.0) {
  ToySpec s;
  s.players = players;
  s.state_dim = 2 * players;
  s.action_dim = 2;
  s.obs_dim = 2;
  s.noise_dim = 2;
  s.scale = 1.0;
  s.horizon = horizon;
  s.obs_sigma = 0.1;
  s.transition = [](Tape& t, Var x, std::span<const Var> a) {
    std::vector<Var> parts;
    for (std::size_t p = 0; p < a.size(); ++p) parts.push_back(t.slice(x, 2 * p, 2) + a[p]);
    return t.concat(parts);
  };
  s.observe = [players](Tape& t, Var x, std::size_t p, std::span<const double> e) {
    const std::size_t target = (p + 1) % players;
    return t.reparam(t.slice(x, 2 * target, 2), t.constant(0.1), e);
  };
  s.reward = [players, scale_player0](Tape& t, Var x, std::size_t p) {
    Var mine = t.slice(x, 2 * p, 2);
    Var r = t.sum(t.square(mine));
    if (players > 1) {
      Var other = t.slice(x, 2 * ((p + 1) % players), 2);
      r = r + t.scale(t.sum(t.square(mine - other)), 0.5);
    }
    return t.scale(r, p == 0 ? -scale_player0 : -1.0);
  };
  s.initial = [players](Rng& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<double> x(2 * players);
    for (double& v : x) v = n(rng);
    return x;
  };
  return ToyGame(s);
}

/// Constant policy a = scale * tanh(b): no hidden layers and zero-width input.
inline PolicyParams constant_policy(const Game& game, std::size_t player, double bias) {
  PolicyParams p(GatherMode::Active, game.window_size(player), game.action_dim(player), 1,
                 game.action_scale(player),
                 {LayerShape{game.window_size(player), game.action_dim(player)}});
  for (double& b : p.bias(0)) b = bias;
  return p;
}

}  // namespace posg::testing
