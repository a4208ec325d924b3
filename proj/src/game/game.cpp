#include "posg/game/game.hpp"

namespace posg {

std::size_t Game::window_offset(std::size_t player) const {
  std::size_t offset = 0;
  for (std::size_t i = 0; i < player; ++i) {
    offset += window_size(i);
  }
  return offset;
}

std::size_t Game::total_noise_dim() const {
  std::size_t total = 0;
  for (std::size_t i = 0; i < num_players(); ++i) {
    total += noise_dim(i);
  }
  return total;
}

std::vector<double> Game::step(std::span<const double> state,
                               std::span<const std::vector<double>> actions) const {
  Tape tape;
  std::vector<Var> a;
  a.reserve(actions.size());
  for (const auto& action : actions) {
    a.push_back(tape.constant(action));
  }
  auto next = transition(tape, tape.constant(state), a).value();
  return {next.begin(), next.end()};
}

std::vector<double> Game::observe_value(std::span<const double> state, std::size_t player,
                                        std::span<const double> noise) const {
  Tape tape;
  auto z = observe(tape, tape.constant(state), player, noise).value();
  return {z.begin(), z.end()};
}

double Game::reward_value(std::span<const double> state, std::size_t player) const {
  Tape tape;
  return reward(tape, tape.constant(state), player).scalar();
}

double Game::reported_cost(std::span<const double> state, std::size_t player) const {
  Tape tape;
  return -task_reward(tape, tape.constant(state), player).scalar();
}

}  // namespace posg
