#include "posg/scenarios/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace posg {

namespace {

using blocks::kBlock;
using blocks::position;
using blocks::velocity;

double gaussian_log_density(double x, double mean, double variance) {
  const double d = x - mean;
  return -0.5 * (d * d / variance + std::log(2.0 * std::numbers::pi * variance));
}

double limit_for(const std::vector<double>& values, std::size_t player) {
  if (player >= values.size()) {
    throw std::out_of_range("no limit configured for player " + std::to_string(player));
  }
  return values[player];
}

void fill_limits(ScenarioConfig& config, std::size_t players) {
  if (config.v_max.empty()) {
    config.v_max = default_v_max(config.name, players);
  }
  if (config.accel_max.empty()) {
    config.accel_max = config.v_max;
  }
  if (config.v_max.size() != players || config.accel_max.size() != players) {
    throw std::invalid_argument("v_max/accel_max need one entry per player");
  }
  for (std::size_t i = 0; i < players; ++i) {
    if (!(config.v_max[i] > 0.0) || !(config.accel_max[i] > 0.0)) {
      throw std::invalid_argument("velocity and acceleration limits must be positive");
    }
  }
}

Var uav_transition(Tape& tape, Var state, std::span<const Var> actions,
                   const std::vector<double>& v_max) {
  std::vector<Var> next;
  next.reserve(actions.size());
  for (std::size_t i = 0; i < actions.size(); ++i) {
    next.push_back(
        blocks::double_integrator_step(tape, blocks::block(tape, state, i), actions[i], v_max[i]));
  }
  return tape.concat(next);
}

std::vector<double> gaussian_positions(std::size_t players, double sigma, Rng& rng) {
  std::normal_distribution<double> normal(0.0, sigma);
  std::vector<double> state(kBlock * players, 0.0);
  for (std::size_t i = 0; i < players; ++i) {
    state[kBlock * i] = normal(rng);
    state[kBlock * i + 1] = normal(rng);
  }
  return state;
}

Var distance(Tape& tape, Var state, std::size_t a, std::size_t b) {
  return tape.norm(position(tape, state, a) - position(tape, state, b));
}

double own_state_log_density(std::span<const double> state, std::size_t player,
                             std::span<const double> obs, double floor) {
  double total = 0.0;
  for (std::size_t k = 0; k < kBlock; ++k) {
    total += gaussian_log_density(obs[k], state[kBlock * player + k], floor);
  }
  return total;
}

}  // namespace

std::vector<double> default_v_max(const std::string& scenario, std::size_t players) {
  if (scenario == "warehouse") {
    return {0.15, 0.2};
  }
  // Evaders are slightly faster than pursuers.
  std::vector<double> v(players, 0.3);
  const std::size_t first_evader = scenario == "tagchain" ? players / 2 : 1;
  for (std::size_t i = first_evader; i < players; ++i) {
    v[i] = 0.375;
  }
  return v;
}

// ---------------------------------------------------------------------------
// Tag

TagGame::TagGame(ScenarioConfig config) : Game(config.horizon), config_(std::move(config)) {
  if (!(config_.play_radius > 0.0) || !(config_.fov > 0.0) || !(config_.sigma2_base > 0.0)) {
    throw std::invalid_argument("tag: play radius, fov and base variance must be positive");
  }
  fill_limits(config_, 2);
}

double TagGame::action_scale(std::size_t player) const {
  return limit_for(config_.accel_max, player);
}

blocks::FovParams TagGame::fov_params() const {
  return {config_.fov, config_.sigma2_base, config_.c_scale, config_.play_radius};
}

Var TagGame::transition(Tape& tape, Var state, std::span<const Var> actions) const {
  return uav_transition(tape, state, actions, config_.v_max);
}

Var TagGame::observation_variance(Tape& tape, Var state, std::size_t observer,
                                  std::size_t target) const {
  return blocks::fov_observation_variance(tape, state, observer, target, fov_params());
}

Var TagGame::observe(Tape& tape, Var state, std::size_t player,
                     std::span<const double> noise) const {
  const std::size_t other = 1 - player;
  Var variance = observation_variance(tape, state, player, other);
  Var raw = tape.reparam(position(tape, state, other), tape.sqrt(variance), noise);
  Var seen = blocks::trim_to_disc(tape, raw, config_.play_radius);
  return tape.concat({blocks::block(tape, state, player), seen});
}

Var TagGame::penalty(Tape& tape, Var state, std::size_t player) const {
  return blocks::boundary_penalty(tape, position(tape, state, player), config_.play_radius,
                                  config_.boundary_weight);
}

Var TagGame::task_reward(Tape& tape, Var state, std::size_t player) const {
  Var d = distance(tape, state, 0, 1);
  return player == 0 ? -d : d;
}

Var TagGame::reward(Tape& tape, Var state, std::size_t player) const {
  return task_reward(tape, state, player) - penalty(tape, state, player);
}

double TagGame::observation_log_density(std::span<const double> state, std::size_t player,
                                        std::span<const double> obs) const {
  const std::size_t other = 1 - player;
  Tape tape;
  const double variance =
      std::max(observation_variance(tape, tape.constant(state), player, other).scalar(),
               config_.obs_density_floor);
  double total = own_state_log_density(state, player, obs, config_.obs_density_floor);
  total += gaussian_log_density(obs[4], state[kBlock * other], variance);
  total += gaussian_log_density(obs[5], state[kBlock * other + 1], variance);
  return total;
}

std::vector<double> TagGame::sample_initial(Rng& rng) const {
  std::vector<double> state = gaussian_positions(2, config_.init_sigma, rng);
  if (config_.spawn == SpawnMode::TwoSpawn) {
    std::bernoulli_distribution coin(0.5);
    const Point& spawn = coin(rng) ? config_.spawn_east : config_.spawn_west;
    state[0] = spawn[0];
    state[1] = spawn[1];
  }
  return state;
}

// ---------------------------------------------------------------------------
// Hide and seek

HideSeekGame::HideSeekGame(ScenarioConfig config) : TagGame(std::move(config)) {
  for (const Obstacle& o : config_.obstacles) {
    if (!(o.radius > 0.0) ||
        std::hypot(o.center[0], o.center[1]) + o.radius > config_.play_radius) {
      throw std::invalid_argument("hideseek: obstacles must lie within the play area");
    }
  }
}

Var HideSeekGame::clearance(Tape& tape, Var from, Var to) const {
  std::vector<Var> gaps;
  gaps.reserve(config_.obstacles.size());
  for (const Obstacle& o : config_.obstacles) {
    Var center = tape.constant(o.center);
    gaps.push_back(blocks::segment_distance(tape, from, to, center) - o.radius);
  }
  return blocks::smooth_min(tape, tape.concat(gaps), config_.occlusion_sharpness);
}

Var HideSeekGame::observation_variance(Tape& tape, Var state, std::size_t observer,
                                       std::size_t target) const {
  Var base = TagGame::observation_variance(tape, state, observer, target);
  if (config_.obstacles.empty()) {
    return base;
  }
  Var gap = clearance(tape, position(tape, state, observer), position(tape, state, target));
  Var occlusion = blocks::soft_relu(tape, -gap, config_.occlusion_sharpness);
  return base + config_.c_scale * occlusion;
}

Var HideSeekGame::penalty(Tape& tape, Var state, std::size_t player) const {
  Var pos = position(tape, state, player);
  Var total = TagGame::penalty(tape, state, player);
  for (const Obstacle& o : config_.obstacles) {
    Var depth = tape.softplus(-tape.norm(pos - tape.constant(o.center)) + o.radius);
    total = total + config_.boundary_weight * tape.square(depth);
  }
  return total;
}

// ---------------------------------------------------------------------------
// Tag chain

TagChainGame::TagChainGame(ScenarioConfig config)
    : Game(config.horizon), config_(std::move(config)) {
  players_ = config_.players == 0 ? 4 : config_.players;
  if (players_ < 2 || players_ % 2 != 0) {
    throw std::invalid_argument("tagchain needs an even number of players");
  }
  fill_limits(config_, players_);
}

double TagChainGame::action_scale(std::size_t player) const {
  return limit_for(config_.accel_max, player);
}

std::size_t TagChainGame::counterpart(std::size_t player) const {
  const std::size_t half = players_ / 2;
  if (is_pursuer(player)) {
    return half + player;
  }
  return (player - half + 1) % half;
}

Var TagChainGame::transition(Tape& tape, Var state, std::span<const Var> actions) const {
  return uav_transition(tape, state, actions, config_.v_max);
}

Var TagChainGame::observe(Tape& tape, Var state, std::size_t player,
                          std::span<const double> noise) const {
  const blocks::FovParams params{config_.fov, config_.sigma2_base, config_.c_scale,
                                 config_.play_radius};
  std::vector<Var> parts{blocks::block(tape, state, player)};
  std::size_t k = 0;
  for (std::size_t j = 0; j < players_; ++j) {
    if (j == player) continue;
    parts.push_back(blocks::fov_observe(tape, state, player, j, noise.subspan(2 * k, 2), params));
    ++k;
  }
  return tape.concat(parts);
}

Var TagChainGame::task_reward(Tape& tape, Var state, std::size_t player) const {
  Var d = distance(tape, state, player, counterpart(player));
  return is_pursuer(player) ? -d : d;
}

Var TagChainGame::reward(Tape& tape, Var state, std::size_t player) const {
  Var penalty = blocks::boundary_penalty(tape, position(tape, state, player), config_.play_radius,
                                         config_.boundary_weight);
  return task_reward(tape, state, player) - penalty;
}

double TagChainGame::observation_log_density(std::span<const double> state, std::size_t player,
                                             std::span<const double> obs) const {
  const blocks::FovParams params{config_.fov, config_.sigma2_base, config_.c_scale,
                                 config_.play_radius};
  Tape tape;
  Var s = tape.constant(state);
  double total = own_state_log_density(state, player, obs, config_.obs_density_floor);
  std::size_t k = 0;
  for (std::size_t j = 0; j < players_; ++j) {
    if (j == player) continue;
    const double variance =
        std::max(blocks::fov_observation_variance(tape, s, player, j, params).scalar(),
                 config_.obs_density_floor);
    total += gaussian_log_density(obs[4 + 2 * k], state[kBlock * j], variance);
    total += gaussian_log_density(obs[5 + 2 * k], state[kBlock * j + 1], variance);
    ++k;
  }
  return total;
}

std::vector<double> TagChainGame::sample_initial(Rng& rng) const {
  return gaussian_positions(players_, config_.init_sigma, rng);
}

// ---------------------------------------------------------------------------
// Warehouse

WarehouseGame::WarehouseGame(ScenarioConfig config, std::vector<Point> tasks)
    : Game(config.horizon), config_(std::move(config)), tasks_(std::move(tasks)) {
  if (!(config_.alpha > 0.0) || !(config_.beta > 0.0) || !(config_.eta1 > 0.0) ||
      !(config_.eta2 > 0.0)) {
    throw std::invalid_argument("warehouse: alpha, beta, eta1 and eta2 must be positive");
  }
  if (tasks_.empty()) {
    throw std::invalid_argument("warehouse: at least one task location required");
  }
  fill_limits(config_, 2);
}

double WarehouseGame::action_scale(std::size_t player) const {
  return limit_for(config_.accel_max, player);
}

Var WarehouseGame::transition(Tape& tape, Var state, std::span<const Var> actions) const {
  return uav_transition(tape, state, actions, config_.v_max);
}

Var WarehouseGame::noise_scale(Tape& tape, Var state) const {
  // |v|_eps - sqrt(eps) vanishes exactly at the station.
  const double floor = std::sqrt(Tape::kNormEps);
  Var station = tape.constant(config_.station);
  Var d1 = tape.norm(position(tape, state, 0) - station) - floor;
  Var d2 = tape.norm(position(tape, state, 1) - station) - floor;
  return config_.eta1 * d1 + config_.eta2 * d2;
}

Var WarehouseGame::observe(Tape& tape, Var state, std::size_t player,
                           std::span<const double> noise) const {
  Var own = position(tape, state, player);
  if (player == 0) {
    return own;
  }
  Var other = tape.reparam(position(tape, state, 0), noise_scale(tape, state), noise);
  return tape.concat({own, other});
}

Var WarehouseGame::reward(Tape& tape, Var state, std::size_t player) const {
  Var pos = position(tape, state, player);
  std::vector<Var> kernels;
  for (const Point& task : tasks_) {
    Var sq = tape.sum(tape.square(pos - tape.constant(task)));
    kernels.push_back(tape.exp(-config_.beta * sq));
  }
  Var total = tape.sum(tape.concat(kernels));
  if (player == 1) {
    Var sq = tape.sum(tape.square(pos - position(tape, state, 0)));
    total = total - config_.alpha * tape.exp(-config_.beta * sq);
  }
  return total;
}

double WarehouseGame::observation_log_density(std::span<const double> state, std::size_t player,
                                              std::span<const double> obs) const {
  const double floor = config_.obs_density_floor;
  double total = gaussian_log_density(obs[0], state[kBlock * player], floor) +
                 gaussian_log_density(obs[1], state[kBlock * player + 1], floor);
  if (player == 1) {
    Tape tape;
    const double sigma = noise_scale(tape, tape.constant(state)).scalar();
    const double variance = std::max(sigma * sigma, floor);
    total += gaussian_log_density(obs[2], state[0], variance) +
             gaussian_log_density(obs[3], state[1], variance);
  }
  return total;
}

std::vector<double> WarehouseGame::sample_initial(Rng& rng) const {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> state(8, 0.0);
  for (std::size_t i = 0; i < 2; ++i) {
    state[kBlock * i] = unit(rng);
    state[kBlock * i + 1] = unit(rng);
  }
  return state;
}

std::vector<Point> sample_tasks(std::size_t count, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Point> tasks(count);
  for (auto& t : tasks) {
    t[0] = unit(rng);
    t[1] = unit(rng);
  }
  return tasks;
}

std::unique_ptr<Game> make_game(const ScenarioConfig& config, std::uint64_t episode_seed) {
  if (config.name == "tag") {
    return std::make_unique<TagGame>(config);
  }
  if (config.name == "hideseek") {
    return std::make_unique<HideSeekGame>(config);
  }
  if (config.name == "tagchain") {
    return std::make_unique<TagChainGame>(config);
  }
  if (config.name == "warehouse") {
    std::vector<Point> tasks = config.tasks;
    if (tasks.empty()) {
      Rng rng(derive_seed(episode_seed, 0x7a5c));
      tasks = sample_tasks(config.task_count, rng);
    }
    return std::make_unique<WarehouseGame>(config, std::move(tasks));
  }
  throw std::invalid_argument("unknown scenario '" + config.name + "'");
}

}  // namespace posg
