#include "posg/mpgp/mpgp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace posg {

std::string to_string(BrainMode mode) {
  return mode == BrainMode::Shared ? "shared" : "separate";
}

BrainMode parse_brain_mode(const std::string& text) {
  if (text == "shared") return BrainMode::Shared;
  if (text == "separate") return BrainMode::Separate;
  throw std::invalid_argument("unknown brain mode '" + text + "' (expected shared or separate)");
}

std::vector<double> TrialRecord::total_costs() const {
  std::vector<double> out(players, 0.0);
  for (const StepRow& row : rows) {
    for (std::size_t i = 0; i < players; ++i) {
      out[i] += row.costs[i];
    }
  }
  return out;
}

std::vector<EquilibriumResult> plan(AgentRuntime& agent, const Game& game,
                                    const SolverConfig& solver, std::size_t step) {
  std::vector<EquilibriumResult> out;
  out.reserve(agent.candidates.size());
  for (std::size_t p = 0; p < agent.candidates.size(); ++p) {
    Candidate& c = agent.candidates[p];
    EquilibriumResult r = calc_eq(game, agent.particles, c.theta, c.adam, solver,
                                  derive_seed(agent.seed, 100 + step, p));
    c.theta = r.theta;
    out.push_back(std::move(r));
  }
  return out;
}

ActOutcome act(WorldSim& world, const Game& game, std::span<const std::vector<double>> actions,
               const std::vector<std::vector<double>>* noise) {
  const std::size_t n = game.num_players();
  if (actions.size() != n) {
    throw std::invalid_argument("act: one action per player required");
  }
  ++world.step;
  world.state = game.step(world.state, actions);
  ActOutcome out;
  out.state = world.state;
  for (std::size_t p = 0; p < n; ++p) {
    std::vector<double> eps;
    if (noise) {
      eps = (*noise)[p];
    } else {
      Rng rng(derive_seed(world.seed, world.step, p));
      eps = standard_normals(rng, game.noise_dim(p));
    }
    out.observations.push_back(game.observe_value(world.state, p, eps));
  }
  return out;
}

std::vector<double> agent_action(const AgentRuntime& agent, const Game& game, std::size_t p) {
  std::span<const double> window =
      std::span<const double>(agent.windows).subspan(game.window_offset(p), game.window_size(p));
  return policy_action(agent.candidates.front().theta[p], window, 0);
}

namespace {

void push_window(const Game& game, std::vector<double>& windows, std::size_t p,
                 std::span<const double> z) {
  auto w = std::span<double>(windows).subspan(game.window_offset(p), game.window_size(p));
  const std::size_t dim = game.obs_dim(p);
  if (w.empty()) return;
  std::copy(w.begin() + static_cast<std::ptrdiff_t>(dim), w.end(), w.begin());
  std::copy(z.begin(), z.end(), w.end() - static_cast<std::ptrdiff_t>(dim));
}

void propagate_blocks(AgentRuntime& agent, const Game& game,
                      const std::optional<Conditioning>& conditioning, double gamma,
                      std::size_t step) {
  const auto& blocks = agent.particles.partition();
  if (blocks.size() != agent.candidates.size()) {
    throw std::logic_error("particle partition does not match candidate count");
  }
  const std::uint64_t key = derive_seed(agent.seed, 200 + step);
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const std::vector<std::size_t> indices = blocks[b];
    propagate_particles(game, agent.particles, indices, agent.candidates[b].theta, conditioning,
                        {.gamma = gamma}, key);
  }
}

NormalizeOutcome finish_update(AgentRuntime& agent, std::size_t step) {
  const NormalizeOutcome out = normalize_weights(agent.particles);
  const double threshold =
      agent.resample_ess_fraction * static_cast<double>(agent.particles.size());
  if (agent.resample_ess_fraction > 0.0 && effective_sample_size(agent.particles) < threshold) {
    Rng rng(derive_seed(agent.seed, 300 + step));
    systematic_resample(agent.particles, rng);
    ++agent.resamples;
  }
  return out;
}

}  // namespace

NormalizeOutcome update_beliefs(AgentRuntime& agent, const Game& game,
                                std::span<const double> own_observation, std::size_t step) {
  if (!agent.player) {
    throw std::invalid_argument("update_beliefs: shared brain needs every observation");
  }
  const std::size_t p = *agent.player;
  propagate_blocks(agent, game, Conditioning{p, own_observation}, agent.gamma, step);
  push_window(game, agent.windows, p, own_observation);
  return finish_update(agent, step);
}

NormalizeOutcome update_beliefs_shared(AgentRuntime& agent, const Game& game,
                                       std::span<const std::vector<double>> observations,
                                       std::size_t step) {
  propagate_blocks(agent, game, std::nullopt, 0.0, step);
  for (std::size_t p = 0; p < observations.size(); ++p) {
    push_window(game, agent.windows, p, observations[p]);
  }
  return finish_update(agent, step);
}

Episode::Episode(const Game& game, MpgpConfig config, std::uint64_t seed)
    : game_(game), config_(std::move(config)) {
  const std::size_t n = game.num_players();
  if (config_.gather.empty()) config_.gather.assign(n, GatherMode::Active);
  if (config_.n_eq.empty()) config_.n_eq.assign(n, 1);
  if (config_.gather.size() != n || config_.n_eq.size() != n) {
    throw std::invalid_argument("episode: gather and n_eq need one entry per player");
  }

  world_.seed = derive_seed(seed, 1);
  Rng world_init(derive_seed(seed, 2));
  world_.state = game.sample_initial(world_init);

  record_.scenario = game.name();
  record_.mode = config_.mode;
  record_.seed = seed;
  record_.players = n;
  record_.initial_state = world_.state;

  auto make_agent = [&](std::optional<std::size_t> player, std::size_t n_eq, double gamma) {
    AgentRuntime a;
    a.player = player;
    a.gamma = gamma;
    a.resample_ess_fraction = config_.resample_ess_fraction;
    const std::uint64_t slot =
        (player && !config_.common_agent_seeds) ? static_cast<std::uint64_t>(*player) + 1 : 0;
    a.seed = derive_seed(seed, 3, slot);
    Rng rng(derive_seed(a.seed, 10));
    a.particles = init_particles(game, config_.k_all, n_eq, rng);
    for (std::size_t p = 0; p < n_eq; ++p) {
      Candidate c;
      c.theta = init_joint_policy(game, config_.gather, derive_seed(a.seed, 11, p), config_.hidden);
      c.adam = make_adam_states(c.theta, config_.adam);
      a.candidates.push_back(std::move(c));
    }
    a.windows.assign(game.history_dim(), 0.0);
    return a;
  };

  if (config_.mode == BrainMode::Shared) {
    agents_.push_back(make_agent(std::nullopt, config_.n_eq[0], 0.0));
  } else {
    for (std::size_t p = 0; p < n; ++p) {
      agents_.push_back(make_agent(p, config_.n_eq[p], config_.gamma));
    }
  }
}

bool Episode::done() const { return record_.aborted || world_.step >= config_.steps; }

bool Episode::step() {
  if (done()) {
    return false;
  }
  const std::size_t t = world_.step;
  const std::size_t n = game_.num_players();
  SolverConfig solver = config_.solver;
  if (t > 0 && config_.warm_iters > 0) {
    solver.max_iters = config_.warm_iters;
  }
  solver.record_trace = config_.record_first_trace && t == 0;

  StepRow row;
  row.t = t;
  double seconds = 0.0;
  std::size_t grad_steps = 0;
  for (std::size_t a = 0; a < agents_.size(); ++a) {
    std::vector<EquilibriumResult> results = plan(agents_[a], game_, solver, t);
    auto& iters = row.iterations.emplace_back();
    for (std::size_t c = 0; c < results.size(); ++c) {
      const EquilibriumResult& r = results[c];
      iters.push_back(r.iterations);
      record_.step_seconds.insert(record_.step_seconds.end(), r.step_seconds.begin(),
                                  r.step_seconds.end());
      seconds += std::accumulate(r.step_seconds.begin(), r.step_seconds.end(), 0.0);
      grad_steps += r.step_seconds.size();
      if (solver.record_trace && a == 0 && c == 0) {
        record_.first_trace = r.trace;
      }
      if (r.aborted) {
        record_.aborted = true;
        record_.diagnostic = "step " + std::to_string(t) + ", agent " + std::to_string(a) +
                             ", candidate " + std::to_string(c) + ": " + r.diagnostic;
      }
    }
  }
  if (record_.aborted) {
    return false;
  }
  row.mean_step_seconds = grad_steps ? seconds / static_cast<double>(grad_steps) : 0.0;

  for (std::size_t p = 0; p < n; ++p) {
    const AgentRuntime& owner = agents_.size() == 1 ? agents_[0] : agents_[p];
    row.actions.push_back(agent_action(owner, game_, p));
  }
  ActOutcome outcome = act(world_, game_, row.actions);

  if (config_.mode == BrainMode::Shared) {
    row.degenerate = update_beliefs_shared(agents_[0], game_, outcome.observations, t).degenerate;
  } else {
    for (std::size_t p = 0; p < n; ++p) {
      row.degenerate |= update_beliefs(agents_[p], game_, outcome.observations[p], t).degenerate;
    }
  }

  for (std::size_t a = 0; a < agents_.size(); ++a) {
    for (std::size_t j = 0; j < n; ++j) {
      const auto offset = game_.position_offset(j);
      if (!offset || (agents_[a].player && *agents_[a].player == j)) continue;
      const double value = surprisal(game_, agents_[a].particles, j,
                                     std::span<const double>(world_.state).subspan(*offset, 2));
      row.surprisal.push_back({a, j, value});
    }
  }
  if (config_.particle_dump) {
    append_particle_cloud(game_, agents_[0].particles, t, *config_.particle_dump);
  }

  row.state = world_.state;
  for (std::size_t p = 0; p < n; ++p) {
    row.costs.push_back(game_.reported_cost(world_.state, p));
  }
  record_.rows.push_back(std::move(row));
  return !done();
}

TrialRecord run_episode(const Game& game, const MpgpConfig& config, std::uint64_t seed) {
  Episode episode(game, config, seed);
  while (episode.step()) {
  }
  return episode.take_record();
}

double mean_distance(const Game& game, const TrialRecord& record, std::size_t a, std::size_t b) {
  const auto oa = game.position_offset(a);
  const auto ob = game.position_offset(b);
  if (!oa || !ob || record.rows.empty()) {
    return 0.0;
  }
  double total = 0.0;
  for (const StepRow& row : record.rows) {
    total += std::hypot(row.state[*oa] - row.state[*ob], row.state[*oa + 1] - row.state[*ob + 1]);
  }
  return total / static_cast<double>(record.rows.size());
}

}  // namespace posg
