#include "posg/solver/solver.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace posg {

std::vector<double> draw_rollout_noise(const Game& game, std::uint64_t seed) {
  Rng rng(seed);
  return standard_normals(rng, game.horizon().future * game.total_noise_dim());
}

std::vector<Var> rollout(const Game& game, Tape& tape, std::span<const double> state,
                         std::span<const double> history, std::span<const PolicyVars> policies,
                         std::span<const double> noise, RolloutSample* sample) {
  const std::size_t n = game.num_players();
  const std::size_t steps = game.horizon().future;
  const std::size_t total_noise = game.total_noise_dim();
  if (policies.size() != n) {
    throw std::invalid_argument("rollout: one policy per player required");
  }
  if (noise.size() != steps * total_noise) {
    throw std::invalid_argument("rollout: noise must cover T_future steps for every player");
  }

  Var x = tape.constant(state);
  std::vector<Var> windows(n);
  std::vector<Var> frozen(n);
  for (std::size_t i = 0; i < n; ++i) {
    windows[i] = tape.constant(history.subspan(game.window_offset(i), game.window_size(i)));
    if (policies[i].params->mode() == GatherMode::Passive) {
      frozen[i] = policy_outputs(tape, policies[i], windows[i]);
    }
  }
  std::vector<Var> costs(n);
  for (std::size_t i = 0; i < n; ++i) {
    costs[i] = tape.constant(0.0);
  }
  if (sample) {
    sample->states.assign(1, std::vector<double>(state.begin(), state.end()));
    sample->actions.clear();
    sample->observations.clear();
    sample->noise.assign(noise.begin(), noise.end());
  }

  std::vector<Var> actions(n);
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      if (policies[i].params->mode() == GatherMode::Passive) {
        const std::size_t dim = policies[i].params->action_dim();
        actions[i] = tape.slice(frozen[i], t * dim, dim);
      } else {
        actions[i] = policy_forward(tape, policies[i], windows[i], t);
      }
    }
    x = game.transition(tape, x, actions);
    std::size_t noise_off = t * total_noise;
    std::vector<Var> obs(n);
    for (std::size_t i = 0; i < n; ++i) {
      costs[i] = costs[i] - game.reward(tape, x, i);
      const std::size_t nd = game.noise_dim(i);
      obs[i] = game.observe(tape, x, i, noise.subspan(noise_off, nd));
      noise_off += nd;
      const std::size_t size = game.window_size(i);
      const std::size_t dim = game.obs_dim(i);
      if (size == 0) {
        continue;
      }
      windows[i] = size == dim ? obs[i]
                               : tape.concat({tape.slice(windows[i], dim, size - dim), obs[i]});
    }
    if (sample) {
      auto xs = x.value();
      sample->states.emplace_back(xs.begin(), xs.end());
      auto& a_row = sample->actions.emplace_back();
      auto& z_row = sample->observations.emplace_back();
      for (std::size_t i = 0; i < n; ++i) {
        auto a = actions[i].value();
        auto z = obs[i].value();
        a_row.emplace_back(a.begin(), a.end());
        z_row.emplace_back(z.begin(), z.end());
      }
    }
  }
  if (sample) {
    sample->costs.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      sample->costs[i] = costs[i].scalar();
    }
  }
  return costs;
}

RolloutSample rollout_sample(const Game& game, std::span<const double> state,
                             std::span<const double> history, const JointPolicy& policy,
                             std::span<const double> noise) {
  Tape tape;
  std::vector<PolicyVars> vars;
  for (const PolicyParams& p : policy) {
    vars.push_back(lift_policy(tape, p, false));
  }
  RolloutSample sample;
  rollout(game, tape, state, history, vars, noise, &sample);
  return sample;
}

RolloutBatch make_batch(const ParticleSet& particles, std::size_t k_batch, Rng& rng) {
  RolloutBatch batch;
  batch.particles = sample_batch(particles, k_batch, rng);
  batch.noise_seeds.resize(k_batch);
  for (auto& s : batch.noise_seeds) {
    s = rng();
  }
  return batch;
}

namespace {

struct Workspace {
  Tape tape;
  std::vector<PolicyVars> policies;
  std::size_t mark = 0;
};

void prepare(Workspace& w, const JointPolicy& policy, std::optional<std::size_t> trainable) {
  w.tape.clear();
  w.policies.clear();
  for (std::size_t i = 0; i < policy.size(); ++i) {
    w.policies.push_back(lift_policy(w.tape, policy[i], trainable && *trainable == i));
  }
  w.mark = w.tape.node_count();
}

// Runs rollout j of the batch; writes every player's cost and, when
// `grad` is non-empty, the trainable player's gradient.
void run_one(const Game& game, const ParticleSet& particles, const RolloutBatch& batch,
             std::size_t j, Workspace& w, std::optional<std::size_t> trainable,
             std::span<double> costs, std::span<double> grad) {
  w.tape.truncate(w.mark);
  const std::size_t k = batch.particles[j];
  const std::vector<double> noise = draw_rollout_noise(game, batch.noise_seeds[j]);
  std::vector<Var> c =
      rollout(game, w.tape, particles.state(k), particles.history(k), w.policies, noise);
  for (std::size_t i = 0; i < c.size(); ++i) {
    costs[i] = c[i].scalar();
  }
  if (trainable && !grad.empty()) {
    std::fill(grad.begin(), grad.end(), 0.0);
    if (w.tape.needs_grad(c[*trainable])) {
      w.tape.backward(c[*trainable]);
      accumulate_gradient(w.policies[*trainable], grad);
    }
  }
}

// Per-rollout results are stored then reduced in batch order so the
// parallel and serial paths agree bit for bit.
void run_batch(const Game& game, const ParticleSet& particles, const JointPolicy& policy,
               const RolloutBatch& batch, std::optional<std::size_t> trainable, bool parallel,
               std::vector<double>& costs, std::vector<double>& grads, std::size_t grad_size) {
  const std::size_t n = game.num_players();
  const auto count = static_cast<std::ptrdiff_t>(batch.size());
  costs.assign(batch.size() * n, 0.0);
  grads.assign(batch.size() * grad_size, 0.0);
  auto cost_span = [&](std::ptrdiff_t j) {
    return std::span<double>(costs).subspan(static_cast<std::size_t>(j) * n, n);
  };
  auto grad_span = [&](std::ptrdiff_t j) {
    return std::span<double>(grads).subspan(static_cast<std::size_t>(j) * grad_size, grad_size);
  };

  if (!parallel) {
    Workspace w;
    prepare(w, policy, trainable);
    for (std::ptrdiff_t j = 0; j < count; ++j) {
      run_one(game, particles, batch, j, w, trainable, cost_span(j), grad_span(j));
    }
    return;
  }

  std::exception_ptr error;
#pragma omp parallel
  {
    Workspace w;
    prepare(w, policy, trainable);
#pragma omp for schedule(static)
    for (std::ptrdiff_t j = 0; j < count; ++j) {
      try {
        run_one(game, particles, batch, j, w, trainable, cost_span(j), grad_span(j));
      } catch (...) {
#pragma omp critical
        if (!error) error = std::current_exception();
      }
    }
  }
  if (error) {
    std::rethrow_exception(error);
  }
}

}  // namespace

CostEstimate expected_cost(const Game& game, const ParticleSet& particles,
                           const JointPolicy& policy, std::size_t player,
                           const RolloutBatch& batch, CostOptions options) {
  if (player >= game.num_players() || policy.size() != game.num_players()) {
    throw std::invalid_argument("expected_cost: player or policy count out of range");
  }
  if (batch.size() == 0) {
    throw std::invalid_argument("expected_cost: empty batch");
  }
  const std::size_t n = game.num_players();
  const std::size_t grad_size = options.gradient ? policy[player].size() : 0;
  std::vector<double> costs;
  std::vector<double> grads;
  run_batch(game, particles, policy, batch,
            options.gradient ? std::optional<std::size_t>(player) : std::nullopt,
            options.parallel, costs, grads, grad_size);

  const double inv = 1.0 / static_cast<double>(batch.size());
  CostEstimate out;
  out.gradient.assign(grad_size, 0.0);
  for (std::size_t j = 0; j < batch.size(); ++j) {
    out.cost += costs[j * n + player];
    for (std::size_t q = 0; q < grad_size; ++q) {
      out.gradient[q] += grads[j * grad_size + q];
    }
  }
  out.cost *= inv;
  for (double& g : out.gradient) {
    g *= inv;
  }
  return out;
}

std::vector<double> expected_costs(const Game& game, const ParticleSet& particles,
                                   const JointPolicy& policy, const RolloutBatch& batch,
                                   bool parallel) {
  const std::size_t n = game.num_players();
  std::vector<double> costs;
  std::vector<double> grads;
  run_batch(game, particles, policy, batch, std::nullopt, parallel, costs, grads, 0);
  std::vector<double> out(n, 0.0);
  for (std::size_t j = 0; j < batch.size(); ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      out[i] += costs[j * n + i];
    }
  }
  for (double& c : out) {
    c /= static_cast<double>(batch.size());
  }
  return out;
}

std::vector<AdamState> make_adam_states(const JointPolicy& theta, AdamConfig config) {
  std::vector<AdamState> out;
  out.reserve(theta.size());
  for (const PolicyParams& p : theta) {
    out.emplace_back(p.size(), config);
  }
  return out;
}

EquilibriumResult calc_eq(const Game& game, const ParticleSet& particles, JointPolicy theta,
                          std::vector<AdamState>& adam, const SolverConfig& config,
                          std::uint64_t seed) {
  const std::size_t n = game.num_players();
  if (theta.size() != n) {
    throw std::invalid_argument("calc_eq: one policy per player required");
  }
  if (adam.empty()) {
    adam = make_adam_states(theta);
  }
  if (adam.size() != n) {
    throw std::invalid_argument("calc_eq: one Adam state per player required");
  }
  if (config.k_batch == 0) {
    throw std::invalid_argument("calc_eq: K_batch must be positive");
  }

  EquilibriumResult result;
  result.deltas.assign(n, 0.0);
  Rng eval_rng(derive_seed(seed, 0xe7a1));
  const RolloutBatch eval =
      make_batch(particles, config.k_eval ? config.k_eval : config.k_batch, eval_rng);
  const CostOptions cost_only{.parallel = config.parallel, .gradient = false};

  JointPolicy last_good = theta;
  std::vector<AdamState> last_adam = adam;
  auto abort_with = [&](const std::string& why) {
    result.aborted = true;
    result.diagnostic = why;
    theta = last_good;
    adam = last_adam;
  };

  try {
    result.costs = expected_costs(game, particles, theta, eval, config.parallel);
  } catch (const std::exception& e) {
    abort_with(std::string("initial cost evaluation failed: ") + e.what());
    result.theta = std::move(theta);
    return result;
  }
  if (config.record_trace) {
    for (std::size_t i = 0; i < n; ++i) {
      result.trace.push_back({0, i, result.costs[i]});
    }
  }

  for (std::size_t iter = 1; iter <= config.max_iters && !result.aborted; ++iter) {
    last_good = theta;
    last_adam = adam;
    for (std::size_t p = 0; p < n; ++p) {
      const auto start = std::chrono::steady_clock::now();
      try {
        Rng rng(derive_seed(seed, iter, p + 1));
        const RolloutBatch batch = make_batch(particles, config.k_batch, rng);
        const CostEstimate est = expected_cost(game, particles, theta, p, batch,
                                               {.parallel = config.parallel, .gradient = true});
        if (adam_step(theta[p].flat(), est.gradient, adam[p]).skipped) {
          abort_with("non-finite gradient for player " + std::to_string(p) + " at iteration " +
                     std::to_string(iter));
          break;
        }
        const double c = expected_cost(game, particles, theta, p, eval, cost_only).cost;
        if (!std::isfinite(c)) {
          abort_with("non-finite cost for player " + std::to_string(p));
          break;
        }
        result.deltas[p] = c - result.costs[p];
        result.costs[p] = c;
      } catch (const std::exception& e) {
        abort_with("player " + std::to_string(p) + " at iteration " + std::to_string(iter) +
                   ": " + e.what());
        break;
      }
      result.step_seconds.push_back(
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
      if (config.record_trace) {
        result.trace.push_back({iter, p, result.costs[p]});
      }
    }
    if (result.aborted) {
      break;
    }
    result.iterations = iter;
    bool done = true;
    for (double d : result.deltas) {
      done = done && std::abs(d) < config.eps_tol;
    }
    if (done) {
      result.converged = true;
      break;
    }
  }
  result.theta = std::move(theta);
  return result;
}

}  // namespace posg
