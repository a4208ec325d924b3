#include "posg/beliefs/particles.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>

namespace posg {

ParticleSet::ParticleSet(std::size_t count, std::size_t state_dim, std::size_t history_dim)
    : state_dim_(state_dim),
      history_dim_(history_dim),
      states_(count * state_dim, 0.0),
      histories_(count * history_dim, 0.0),
      weights_(count, count > 0 ? 1.0 / static_cast<double>(count) : 0.0),
      partition_(round_robin_partition(count, 1)) {}

void ParticleSet::set_partition(std::vector<std::vector<std::size_t>> blocks) {
  std::vector<int> seen(size(), 0);
  for (const auto& b : blocks) {
    for (std::size_t k : b) {
      if (k >= size() || seen[k]++ > 0) {
        throw std::invalid_argument("partition blocks must be disjoint indices into the set");
      }
    }
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end()) {
    throw std::invalid_argument("partition blocks must cover every particle");
  }
  partition_ = std::move(blocks);
}

std::vector<std::vector<std::size_t>> round_robin_partition(std::size_t count,
                                                            std::size_t blocks) {
  if (blocks == 0) {
    throw std::invalid_argument("partition needs at least one block");
  }
  std::vector<std::vector<std::size_t>> out(blocks);
  for (std::size_t k = 0; k < count; ++k) {
    out[k % blocks].push_back(k);
  }
  return out;
}

ParticleSet init_particles(const Game& game, std::size_t count, std::size_t n_eq, Rng& rng) {
  if (n_eq == 0 || count < n_eq) {
    throw std::invalid_argument("init_particles: need K_all >= N_eq >= 1");
  }
  ParticleSet particles(count, game.state_dim(), game.history_dim());
  for (std::size_t k = 0; k < count; ++k) {
    const std::vector<double> x = game.sample_initial(rng);
    std::copy(x.begin(), x.end(), particles.state(k).begin());
  }
  particles.set_partition(round_robin_partition(count, n_eq));
  return particles;
}

std::vector<std::size_t> sample_batch(const ParticleSet& particles, std::size_t k, Rng& rng) {
  auto w = particles.weights();
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  if (!(total > 0.0)) {
    throw std::invalid_argument("sample_batch: total particle weight is zero");
  }
  std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
  std::vector<std::size_t> out(k);
  for (auto& idx : out) {
    idx = pick(rng);
  }
  return out;
}

namespace {

struct Scratch {
  ad::Tape tape;
  std::vector<PolicyVars> policies;
  std::size_t mark = 0;
};

void init_scratch(Scratch& s, const JointPolicy& policy) {
  s.tape.clear();
  s.policies.clear();
  for (const PolicyParams& p : policy) {
    s.policies.push_back(lift_policy(s.tape, p, false));
  }
  s.mark = s.tape.node_count();
}

void propagate_one(const Game& game, ParticleSet& particles, std::size_t k, Scratch& s,
                   const std::optional<Conditioning>& conditioning, double gamma,
                   std::uint64_t stream_key) {
  const std::size_t n = game.num_players();
  Rng rng(derive_seed(stream_key, k));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double coin = unit(rng);
  std::vector<std::vector<double>> noise(n);
  for (std::size_t i = 0; i < n; ++i) {
    noise[i] = standard_normals(rng, game.noise_dim(i));
  }

  ad::Tape& tape = s.tape;
  tape.truncate(s.mark);
  auto history = particles.history(k);
  Var state = tape.constant(particles.state(k));
  std::vector<Var> actions;
  actions.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Var window = tape.constant(history.subspan(game.window_offset(i), game.window_size(i)));
    actions.push_back(policy_forward(tape, s.policies[i], window, 0));
  }
  Var next = game.transition(tape, state, actions);
  auto next_value = next.value();
  std::copy(next_value.begin(), next_value.end(), particles.state(k).begin());

  for (std::size_t i = 0; i < n; ++i) {
    std::span<const double> z = game.observe(tape, next, i, noise[i]).value();
    if (conditioning && conditioning->player == i && coin < gamma) {
      z = conditioning->observation;
      particles.weights()[k] *=
          std::exp(game.observation_log_density(particles.state(k), i, z));
    }
    auto window = history.subspan(game.window_offset(i), game.window_size(i));
    const std::size_t dim = game.obs_dim(i);
    std::copy(window.begin() + static_cast<std::ptrdiff_t>(dim), window.end(), window.begin());
    std::copy(z.begin(), z.end(), window.end() - static_cast<std::ptrdiff_t>(dim));
  }
}

}  // namespace

void propagate_particles(const Game& game, ParticleSet& particles,
                         std::span<const std::size_t> indices, const JointPolicy& policy,
                         const std::optional<Conditioning>& conditioning,
                         const UpdateOptions& options, std::uint64_t stream_key) {
  if (options.gamma < 0.0 || options.gamma > 1.0) {
    throw std::invalid_argument("update_particles: gamma must lie in [0, 1]");
  }
  if (policy.size() != game.num_players()) {
    throw std::invalid_argument("update_particles: one policy per player required");
  }
  if (conditioning && conditioning->observation.size() != game.obs_dim(conditioning->player)) {
    throw std::invalid_argument("update_particles: conditioning observation has wrong size");
  }
  const double gamma = conditioning ? options.gamma : 0.0;
  const auto count = static_cast<std::ptrdiff_t>(indices.size());

  if (!options.parallel) {
    Scratch s;
    init_scratch(s, policy);
    for (std::ptrdiff_t j = 0; j < count; ++j) {
      propagate_one(game, particles, indices[j], s, conditioning, gamma, stream_key);
    }
    return;
  }

#pragma omp parallel
  {
    Scratch s;
    init_scratch(s, policy);
#pragma omp for schedule(static)
    for (std::ptrdiff_t j = 0; j < count; ++j) {
      propagate_one(game, particles, indices[j], s, conditioning, gamma, stream_key);
    }
  }
}

NormalizeOutcome normalize_weights(ParticleSet& particles) {
  auto w = particles.weights();
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  if (!(total >= 1e-300) || !std::isfinite(total)) {
    std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(w.size()));
    return {.degenerate = true};
  }
  for (double& x : w) {
    x /= total;
  }
  return {};
}

NormalizeOutcome update_particles(const Game& game, ParticleSet& particles,
                                  const std::optional<Conditioning>& conditioning,
                                  const JointPolicy& policy, UpdateOptions options,
                                  std::uint64_t stream_key) {
  std::vector<std::size_t> all(particles.size());
  std::iota(all.begin(), all.end(), 0);
  propagate_particles(game, particles, all, policy, conditioning, options, stream_key);
  return normalize_weights(particles);
}

double effective_sample_size(const ParticleSet& particles) {
  double sum = 0.0;
  double sq = 0.0;
  for (double w : particles.weights()) {
    sum += w;
    sq += w * w;
  }
  return sq > 0.0 ? sum * sum / sq : 0.0;
}

void systematic_resample(ParticleSet& particles, Rng& rng) {
  const std::size_t n = particles.size();
  auto w = particles.weights();
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double step = total / static_cast<double>(n);
  double u = unit(rng) * step;
  std::vector<std::size_t> source(n);
  double cumulative = w[0];
  std::size_t j = 0;
  for (std::size_t k = 0; k < n; ++k) {
    while (u > cumulative && j + 1 < n) {
      cumulative += w[++j];
    }
    source[k] = j;
    u += step;
  }
  ParticleSet copy = particles;
  for (std::size_t k = 0; k < n; ++k) {
    auto from_state = copy.state(source[k]);
    auto from_history = copy.history(source[k]);
    std::copy(from_state.begin(), from_state.end(), particles.state(k).begin());
    std::copy(from_history.begin(), from_history.end(), particles.history(k).begin());
  }
  std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(n));
}

GaussianSummary gaussian_summary(const Game& game, const ParticleSet& particles,
                                 std::size_t player) {
  const auto offset = game.position_offset(player);
  if (!offset) {
    throw std::invalid_argument("gaussian_summary: game has no planar position for player");
  }
  auto w = particles.weights();
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  GaussianSummary g;
  for (std::size_t k = 0; k < particles.size(); ++k) {
    auto s = particles.state(k);
    g.mean[0] += w[k] * s[*offset];
    g.mean[1] += w[k] * s[*offset + 1];
  }
  g.mean[0] /= total;
  g.mean[1] /= total;
  for (std::size_t k = 0; k < particles.size(); ++k) {
    auto s = particles.state(k);
    const double dx = s[*offset] - g.mean[0];
    const double dy = s[*offset + 1] - g.mean[1];
    g.covariance[0] += w[k] * dx * dx;
    g.covariance[1] += w[k] * dx * dy;
    g.covariance[3] += w[k] * dy * dy;
  }
  for (double& c : g.covariance) {
    c /= total;
  }
  g.covariance[2] = g.covariance[1];
  g.covariance[0] += kSummaryRegularization;
  g.covariance[3] += kSummaryRegularization;
  return g;
}

double surprisal(const GaussianSummary& g, std::span<const double> true_position) {
  const double a = g.covariance[0];
  const double b = g.covariance[1];
  const double d = g.covariance[3];
  const double det = a * d - b * b;
  const double dx = true_position[0] - g.mean[0];
  const double dy = true_position[1] - g.mean[1];
  const double mahalanobis = (d * dx * dx - 2.0 * b * dx * dy + a * dy * dy) / det;
  return std::log(2.0 * std::numbers::pi) + 0.5 * std::log(det) + 0.5 * mahalanobis;
}

double surprisal(const Game& game, const ParticleSet& particles, std::size_t player,
                 std::span<const double> true_position) {
  return surprisal(gaussian_summary(game, particles, player), true_position);
}

void append_particle_cloud(const Game& game, const ParticleSet& particles, std::size_t step,
                           const std::filesystem::path& path) {
  const bool fresh = !std::filesystem::exists(path);
  std::ofstream out(path, std::ios::app);
  if (!out) {
    throw std::runtime_error("cannot write particle cloud " + path.string());
  }
  out.precision(17);
  if (fresh) {
    out << "step particle player x y weight\n";
  }
  for (std::size_t k = 0; k < particles.size(); ++k) {
    for (std::size_t i = 0; i < game.num_players(); ++i) {
      const auto offset = game.position_offset(i);
      if (!offset) continue;
      auto s = particles.state(k);
      out << step << ' ' << k << ' ' << i << ' ' << s[*offset] << ' ' << s[*offset + 1] << ' '
          << particles.weights()[k] << '\n';
    }
  }
}

}  // namespace posg
