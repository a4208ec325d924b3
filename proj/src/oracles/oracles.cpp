#include "posg/oracles/oracles.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include <boost/math/distributions/normal.hpp>

#include "posg/beliefs/particles.hpp"
#include "posg/policy/policy.hpp"
#include "posg/solver/solver.hpp"

namespace posg::oracles {
namespace {

// Policy whose parameters are theta0 + U p, assembled from slices of one Var.
PolicyVars projected_policy(Tape& tape, const PolicyParams& params, Var flat) {
  PolicyVars vars;
  vars.params = &params;
  std::size_t offset = 0;
  for (const LayerShape& l : params.layers()) {
    vars.weights.push_back(tape.reshape(
        tape.slice(flat, offset, l.weight_count()),
        ad::Shape{static_cast<std::uint32_t>(l.out), static_cast<std::uint32_t>(l.in)}));
    offset += l.weight_count();
    vars.biases.push_back(tape.slice(flat, offset, l.out));
    offset += l.out;
  }
  return vars;
}

}  // namespace

GradcheckReport gradcheck_scenario(const ScenarioConfig& config, std::size_t programs,
                                   std::uint64_t seed, std::size_t directions,
                                   std::vector<std::size_t> hidden, double h) {
  const auto start = std::chrono::steady_clock::now();
  GradcheckReport report;
  report.scenario = config.name;
  report.programs = programs;
  report.directions = directions;
  std::normal_distribution<double> normal(0.0, 1.0);

  for (std::size_t prog = 0; prog < programs; ++prog) {
    Rng rng(derive_seed(seed, prog));
    const auto game = make_game(config, derive_seed(seed, prog, 1));
    const std::size_t n = game->num_players();

    std::vector<double> state = game->sample_initial(rng);
    for (double& x : state) x += 0.1 * normal(rng);
    std::vector<double> history(game->history_dim());
    for (double& x : history) x = 0.5 * normal(rng);

    std::vector<GatherMode> modes(n);
    for (auto& m : modes) m = (rng() & 1) ? GatherMode::Active : GatherMode::Passive;
    JointPolicy theta = init_joint_policy(*game, modes, rng(), hidden);
    for (PolicyParams& p : theta) {
      for (double& w : p.flat()) w += 0.1 * normal(rng);
    }
    const std::size_t player = static_cast<std::size_t>(rng() % n);
    const std::vector<double> noise = draw_rollout_noise(*game, rng());

    const std::size_t size = theta[player].size();
    std::vector<double> basis(size * directions);
    for (double& u : basis) u = normal(rng) / std::sqrt(static_cast<double>(directions));

    ad::ScalarProgram program = [&](Tape& tape, Var p) {
      Var u = tape.lift(basis, ad::Shape{static_cast<std::uint32_t>(size),
                                         static_cast<std::uint32_t>(directions)});
      Var flat = tape.constant(theta[player].flat()) + tape.matvec(u, p);
      std::vector<PolicyVars> vars;
      for (std::size_t i = 0; i < n; ++i) {
        vars.push_back(i == player ? projected_policy(tape, theta[i], flat)
                                   : lift_policy(tape, theta[i], false));
      }
      return rollout(*game, tape, state, history, vars, noise)[player];
    };
    const std::vector<double> origin(directions, 0.0);
    report.max_error = std::max(report.max_error, ad::grad_check(program, origin, h));
  }
  report.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

BinaryFlipGame::BinaryFlipGame(double prior_one, double accuracy, Horizon horizon)
    : Game(horizon), prior_one_(prior_one), accuracy_(accuracy) {
  if (prior_one < 0.0 || prior_one > 1.0 || !(accuracy > 0.0) || !(accuracy < 1.0)) {
    throw std::invalid_argument("binaryflip: prior in [0,1] and accuracy in (0,1) required");
  }
  flip_threshold_ = boost::math::quantile(boost::math::normal(), 1.0 - accuracy);
}

Var BinaryFlipGame::transition(Tape& tape, Var state, std::span<const Var>) const {
  return tape.add_const(tape.scale(state, -1.0), 1.0);
}

Var BinaryFlipGame::observe(Tape& tape, Var state, std::size_t,
                            std::span<const double> noise) const {
  if (noise[0] < flip_threshold_) {
    return tape.add_const(tape.scale(state, -1.0), 1.0);
  }
  return tape.scale(state, 1.0);
}

Var BinaryFlipGame::reward(Tape& tape, Var state, std::size_t) const {
  return tape.scale(tape.sum(state), 0.0);
}

double BinaryFlipGame::observation_log_density(std::span<const double> state, std::size_t,
                                               std::span<const double> obs) const {
  const bool correct = std::abs(obs[0] - state[0]) < 0.5;
  return std::log(correct ? accuracy_ : 1.0 - accuracy_);
}

std::vector<double> BinaryFlipGame::sample_initial(Rng& rng) const {
  std::bernoulli_distribution one(prior_one_);
  return {one(rng) ? 1.0 : 0.0};
}

std::vector<double> exact_posterior(double prior_one, double accuracy,
                                    const std::vector<int>& observations) {
  std::vector<double> out;
  double p = prior_one;
  for (int z : observations) {
    p = 1.0 - p;
    const double like_one = z == 1 ? accuracy : 1.0 - accuracy;
    const double like_zero = z == 0 ? accuracy : 1.0 - accuracy;
    p = p * like_one / (p * like_one + (1.0 - p) * like_zero);
    out.push_back(p);
  }
  return out;
}

BeliefCheckReport belief_check(std::size_t particles, std::size_t steps, std::uint64_t seed,
                               double gamma) {
  const auto start = std::chrono::steady_clock::now();
  const BinaryFlipGame game;
  Rng world_rng(derive_seed(seed, 1));
  std::vector<double> x = game.sample_initial(world_rng);

  Rng particle_rng(derive_seed(seed, 2));
  ParticleSet set = init_particles(game, particles, 1, particle_rng);
  const std::vector<std::size_t> no_hidden;
  const JointPolicy policy{init_policy(game, 0, GatherMode::Active, seed, no_hidden)};

  BeliefCheckReport report;
  for (std::size_t t = 0; t < steps; ++t) {
    x[0] = 1.0 - x[0];
    const std::vector<double> eps = standard_normals(world_rng, 1);
    const std::vector<double> z = game.observe_value(x, 0, eps);
    report.observations.push_back(z[0] > 0.5 ? 1 : 0);
    update_particles(game, set, Conditioning{0, z}, policy, {.gamma = gamma},
                     derive_seed(seed, 100 + t));
    double one = 0.0;
    for (std::size_t k = 0; k < set.size(); ++k) {
      if (set.state(k)[0] > 0.5) one += set.weights()[k];
    }
    report.particle.push_back(one);
  }
  report.exact = exact_posterior(game.prior_one(), game.accuracy(), report.observations);
  for (std::size_t t = 0; t < steps; ++t) {
    report.max_tv = std::max(report.max_tv, std::abs(report.particle[t] - report.exact[t]));
  }
  report.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace posg::oracles
