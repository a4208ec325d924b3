#pragma once

// Weighted particle approximation of the joint distribution over the current
// joint state and every player's recent observation window.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "posg/game/game.hpp"
#include "posg/policy/policy.hpp"
#include "posg/rng.hpp"

namespace posg {

class ParticleSet {
 public:
  ParticleSet() = default;
  ParticleSet(std::size_t count, std::size_t state_dim, std::size_t history_dim);

  [[nodiscard]] std::size_t size() const { return weights_.size(); }
  [[nodiscard]] std::size_t state_dim() const { return state_dim_; }
  [[nodiscard]] std::size_t history_dim() const { return history_dim_; }

  [[nodiscard]] std::span<const double> state(std::size_t k) const {
    return std::span<const double>(states_).subspan(k * state_dim_, state_dim_);
  }
  [[nodiscard]] std::span<double> state(std::size_t k) {
    return std::span<double>(states_).subspan(k * state_dim_, state_dim_);
  }
  [[nodiscard]] std::span<const double> history(std::size_t k) const {
    return std::span<const double>(histories_).subspan(k * history_dim_, history_dim_);
  }
  [[nodiscard]] std::span<double> history(std::size_t k) {
    return std::span<double>(histories_).subspan(k * history_dim_, history_dim_);
  }

  [[nodiscard]] std::span<const double> weights() const { return weights_; }
  [[nodiscard]] std::span<double> weights() { return weights_; }

  [[nodiscard]] const std::vector<std::vector<std::size_t>>& partition() const {
    return partition_;
  }
  void set_partition(std::vector<std::vector<std::size_t>> blocks);

  friend bool operator==(const ParticleSet&, const ParticleSet&) = default;

 private:
  std::size_t state_dim_ = 0;
  std::size_t history_dim_ = 0;
  std::vector<double> states_;
  std::vector<double> histories_;
  std::vector<double> weights_;
  std::vector<std::vector<std::size_t>> partition_;
};

/// Round-robin assignment of 0..count-1 to `blocks` index sets.
std::vector<std::vector<std::size_t>> round_robin_partition(std::size_t count, std::size_t blocks);

/// Draws from the initial state distribution; histories zero, weights uniform.
ParticleSet init_particles(const Game& game, std::size_t count, std::size_t n_eq, Rng& rng);

/// K i.i.d. particle indices drawn proportionally to weight, with replacement.
std::vector<std::size_t> sample_batch(const ParticleSet& particles, std::size_t k, Rng& rng);

/// A true observation of one player used to condition particles.
struct Conditioning {
  std::size_t player = 0;
  std::span<const double> observation;
};

struct UpdateOptions {
  double gamma = 0.0;
  /// Run per-particle work through OpenMP; results are identical either way.
  bool parallel = true;
};

/// One filter step for the listed particles: each particle's actions come from
/// `policy` applied to its own windows, the state advances, a fresh joint
/// observation is sampled, and with probability gamma the conditioned
/// player's component is replaced by the true observation and the weight
/// multiplied by its density. Weights are not renormalized here.
/// `stream_key` seeds the counter-based per-particle streams.
void propagate_particles(const Game& game, ParticleSet& particles,
                         std::span<const std::size_t> indices, const JointPolicy& policy,
                         const std::optional<Conditioning>& conditioning,
                         const UpdateOptions& options, std::uint64_t stream_key);

struct NormalizeOutcome {
  bool degenerate = false;  // total weight underflowed; weights reset uniform
};

NormalizeOutcome normalize_weights(ParticleSet& particles);

/// propagate_particles over every particle followed by normalize_weights.
/// Without a conditioning observation gamma is treated as zero.
NormalizeOutcome update_particles(const Game& game, ParticleSet& particles,
                                  const std::optional<Conditioning>& conditioning,
                                  const JointPolicy& policy, UpdateOptions options,
                                  std::uint64_t stream_key);

[[nodiscard]] double effective_sample_size(const ParticleSet& particles);

/// Systematic resampling; an optional extension that is off by default in the
/// planner. Weights become uniform, partition is preserved.
void systematic_resample(ParticleSet& particles, Rng& rng);

struct GaussianSummary {
  std::array<double, 2> mean{};
  std::array<double, 4> covariance{};  // row-major 2x2
};

inline constexpr double kSummaryRegularization = 1e-6;

/// Weighted mean and covariance (+1e-6 I) of a player's position marginal.
GaussianSummary gaussian_summary(const Game& game, const ParticleSet& particles,
                                 std::size_t player);

/// -log N(true_position; mean, covariance), in nats.
double surprisal(const GaussianSummary& summary, std::span<const double> true_position);
double surprisal(const Game& game, const ParticleSet& particles, std::size_t player,
                 std::span<const double> true_position);

/// Appends one step of the cloud to a columnar text file
/// (step particle player x y weight); writes the header when creating it.
void append_particle_cloud(const Game& game, const ParticleSet& particles, std::size_t step,
                           const std::filesystem::path& path);

}  // namespace posg
