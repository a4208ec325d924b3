#pragma once

// Feedforward policies mapping a flattened observation window to actions.
//
// Active policies read the current (rolled) window at every step. Passive
// policies read the window frozen at planning time once and emit one action
// block per future step.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "posg/ad/tape.hpp"

namespace posg {

class Game;

enum class GatherMode : std::uint8_t { Active, Passive };

std::string to_string(GatherMode mode);
GatherMode parse_gather_mode(const std::string& text);

struct LayerShape {
  std::size_t in = 0;
  std::size_t out = 0;
  [[nodiscard]] std::size_t weight_count() const { return in * out; }
  [[nodiscard]] std::size_t param_count() const { return in * out + out; }
  friend bool operator==(const LayerShape&, const LayerShape&) = default;
};

/// Parameters of one player's policy, stored contiguously: for each layer the
/// row-major weight matrix followed by the bias vector.
class PolicyParams {
 public:
  PolicyParams() = default;
  PolicyParams(GatherMode mode, std::size_t input_width, std::size_t action_dim,
               std::size_t horizon, double action_scale, std::vector<LayerShape> layers);

  [[nodiscard]] GatherMode mode() const { return mode_; }
  [[nodiscard]] std::size_t input_width() const { return input_width_; }
  [[nodiscard]] std::size_t action_dim() const { return action_dim_; }
  /// Number of action blocks emitted (1 for active policies).
  [[nodiscard]] std::size_t horizon() const { return horizon_; }
  [[nodiscard]] std::size_t output_width() const { return action_dim_ * horizon_; }
  [[nodiscard]] double action_scale() const { return action_scale_; }
  [[nodiscard]] const std::vector<LayerShape>& layers() const { return layers_; }

  [[nodiscard]] std::span<const double> flat() const { return flat_; }
  [[nodiscard]] std::span<double> flat() { return flat_; }
  [[nodiscard]] std::size_t size() const { return flat_.size(); }

  [[nodiscard]] std::span<const double> weights(std::size_t layer) const;
  [[nodiscard]] std::span<double> weights(std::size_t layer);
  [[nodiscard]] std::span<const double> bias(std::size_t layer) const;
  [[nodiscard]] std::span<double> bias(std::size_t layer);

  friend bool operator==(const PolicyParams&, const PolicyParams&) = default;

 private:
  [[nodiscard]] std::size_t layer_offset(std::size_t layer) const;

  GatherMode mode_ = GatherMode::Active;
  std::size_t input_width_ = 0;
  std::size_t action_dim_ = 0;
  std::size_t horizon_ = 1;
  double action_scale_ = 1.0;
  std::vector<LayerShape> layers_;
  std::vector<double> flat_;
};

using JointPolicy = std::vector<PolicyParams>;

/// Xavier-uniform weights, zero biases, tanh hidden layers.
PolicyParams init_policy(const Game& game, std::size_t player, GatherMode mode,
                         std::uint64_t seed, std::span<const std::size_t> hidden);
PolicyParams init_policy(const Game& game, std::size_t player, GatherMode mode,
                         std::uint64_t seed);
JointPolicy init_joint_policy(const Game& game, std::span<const GatherMode> modes,
                              std::uint64_t seed, std::span<const std::size_t> hidden);

/// A policy lifted onto a tape, as parameters or constants.
struct PolicyVars {
  const PolicyParams* params = nullptr;
  std::vector<ad::Var> weights;
  std::vector<ad::Var> biases;
};

PolicyVars lift_policy(ad::Tape& tape, const PolicyParams& params, bool trainable);

/// All action blocks, squashed to +-action_scale; length output_width().
ad::Var policy_outputs(ad::Tape& tape, const PolicyVars& policy, ad::Var history);

/// The action for future step `t_offset`. Active policies ignore the offset.
ad::Var policy_forward(ad::Tape& tape, const PolicyVars& policy, ad::Var history,
                       std::size_t t_offset);

/// Plain-value evaluation of policy_forward.
std::vector<double> policy_action(const PolicyParams& params, std::span<const double> history,
                                  std::size_t t_offset);

/// Gradient w.r.t. the lifted parameters after tape.backward(), in flat() order.
void accumulate_gradient(const PolicyVars& policy, std::span<double> out);

void save_policy(const PolicyParams& params, const std::filesystem::path& path);
PolicyParams load_policy(const std::filesystem::path& path);

}  // namespace posg
