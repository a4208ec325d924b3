#include "posg/policy/policy.hpp"

#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <stdexcept>

#include "posg/game/game.hpp"
#include "posg/rng.hpp"

namespace posg {

std::string to_string(GatherMode mode) {
  return mode == GatherMode::Active ? "active" : "passive";
}

GatherMode parse_gather_mode(const std::string& text) {
  if (text == "active") return GatherMode::Active;
  if (text == "passive") return GatherMode::Passive;
  throw std::invalid_argument("unknown gathering mode '" + text + "'");
}

PolicyParams::PolicyParams(GatherMode mode, std::size_t input_width, std::size_t action_dim,
                           std::size_t horizon, double action_scale,
                           std::vector<LayerShape> layers)
    : mode_(mode),
      input_width_(input_width),
      action_dim_(action_dim),
      horizon_(mode == GatherMode::Active ? 1 : horizon),
      action_scale_(action_scale),
      layers_(std::move(layers)) {
  if (layers_.empty()) {
    throw std::invalid_argument("policy needs at least one layer");
  }
  if (layers_.front().in != input_width_ || layers_.back().out != output_width()) {
    throw std::invalid_argument("policy layer shapes do not match input/output widths");
  }
  std::size_t total = 0;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (i > 0 && layers_[i].in != layers_[i - 1].out) {
      throw std::invalid_argument("policy layer shapes do not chain");
    }
    total += layers_[i].param_count();
  }
  flat_.assign(total, 0.0);
}

std::size_t PolicyParams::layer_offset(std::size_t layer) const {
  std::size_t offset = 0;
  for (std::size_t i = 0; i < layer; ++i) {
    offset += layers_[i].param_count();
  }
  return offset;
}

std::span<const double> PolicyParams::weights(std::size_t layer) const {
  return std::span<const double>(flat_).subspan(layer_offset(layer), layers_[layer].weight_count());
}
std::span<double> PolicyParams::weights(std::size_t layer) {
  return std::span<double>(flat_).subspan(layer_offset(layer), layers_[layer].weight_count());
}
std::span<const double> PolicyParams::bias(std::size_t layer) const {
  return std::span<const double>(flat_).subspan(layer_offset(layer) + layers_[layer].weight_count(),
                                                layers_[layer].out);
}
std::span<double> PolicyParams::bias(std::size_t layer) {
  return std::span<double>(flat_).subspan(layer_offset(layer) + layers_[layer].weight_count(),
                                          layers_[layer].out);
}

namespace {
constexpr std::array<std::size_t, 2> kDefaultHidden{64, 64};
}

PolicyParams init_policy(const Game& game, std::size_t player, GatherMode mode,
                         std::uint64_t seed, std::span<const std::size_t> hidden) {
  if (player >= game.num_players()) {
    throw std::out_of_range("init_policy: invalid player index");
  }
  const std::size_t input = game.window_size(player);
  const std::size_t actions = game.action_dim(player);
  const std::size_t horizon = mode == GatherMode::Active ? 1 : game.horizon().future;
  std::vector<LayerShape> layers;
  std::size_t width = input;
  for (std::size_t h : hidden) {
    layers.push_back({width, h});
    width = h;
  }
  layers.push_back({width, actions * horizon});
  PolicyParams params(mode, input, actions, horizon, game.action_scale(player), std::move(layers));

  Rng rng(derive_seed(seed, player));
  for (std::size_t l = 0; l < params.layers().size(); ++l) {
    const LayerShape shape = params.layers()[l];
    const double fan = static_cast<double>(shape.in + shape.out);
    const double limit = fan > 0.0 ? std::sqrt(6.0 / fan) : 0.0;
    std::uniform_real_distribution<double> uniform(-limit, limit);
    for (double& w : params.weights(l)) {
      w = uniform(rng);
    }
  }
  return params;
}

PolicyParams init_policy(const Game& game, std::size_t player, GatherMode mode,
                         std::uint64_t seed) {
  return init_policy(game, player, mode, seed, kDefaultHidden);
}

JointPolicy init_joint_policy(const Game& game, std::span<const GatherMode> modes,
                              std::uint64_t seed, std::span<const std::size_t> hidden) {
  if (modes.size() != game.num_players()) {
    throw std::invalid_argument("init_joint_policy: one gathering mode per player required");
  }
  JointPolicy joint;
  joint.reserve(modes.size());
  for (std::size_t i = 0; i < modes.size(); ++i) {
    joint.push_back(init_policy(game, i, modes[i], seed, hidden));
  }
  return joint;
}

PolicyVars lift_policy(ad::Tape& tape, const PolicyParams& params, bool trainable) {
  PolicyVars vars;
  vars.params = &params;
  for (std::size_t l = 0; l < params.layers().size(); ++l) {
    const LayerShape shape = params.layers()[l];
    vars.weights.push_back(tape.lift(
        params.weights(l),
        ad::Shape{static_cast<std::uint32_t>(shape.out), static_cast<std::uint32_t>(shape.in)},
        trainable));
    vars.biases.push_back(tape.lift(params.bias(l), trainable));
  }
  return vars;
}

ad::Var policy_outputs(ad::Tape& tape, const PolicyVars& policy, ad::Var history) {
  const PolicyParams& params = *policy.params;
  if (history.size() != params.input_width()) {
    throw std::invalid_argument("policy: history length " + std::to_string(history.size()) +
                                " does not match input width " +
                                std::to_string(params.input_width()));
  }
  ad::Var h = history;
  const std::size_t last = policy.weights.size() - 1;
  for (std::size_t l = 0; l <= last; ++l) {
    h = tape.matvec(policy.weights[l], h) + policy.biases[l];
    h = tape.tanh(h);
  }
  return params.action_scale() * h;
}

ad::Var policy_forward(ad::Tape& tape, const PolicyVars& policy, ad::Var history,
                       std::size_t t_offset) {
  const PolicyParams& params = *policy.params;
  ad::Var out = policy_outputs(tape, policy, history);
  if (params.mode() == GatherMode::Active) {
    return out;
  }
  if (t_offset >= params.horizon()) {
    throw std::out_of_range("policy: future step offset beyond planning horizon");
  }
  return tape.slice(out, t_offset * params.action_dim(), params.action_dim());
}

std::vector<double> policy_action(const PolicyParams& params, std::span<const double> history,
                                  std::size_t t_offset) {
  ad::Tape tape;
  PolicyVars vars = lift_policy(tape, params, false);
  auto a = policy_forward(tape, vars, tape.constant(history), t_offset).value();
  return {a.begin(), a.end()};
}

void accumulate_gradient(const PolicyVars& policy, std::span<double> out) {
  if (out.size() != policy.params->size()) {
    throw std::invalid_argument("accumulate_gradient: output size mismatch");
  }
  std::size_t offset = 0;
  for (std::size_t l = 0; l < policy.weights.size(); ++l) {
    for (ad::Var v : {policy.weights[l], policy.biases[l]}) {
      auto g = v.grad();
      for (std::size_t i = 0; i < g.size(); ++i) {
        out[offset + i] += g[i];
      }
      offset += g.size();
    }
  }
}

// Binary layout, little-endian:
//   char[8]  "POSGPOL\0"
//   u32      format version (1)
//   u32      gathering mode (0 active, 1 passive)
//   u64      input width, action dim, horizon
//   f64      action scale
//   u64      layer count, then (in, out) per layer
//   u64      parameter count, then that many f64 values in flat() order
namespace {
constexpr char kMagic[8] = {'P', 'O', 'S', 'G', 'P', 'O', 'L', '\0'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ofstream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::ifstream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) {
    throw std::runtime_error("policy file truncated");
  }
  return value;
}
}  // namespace

void save_policy(const PolicyParams& params, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write policy file " + path.string());
  }
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kVersion);
  put<std::uint32_t>(out, params.mode() == GatherMode::Active ? 0 : 1);
  put<std::uint64_t>(out, params.input_width());
  put<std::uint64_t>(out, params.action_dim());
  put<std::uint64_t>(out, params.horizon());
  put<double>(out, params.action_scale());
  put<std::uint64_t>(out, params.layers().size());
  for (const LayerShape& l : params.layers()) {
    put<std::uint64_t>(out, l.in);
    put<std::uint64_t>(out, l.out);
  }
  put<std::uint64_t>(out, params.size());
  for (double v : params.flat()) {
    put<double>(out, v);
  }
}

PolicyParams load_policy(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot read policy file " + path.string());
  }
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error("not a policy file: " + path.string());
  }
  if (get<std::uint32_t>(in) != kVersion) {
    throw std::runtime_error("unsupported policy file version");
  }
  const auto mode = get<std::uint32_t>(in) == 0 ? GatherMode::Active : GatherMode::Passive;
  const auto input = get<std::uint64_t>(in);
  const auto actions = get<std::uint64_t>(in);
  const auto horizon = get<std::uint64_t>(in);
  const auto scale = get<double>(in);
  std::vector<LayerShape> layers(get<std::uint64_t>(in));
  for (auto& l : layers) {
    l.in = get<std::uint64_t>(in);
    l.out = get<std::uint64_t>(in);
  }
  PolicyParams params(mode, input, actions, horizon, scale, std::move(layers));
  if (get<std::uint64_t>(in) != params.size()) {
    throw std::runtime_error("policy file parameter count does not match its shapes");
  }
  for (double& v : params.flat()) {
    v = get<double>(in);
  }
  return params;
}

}  // namespace posg
