#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace posg {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamState() = default;
  AdamState(std::size_t size, AdamConfig config)
      : config(config), first_moment(size, 0.0), second_moment(size, 0.0) {}

  AdamConfig config;
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::uint64_t step = 0;
};

struct AdamOutcome {
  bool skipped = false;  // non-finite gradient; parameters and state untouched
};

/// Bias-corrected Adam update of `params` in place.
AdamOutcome adam_step(std::span<double> params, std::span<const double> grad, AdamState& state);

}  // namespace posg
