#pragma once

// Shared building blocks for the planar UAV-style scenarios: double-integrator
// dynamics, field-of-view observation noise and soft boundary penalties.
//
// Joint states are laid out as consecutive per-player blocks
// (px, py, vx, vy) with unit time step.

#include <cstddef>
#include <span>

#include "posg/ad/tape.hpp"

namespace posg::blocks {

using ad::Tape;
using ad::Var;

inline constexpr std::size_t kBlock = 4;

inline Var position(Tape& tape, Var state, std::size_t player) {
  return tape.slice(state, kBlock * player, 2);
}
inline Var velocity(Tape& tape, Var state, std::size_t player) {
  return tape.slice(state, kBlock * player + 2, 2);
}
inline Var block(Tape& tape, Var state, std::size_t player) {
  return tape.slice(state, kBlock * player, kBlock);
}

/// vel' = smooth_clamp(vel + accel, +-v_max); pos' = pos + vel'.
Var double_integrator_step(Tape& tape, Var block, Var accel, double v_max);

/// Angle between the heading implied by `velocity` and `offset`, in (-pi, pi].
Var bearing(Tape& tape, Var velocity, Var offset);

/// sigma2_base, plus c_scale per radian beyond half the field of view.
Var fov_variance(Tape& tape, Var bearing, double fov, double sigma2_base, double c_scale);
double fov_variance(double bearing, double fov, double sigma2_base, double c_scale);

/// softplus(sharpness * x) / sharpness.
Var soft_relu(Tape& tape, Var x, double sharpness);

/// Keeps a planar point inside the disc of the given radius; near-identity in
/// the interior.
Var trim_to_disc(Tape& tape, Var point, double radius);

/// Elementwise soft clamp to [lo, hi] that is near-identity inside the interval.
Var soft_box(Tape& tape, Var v, double lo, double hi, double sharpness);

/// lambda * softplus(|pos| - radius)^2.
Var boundary_penalty(Tape& tape, Var pos, double radius, double weight);

/// -(1/temperature) log sum exp(-temperature * x_i), numerically shifted.
Var smooth_min(Tape& tape, Var values, double temperature);

/// Distance from `point` to the segment from `a` to `b`.
Var segment_distance(Tape& tape, Var a, Var b, Var point);

struct FovParams {
  double fov = 1.5707963267948966;
  double sigma2_base = 0.01;
  double c_scale = 5.0;
  double play_radius = 5.0;
};

/// Observation variance of `target`'s position as seen by `observer`.
Var fov_observation_variance(Tape& tape, Var state, std::size_t observer, std::size_t target,
                             const FovParams& params);

/// Target position plus sqrt(variance) * noise, trimmed to the play area.
Var fov_observe(Tape& tape, Var state, std::size_t observer, std::size_t target,
                std::span<const double> noise, const FovParams& params);

inline constexpr double kTrimSharpness = 50.0;

}  // namespace posg::blocks
