#include "posg/game/blocks.hpp"

#include <algorithm>
#include <cmath>

namespace posg::blocks {

Var double_integrator_step(Tape& tape, Var block, Var accel, double v_max) {
  Var pos = tape.slice(block, 0, 2);
  Var vel = tape.slice(block, 2, 2);
  Var next_vel = tape.smooth_clamp(vel + accel, -v_max, v_max);
  return tape.concat({pos + next_vel, next_vel});
}

Var bearing(Tape& tape, Var velocity, Var offset) {
  Var heading = velocity / tape.norm(velocity);
  Var hx = tape.slice(heading, 0, 1);
  Var hy = tape.slice(heading, 1, 1);
  Var dx = tape.slice(offset, 0, 1);
  Var dy = tape.slice(offset, 1, 1);
  Var cross = hx * dy - hy * dx;
  Var dot = hx * dx + hy * dy;
  return tape.atan2(cross, dot);
}

Var fov_variance(Tape& tape, Var bearing, double fov, double sigma2_base, double c_scale) {
  Var magnitude = tape.norm(bearing);
  Var outside = tape.relu(magnitude - 0.5 * fov);
  return (c_scale * outside) + sigma2_base;
}

double fov_variance(double bearing, double fov, double sigma2_base, double c_scale) {
  const double magnitude = std::sqrt(bearing * bearing + Tape::kNormEps);
  return sigma2_base + c_scale * std::max(0.0, magnitude - 0.5 * fov);
}

Var soft_relu(Tape& tape, Var x, double sharpness) {
  return tape.scale(tape.softplus(tape.scale(x, sharpness)), 1.0 / sharpness);
}

Var trim_to_disc(Tape& tape, Var point, double radius) {
  Var r = tape.norm(point);
  Var trimmed = r - soft_relu(tape, r - radius, kTrimSharpness);
  return point * (trimmed / r);
}

Var soft_box(Tape& tape, Var v, double lo, double hi, double sharpness) {
  Var over = soft_relu(tape, v - hi, sharpness);
  Var under = soft_relu(tape, -v + lo, sharpness);
  return v - over + under;
}

Var boundary_penalty(Tape& tape, Var pos, double radius, double weight) {
  Var excess = tape.softplus(tape.norm(pos) - radius);
  return weight * tape.square(excess);
}

Var smooth_min(Tape& tape, Var values, double temperature) {
  auto v = values.value();
  const double shift = *std::min_element(v.begin(), v.end());
  Var terms = tape.exp(tape.scale(values - shift, -temperature));
  return tape.scale(tape.log(tape.sum(terms)), -1.0 / temperature) + shift;
}

Var segment_distance(Tape& tape, Var a, Var b, Var point) {
  Var d = b - a;
  Var w = point - a;
  Var t = tape.sum(w * d) / (tape.sum(tape.square(d)) + 1e-12);
  Var clamped = soft_box(tape, t, 0.0, 1.0, kTrimSharpness);
  return tape.norm(point - (a + d * clamped));
}

Var fov_observation_variance(Tape& tape, Var state, std::size_t observer, std::size_t target,
                             const FovParams& params) {
  Var offset = position(tape, state, target) - position(tape, state, observer);
  Var angle = bearing(tape, velocity(tape, state, observer), offset);
  return fov_variance(tape, angle, params.fov, params.sigma2_base, params.c_scale);
}

Var fov_observe(Tape& tape, Var state, std::size_t observer, std::size_t target,
                std::span<const double> noise, const FovParams& params) {
  Var variance = fov_observation_variance(tape, state, observer, target, params);
  Var raw = tape.reparam(position(tape, state, target), tape.sqrt(variance), noise);
  return trim_to_disc(tape, raw, params.play_radius);
}

}  // namespace posg::blocks
