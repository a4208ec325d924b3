#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "grad_util.hpp"
#include "posg/game/blocks.hpp"
#include "posg/rng.hpp"

using namespace posg;
using posg::ad::Shape;
using posg::ad::Tape;
using posg::ad::Var;
namespace b = posg::blocks;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_CASE("double integrator at low speed") {
  Tape t;
  Var block = t.constant(std::vector<double>{0, 0, 1, 0});
  Var accel = t.constant(std::vector<double>{0, 0});
  Var next = b::double_integrator_step(t, block, accel, 1000.0);
  CHECK(next.value()[0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(next.value()[1] == doctest::Approx(0.0));
  CHECK(next.value()[2] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(next.value()[3] == doctest::Approx(0.0));
}

TEST_CASE("velocity saturates below v_max") {
  Rng rng(1);
  for (int k = 0; k < 1000; ++k) {
    const auto x = standard_normals(rng, 6);
    Tape t;
    Var block = t.constant(std::vector<double>{x[0], x[1], x[2], x[3]});
    Var accel = t.constant(std::vector<double>{50.0 * x[4], 50.0 * x[5]});
    Var next = b::double_integrator_step(t, block, accel, 0.3);
    REQUIRE(std::abs(next.value()[2]) <= 0.3);
    REQUIRE(std::abs(next.value()[3]) <= 0.3);
  }
}

TEST_CASE("fov variance examples") {
  const double f = kPi / 2;
  CHECK(b::fov_variance(0.0, f, 0.01, 5.0) == doctest::Approx(0.01));
  CHECK(b::fov_variance(f / 2, f, 0.01, 5.0) == doctest::Approx(0.01).epsilon(1e-6));
  CHECK(b::fov_variance(-f / 2, f, 0.01, 5.0) == doctest::Approx(0.01).epsilon(1e-6));
  CHECK(b::fov_variance(f / 2 + 1.0, f, 0.01, 5.0) == doctest::Approx(5.01).epsilon(1e-9));
  CHECK(b::fov_variance(-(f / 2 + 1.0), f, 0.01, 5.0) == doctest::Approx(5.01).epsilon(1e-9));
  // Target directly behind the observer.
  CHECK(b::fov_variance(kPi, f, 0.01, 5.0) == doctest::Approx(0.01 + 5.0 * (kPi - kPi / 4)));
}

TEST_CASE("fov variance is continuous and flat inside the cone") {
  const double f = kPi / 2;
  double prev = b::fov_variance(-kPi, f, 0.01, 5.0);
  for (int k = 1; k <= 20000; ++k) {
    const double angle = -kPi + 2 * kPi * k / 20000.0;
    const double v = b::fov_variance(angle, f, 0.01, 5.0);
    REQUIRE(std::abs(v - prev) <= 5.0 * (2 * kPi / 20000.0) + 1e-12);
    if (std::abs(angle) < f / 2 - 1e-4) REQUIRE(v == doctest::Approx(0.01).epsilon(1e-12));
    prev = v;
  }
  // tape and plain versions agree
  Rng rng(2);
  std::uniform_real_distribution<double> u(-kPi, kPi);
  for (int k = 0; k < 1000; ++k) {
    const double a = u(rng);
    Tape t;
    Var v = b::fov_variance(t, t.constant(a), f, 0.01, 5.0);
    REQUIRE(v.scalar() == doctest::Approx(b::fov_variance(a, f, 0.01, 5.0)).epsilon(1e-12));
  }
}

TEST_CASE("fov observe with zero noise, target dead ahead") {
  Tape t;
  // observer at origin heading +x, target at (2, 0)
  Var state = t.constant(std::vector<double>{0, 0, 0.3, 0, 2, 0, 0, 0});
  const std::vector<double> eps{0.0, 0.0};
  Var z = b::fov_observe(t, state, 0, 1, eps, {});
  CHECK(z.value()[0] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(z.value()[1] == doctest::Approx(0.0));
  Var var = b::fov_observation_variance(t, state, 0, 1, {});
  CHECK(var.scalar() == doctest::Approx(0.01).epsilon(1e-9));
}

TEST_CASE("fov observe stays in the play area") {
  Rng rng(3);
  for (int k = 0; k < 1000; ++k) {
    auto x = standard_normals(rng, 8);
    auto eps = standard_normals(rng, 2);
    for (double& e : eps) e *= 20.0;
    Tape t;
    Var z = b::fov_observe(t, t.constant(x), 0, 1, eps, {});
    REQUIRE(std::hypot(z.value()[0], z.value()[1]) <= 5.0 + 1e-9);
  }
}

TEST_CASE("boundary penalty") {
  auto penalty = [](double r, double radius) {
    Tape t;
    return b::boundary_penalty(t, t.constant(std::vector<double>{r, 0.0}), radius, 10.0).scalar();
  };
  // at R = 10 the origin is deep interior
  CHECK(penalty(0.0, 10.0) < 1e-6 * 10.0);
  const double sp1 = std::log1p(std::exp(1.0));
  CHECK(penalty(6.0, 5.0) == doctest::Approx(10.0 * sp1 * sp1).epsilon(1e-9));
  CHECK(std::abs(penalty(6.0, 5.0) - 10.0 * sp1 * sp1) < 1e-6);

  Rng rng(4);
  std::uniform_real_distribution<double> radius(0.5, 10.0), r(0.0, 20.0);
  for (int k = 0; k < 1000; ++k) {
    const double R = radius(rng);
    double a = r(rng), c = r(rng);
    if (a > c) std::swap(a, c);
    REQUIRE(penalty(a, R) >= 0.0);
    REQUIRE(penalty(a, R) <= penalty(c, R));
  }
}

TEST_CASE("trim is near-identity inside and bounded outside") {
  Tape t;
  Var inside = b::trim_to_disc(t, t.constant(std::vector<double>{1.0, -2.0}), 5.0);
  CHECK(inside.value()[0] == 1.0);
  CHECK(inside.value()[1] == -2.0);
  Var outside = b::trim_to_disc(t, t.constant(std::vector<double>{30.0, 40.0}), 5.0);
  CHECK(std::hypot(outside.value()[0], outside.value()[1]) <= 5.0);
  CHECK(outside.value()[0] / outside.value()[1] == doctest::Approx(0.75));
}

TEST_CASE("smooth min and segment distance") {
  Tape t;
  Var m = b::smooth_min(t, t.constant(std::vector<double>{3.0, 1.0, 2.0}), 100.0);
  CHECK(m.scalar() == doctest::Approx(1.0).epsilon(1e-6));
  Var a = t.constant(std::vector<double>{0, 0});
  Var c = t.constant(std::vector<double>{4, 0});
  CHECK(b::segment_distance(t, a, c, t.constant(std::vector<double>{2, 3})).scalar() ==
        doctest::Approx(3.0));
  CHECK(b::segment_distance(t, a, c, t.constant(std::vector<double>{7, 4})).scalar() ==
        doctest::Approx(5.0).epsilon(1e-6));
}

TEST_CASE("block helpers pass grad_check") {
  Rng rng(5);
  posg::ad::ScalarProgram f = [](Tape& t, Var x) {
    Var next = b::double_integrator_step(t, t.slice(x, 0, 4), t.slice(x, 4, 2), 0.5);
    Var state = t.concat({next, t.slice(x, 6, 4)});
    const std::vector<double> eps{0.4, -1.2};
    Var z = b::fov_observe(t, state, 0, 1, eps, {});
    return t.sum(t.square(z)) + b::boundary_penalty(t, t.slice(state, 0, 2), 1.0, 10.0);
  };
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    auto x = standard_normals(rng, 10);
    worst = std::max(worst, posg::testing::scaled_grad_error(f, x, 1e-6));
  }
  CHECK(worst < 1e-4);
}
