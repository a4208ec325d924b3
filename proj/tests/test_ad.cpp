#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "posg/ad/tape.hpp"
#include "posg/rng.hpp"

using posg::ad::ScalarProgram;
using posg::ad::Shape;
using posg::ad::Tape;
using posg::ad::TapeError;
using posg::ad::Var;

TEST_CASE("mul values and adjoints") {
  Tape t;
  Var x = t.lift(3.0, true);
  Var y = t.lift(4.0, true);
  Var z = t.mul(x, y);
  CHECK(z.scalar() == 12.0);
  t.backward(z);
  CHECK(x.grad()[0] == 4.0);
  CHECK(y.grad()[0] == 3.0);
}

TEST_CASE("tanh at zero") {
  Tape t;
  Var x = t.lift(0.0, true);
  Var y = t.tanh(x);
  CHECK(y.scalar() == 0.0);
  t.backward(y);
  CHECK(x.grad()[0] == 1.0);
}

TEST_CASE("norm with zero eps") {
  Tape t;
  const std::vector<double> v{3.0, 4.0};
  Var x = t.param(v, Shape{2, 1});
  Var n = t.norm(x, 0.0);
  CHECK(n.scalar() == doctest::Approx(5.0).epsilon(1e-15));
  t.backward(n);
  CHECK(x.grad()[0] == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(x.grad()[1] == doctest::Approx(0.8).epsilon(1e-15));
}

TEST_CASE("sum of squares adjoint") {
  Tape t;
  const std::vector<double> v{1.0, 2.0, 3.0};
  Var x = t.param(v, Shape{3, 1});
  Var r = t.sum(t.square(x));
  CHECK(r.scalar() == 14.0);
  t.backward(r);
  CHECK(x.grad()[0] == 2.0);
  CHECK(x.grad()[1] == 4.0);
  CHECK(x.grad()[2] == 6.0);
}

TEST_CASE("constant root and unreachable leaves get zero adjoints") {
  Tape t;
  Var p = t.lift(2.5, true);
  Var unused = t.lift(0.0, true);
  Var c = t.constant(7.0);
  t.backward(c);
  CHECK(p.grad()[0] == 0.0);
  CHECK(unused.grad()[0] == 0.0);
}

TEST_CASE("lift readback") {
  Tape t;
  const std::vector<double> v{1.0, 2.0};
  Var x = t.constant(v);
  CHECK(x.value()[0] == 1.0);
  CHECK(x.value()[1] == 2.0);
  CHECK(x.shape() == Shape{2, 1});
}

TEST_CASE("error contracts") {
  Tape t;
  CHECK_THROWS_AS(t.lift(std::numeric_limits<double>::quiet_NaN()), TapeError);
  CHECK_THROWS_AS(t.lift(std::numeric_limits<double>::infinity()), TapeError);
  CHECK_THROWS_AS(t.log(t.constant(0.0)), TapeError);
  CHECK_THROWS_AS(t.log(t.constant(-1.0)), TapeError);
  const std::vector<double> two{1.0, 2.0};
  const std::vector<double> three{1.0, 2.0, 3.0};
  CHECK_THROWS_AS(t.add(t.constant(two), t.constant(three)), TapeError);
  Var v = t.param(two, Shape{2, 1});
  CHECK_THROWS_AS(t.backward(t.square(v)), TapeError);
  CHECK_THROWS_AS(t.reshape(v, Shape{3, 1}), TapeError);
}

TEST_CASE("grad_check examples") {
  ScalarProgram square = [](Tape& t, Var x) { return t.sum(t.square(x)); };
  const std::vector<double> one{1.0};
  CHECK(posg::ad::grad_check(square, one, 1e-5) < 1e-8);
  ScalarProgram th = [](Tape& t, Var x) { return t.sum(t.tanh(x)); };
  const std::vector<double> half{0.5};
  CHECK(posg::ad::grad_check(th, half, 1e-5) < 1e-6);
  CHECK(posg::ad::gradient(th, half)[0] ==
        doctest::Approx(1.0 - std::tanh(0.5) * std::tanh(0.5)).epsilon(1e-14));
}

TEST_CASE("reparam derivatives are exact") {
  posg::Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const std::vector<double> eps = posg::standard_normals(rng, 3);
    const std::vector<double> mu = posg::standard_normals(rng, 3);
    Tape t;
    Var m = t.param(mu, Shape{3, 1});
    Var s = t.lift(0.7, true);
    Var z = t.reparam(m, s, eps);
    for (int i = 0; i < 3; ++i) CHECK(z.value()[i] == mu[i] + 0.7 * eps[i]);
    t.backward(t.sum(z));
    double ssum = 0.0;
    for (int i = 0; i < 3; ++i) {
      CHECK(m.grad()[i] == 1.0);
      ssum += eps[i];
    }
    CHECK(s.grad()[0] == doctest::Approx(ssum).epsilon(1e-15));
  }
}

TEST_CASE("truncate keeps earlier nodes usable") {
  Tape t;
  Var x = t.lift(2.0, true);
  const std::size_t mark = t.node_count();
  for (int rep = 0; rep < 3; ++rep) {
    t.truncate(mark);
    Var y = t.square(x);
    t.backward(y);
    CHECK(x.grad()[0] == 4.0);
  }
}

namespace {

// One program per primitive, each reducing to a scalar. Inputs are 4-vectors.
std::vector<std::pair<const char*, ScalarProgram>> primitive_programs() {
  auto w = [](Tape& t, Var x, std::initializer_list<double> c) {
    return t.constant(std::vector<double>(c));
  };
  return {
      {"add", [=](Tape& t, Var x) { return t.sum(t.square(x + w(t, x, {1, -2, 0.5, 3}))); }},
      {"sub", [=](Tape& t, Var x) { return t.sum(t.square(w(t, x, {1, -2, 0.5, 3}) - x)); }},
      {"mul", [=](Tape& t, Var x) { return t.sum(x * t.tanh(x)); }},
      {"mul_scalar", [](Tape& t, Var x) { return t.sum(t.mul(t.slice(x, 0, 1), x)); }},
      {"div", [](Tape& t, Var x) { return t.sum(t.div(x, t.add_const(t.square(x), 1.0))); }},
      {"scale", [](Tape& t, Var x) { return t.sum(t.square(t.scale(x, -1.5))); }},
      {"matvec",
       [](Tape& t, Var x) {
         const std::vector<double> m{1, 2, 0, -1, 0.5, 0.5, 3, -2};
         return t.sum(t.square(t.matvec(t.lift(m, Shape{2, 4}), x)));
       }},
      {"matvec_matrix",
       [](Tape& t, Var x) {
         const std::vector<double> v{0.3, -1.1};
         return t.sum(t.tanh(t.matvec(t.reshape(x, Shape{2, 2}), t.constant(v))));
       }},
      {"tanh", [](Tape& t, Var x) { return t.sum(t.tanh(x)); }},
      {"exp", [](Tape& t, Var x) { return t.sum(t.exp(t.scale(x, 0.5))); }},
      {"log", [](Tape& t, Var x) { return t.sum(t.log(t.add_const(t.square(x), 0.5))); }},
      {"sqrt", [](Tape& t, Var x) { return t.sum(t.sqrt(t.add_const(t.square(x), 0.3))); }},
      {"softplus", [](Tape& t, Var x) { return t.sum(t.softplus(t.scale(x, 2.0))); }},
      {"sum", [](Tape& t, Var x) { return t.square(t.sum(x)); }},
      {"norm", [](Tape& t, Var x) { return t.norm(x); }},
      {"atan2",
       [](Tape& t, Var x) {
         return t.sum(t.atan2(t.slice(x, 0, 2), t.add_const(t.square(t.slice(x, 2, 2)), 0.2)));
       }},
      {"smooth_clamp", [](Tape& t, Var x) { return t.sum(t.square(t.smooth_clamp(x, -1.0, 2.0))); }},
      {"reparam",
       [](Tape& t, Var x) {
         const std::vector<double> eps{0.3, -0.7};
         Var z = t.reparam(t.slice(x, 0, 2), t.exp(t.slice(x, 2, 2)), eps);
         return t.sum(t.square(z));
       }},
      {"slice_concat",
       [](Tape& t, Var x) {
         Var y = t.concat({t.slice(x, 2, 2), t.tanh(t.slice(x, 0, 2))});
         return t.sum(t.mul(y, t.constant(std::vector<double>{1, 2, 3, 4})));
       }},
  };
}

}  // namespace

TEST_CASE("every primitive matches central differences at 100 random points") {
  posg::Rng rng(42);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (const auto& [name, program] : primitive_programs()) {
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
      std::vector<double> x(4);
      for (double& v : x) v = u(rng);
      worst = std::max(worst, posg::ad::grad_check(program, x, 1e-6));
    }
    INFO(std::string(name));
    CHECK(worst < 1e-4);
  }
}

TEST_CASE("relu away from the kink") {
  ScalarProgram f = [](Tape& t, Var x) { return t.sum(t.square(t.relu(x))); };
  posg::Rng rng(3);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int k = 0; k < 100; ++k) {
    std::vector<double> x(4);
    for (double& v : x) {
      v = u(rng);
      if (std::abs(v) < 1e-3) v = 0.5;
    }
    CHECK(posg::ad::grad_check(f, x, 1e-6) < 1e-4);
  }
}

TEST_CASE("backward is deterministic") {
  posg::Rng rng(9);
  for (int k = 0; k < 50; ++k) {
    const std::vector<double> x = posg::standard_normals(rng, 4);
    Tape t;
    Var v = t.param(x, Shape{4, 1});
    Var r = t.sum(t.tanh(t.mul(v, t.exp(v)))) + t.norm(v);
    t.backward(r);
    const std::vector<double> first(v.grad().begin(), v.grad().end());
    t.backward(r);
    const std::vector<double> second(v.grad().begin(), v.grad().end());
    CHECK(first == second);
  }
}
