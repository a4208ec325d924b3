#pragma once

// Reverse-mode automatic differentiation over small dense tensors.
//
// A Tape records every value produced during a forward evaluation in creation
// order. Values and adjoints live in flat arenas owned by the tape, so building
// a rollout allocates nothing once the tape has warmed up. Tapes are
// define-by-run and single-owner; build one per rollout and reuse it with
// clear() or truncate().

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace posg::ad {

class Tape;

/// Thrown on shape mismatches, non-finite values and domain errors.
class TapeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Op : std::uint8_t {
  Leaf,
  Add,
  Sub,
  Mul,
  Div,
  Scale,
  AddConst,
  MatVec,
  Tanh,
  Exp,
  Log,
  Sqrt,
  Square,
  Softplus,
  Relu,
  Sum,
  Norm,
  Atan2,
  SmoothClamp,
  Reparam,
  Slice,
  Concat,
};

struct Shape {
  std::uint32_t rows = 1;
  std::uint32_t cols = 1;

  [[nodiscard]] constexpr std::size_t size() const { return std::size_t{rows} * cols; }
  [[nodiscard]] constexpr bool is_scalar() const { return rows == 1 && cols == 1; }
  friend constexpr bool operator==(Shape, Shape) = default;
};

/// Handle to a node on a tape. Cheap to copy; valid until the tape is cleared
/// or truncated below its id.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::uint32_t id) : tape_(tape), id_(id) {}

  [[nodiscard]] Tape& tape() const { return *tape_; }
  [[nodiscard]] std::uint32_t id() const { return id_; }
  [[nodiscard]] bool valid() const { return tape_ != nullptr; }

  [[nodiscard]] Shape shape() const;
  [[nodiscard]] std::size_t size() const { return shape().size(); }
  [[nodiscard]] std::span<const double> value() const;
  [[nodiscard]] double scalar() const;
  [[nodiscard]] std::span<const double> grad() const;

 private:
  Tape* tape_ = nullptr;
  std::uint32_t id_ = 0;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = default;
  Tape& operator=(Tape&&) = default;

  /// Leaf node. Parameters receive adjoints; constants do not.
  Var lift(std::span<const double> value, Shape shape, bool parameter = false);
  Var lift(std::span<const double> value, bool parameter = false);
  Var lift(double value, bool parameter = false);
  Var param(std::span<const double> value, Shape shape) { return lift(value, shape, true); }
  Var constant(std::span<const double> value) { return lift(value, false); }
  Var constant(double value) { return lift(value, false); }

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  /// Elementwise product; either operand may be a scalar.
  Var mul(Var a, Var b);
  /// Elementwise quotient; the divisor may be a scalar.
  Var div(Var a, Var b);
  Var scale(Var a, double c);
  Var add_const(Var a, double c);
  Var matvec(Var matrix, Var vector);
  Var tanh(Var a);
  Var exp(Var a);
  Var log(Var a);
  Var sqrt(Var a);
  Var square(Var a);
  Var softplus(Var a);
  Var relu(Var a);
  Var sum(Var a);
  /// sqrt(|v|^2 + eps), scalar result.
  Var norm(Var v, double eps = kNormEps);
  /// Elementwise atan2(y, x).
  Var atan2(Var y, Var x);
  /// lo + (hi - lo) * sigmoid(4 (v - mid) / (hi - lo)); unit slope at mid.
  Var smooth_clamp(Var v, double lo, double hi);
  /// mean + sigma * noise with the noise draw held constant. sigma may be a
  /// scalar or match mean elementwise.
  Var reparam(Var mean, Var sigma, std::span<const double> noise);
  Var slice(Var v, std::size_t offset, std::size_t length);
  /// Same values under a new shape of equal size.
  Var reshape(Var v, Shape shape);
  Var concat(std::span<const Var> parts);
  Var concat(std::initializer_list<Var> parts);

  /// Reverse pass from a scalar root. Adjoints of all nodes are reset first.
  void backward(Var root);

  [[nodiscard]] Shape shape(Var v) const { return nodes_[v.id()].shape; }
  [[nodiscard]] std::span<const double> value(Var v) const;
  [[nodiscard]] std::span<const double> grad(Var v) const;
  [[nodiscard]] bool needs_grad(Var v) const { return nodes_[v.id()].needs_grad; }

  [[nodiscard]] std::size_t node_count() const { return nodes_.size(); }
  /// Drops every node created after the first `count`.
  void truncate(std::size_t count);
  void clear() { truncate(0); }

  static constexpr double kNormEps = 1e-9;

 private:
  struct Node {
    Op op = Op::Leaf;
    bool needs_grad = false;
    Shape shape;
    std::uint32_t value_off = 0;
    std::uint32_t a = 0;
    std::uint32_t b = 0;
    // Reparam: offset of the frozen noise in values_. Concat: offset into
    // concat_parents_ with the part count in b.
    std::uint32_t aux = 0;
    double p0 = 0.0;
    double p1 = 0.0;
  };

  Var push(Op op, Shape shape, std::uint32_t a, std::uint32_t b, bool needs_grad);
  double* data(std::uint32_t id) { return values_.data() + nodes_[id].value_off; }
  const double* data(std::uint32_t id) const { return values_.data() + nodes_[id].value_off; }
  void check_same_tape(Var a) const;
  void check_finite(Var v) const;
  void backprop_node(std::uint32_t id);

  std::vector<Node> nodes_;
  std::vector<double> values_;
  std::vector<double> adjoints_;
  std::vector<std::uint32_t> concat_parents_;
  bool has_adjoints_ = false;
};

Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
Var operator*(Var a, Var b);
Var operator/(Var a, Var b);
Var operator*(double c, Var a);
Var operator*(Var a, double c);
Var operator+(Var a, double c);
Var operator-(Var a, double c);
Var operator-(Var a);

/// Scalar-valued program of one vector input, evaluated on a fresh tape.
using ScalarProgram = std::function<Var(Tape&, Var)>;

/// Max over coordinates of |analytic - central| / (|analytic| + |central| + 1e-12).
double grad_check(const ScalarProgram& f, std::span<const double> point, double h);

/// Analytic gradient of f at point.
std::vector<double> gradient(const ScalarProgram& f, std::span<const double> point);

}  // namespace posg::ad
