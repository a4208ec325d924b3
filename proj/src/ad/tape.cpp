#include "posg/ad/tape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace posg::ad {

namespace {

double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus_value(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

std::string shape_str(Shape s) {
  return "(" + std::to_string(s.rows) + "x" + std::to_string(s.cols) + ")";
}

Shape column(std::size_t n) { return Shape{static_cast<std::uint32_t>(n), 1}; }

}  // namespace

Shape Var::shape() const { return tape_->shape(*this); }
std::span<const double> Var::value() const { return tape_->value(*this); }
std::span<const double> Var::grad() const { return tape_->grad(*this); }

double Var::scalar() const {
  auto v = value();
  if (v.size() != 1) {
    throw TapeError("scalar() on non-scalar node " + shape_str(shape()));
  }
  return v[0];
}

std::span<const double> Tape::value(Var v) const {
  const Node& n = nodes_[v.id()];
  return {values_.data() + n.value_off, n.shape.size()};
}

std::span<const double> Tape::grad(Var v) const {
  const Node& n = nodes_[v.id()];
  if (!has_adjoints_) {
    throw TapeError("grad() requested before backward()");
  }
  return {adjoints_.data() + n.value_off, n.shape.size()};
}

void Tape::check_same_tape(Var a) const {
  if (&a.tape() != this || a.id() >= nodes_.size()) {
    throw TapeError("operand does not belong to this tape");
  }
}

void Tape::check_finite(Var v) const {
  for (double x : value(v)) {
    if (!std::isfinite(x)) {
      throw TapeError("non-finite value produced by op " +
                      std::to_string(static_cast<int>(nodes_[v.id()].op)));
    }
  }
}

Var Tape::push(Op op, Shape shape, std::uint32_t a, std::uint32_t b, bool needs_grad) {
  Node n;
  n.op = op;
  n.shape = shape;
  n.a = a;
  n.b = b;
  n.needs_grad = needs_grad;
  n.value_off = static_cast<std::uint32_t>(values_.size());
  values_.resize(values_.size() + shape.size());
  nodes_.push_back(n);
  has_adjoints_ = false;
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

void Tape::truncate(std::size_t count) {
  if (count >= nodes_.size()) {
    return;
  }
  for (std::size_t i = count; i < nodes_.size(); ++i) {
    if (nodes_[i].op == Op::Concat) {
      concat_parents_.resize(nodes_[i].aux);
      break;
    }
  }
  values_.resize(nodes_[count].value_off);
  nodes_.resize(count);
  has_adjoints_ = false;
}

Var Tape::lift(std::span<const double> value, Shape shape, bool parameter) {
  if (shape.size() != value.size()) {
    throw TapeError("lift: value size does not match shape " + shape_str(shape));
  }
  for (double x : value) {
    if (!std::isfinite(x)) {
      throw TapeError("lift: non-finite input");
    }
  }
  Var v = push(Op::Leaf, shape, 0, 0, parameter);
  std::copy(value.begin(), value.end(), data(v.id()));
  return v;
}

Var Tape::lift(std::span<const double> value, bool parameter) {
  return lift(value, column(value.size()), parameter);
}

Var Tape::lift(double value, bool parameter) {
  return lift(std::span<const double>(&value, 1), Shape{}, parameter);
}

Var Tape::add(Var a, Var b) {
  check_same_tape(a);
  check_same_tape(b);
  if (shape(a) != shape(b)) {
    throw TapeError("add: shape mismatch " + shape_str(shape(a)) + " vs " + shape_str(shape(b)));
  }
  Var r = push(Op::Add, shape(a), a.id(), b.id(), needs_grad(a) || needs_grad(b));
  const std::size_t n = shape(a).size();
  const double* x = data(a.id());
  const double* y = data(b.id());
  double* out = data(r.id());
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = x[i] + y[i];
  }
  check_finite(r);
  return r;
}

Var Tape::sub(Var a, Var b) {
  check_same_tape(a);
  check_same_tape(b);
  if (shape(a) != shape(b)) {
    throw TapeError("sub: shape mismatch " + shape_str(shape(a)) + " vs " + shape_str(shape(b)));
  }
  Var r = push(Op::Sub, shape(a), a.id(), b.id(), needs_grad(a) || needs_grad(b));
  const std::size_t n = shape(a).size();
  const double* x = data(a.id());
  const double* y = data(b.id());
  double* out = data(r.id());
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = x[i] - y[i];
  }
  check_finite(r);
  return r;
}

Var Tape::mul(Var a, Var b) {
  check_same_tape(a);
  check_same_tape(b);
  const Shape sa = shape(a);
  const Shape sb = shape(b);
  if (sa != sb && !sa.is_scalar() && !sb.is_scalar()) {
    throw TapeError("mul: shape mismatch " + shape_str(sa) + " vs " + shape_str(sb));
  }
  const Shape so = sa.is_scalar() ? sb : sa;
  Var r = push(Op::Mul, so, a.id(), b.id(), needs_grad(a) || needs_grad(b));
  const double* x = data(a.id());
  const double* y = data(b.id());
  double* out = data(r.id());
  const std::size_t n = so.size();
  const std::size_t sx = sa.is_scalar() ? 0 : 1;
  const std::size_t sy = sb.is_scalar() ? 0 : 1;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = x[i * sx] * y[i * sy];
  }
  check_finite(r);
  return r;
}

Var Tape::div(Var a, Var b) {
  check_same_tape(a);
  check_same_tape(b);
  const Shape sa = shape(a);
  const Shape sb = shape(b);
  if (sa != sb && !sb.is_scalar()) {
    throw TapeError("div: shape mismatch " + shape_str(sa) + " vs " + shape_str(sb));
  }
  for (double d : value(b)) {
    if (d == 0.0) {
      throw TapeError("div: division by zero");
    }
  }
  Var r = push(Op::Div, sa, a.id(), b.id(), needs_grad(a) || needs_grad(b));
  const double* x = data(a.id());
  const double* y = data(b.id());
  double* out = data(r.id());
  const std::size_t sy = sb.is_scalar() ? 0 : 1;
  for (std::size_t i = 0; i < sa.size(); ++i) {
    out[i] = x[i] / y[i * sy];
  }
  check_finite(r);
  return r;
}

Var Tape::scale(Var a, double c) {
  check_same_tape(a);
  Var r = push(Op::Scale, shape(a), a.id(), 0, needs_grad(a));
  nodes_[r.id()].p0 = c;
  const double* x = data(a.id());
  double* out = data(r.id());
  for (std::size_t i = 0; i < shape(a).size(); ++i) {
    out[i] = c * x[i];
  }
  check_finite(r);
  return r;
}

Var Tape::add_const(Var a, double c) {
  check_same_tape(a);
  Var r = push(Op::AddConst, shape(a), a.id(), 0, needs_grad(a));
  const double* x = data(a.id());
  double* out = data(r.id());
  for (std::size_t i = 0; i < shape(a).size(); ++i) {
    out[i] = x[i] + c;
  }
  check_finite(r);
  return r;
}

Var Tape::matvec(Var m, Var v) {
  check_same_tape(m);
  check_same_tape(v);
  const Shape sm = shape(m);
  if (shape(v).size() != sm.cols) {
    throw TapeError("matvec: " + shape_str(sm) + " times vector of size " +
                    std::to_string(shape(v).size()));
  }
  Var r = push(Op::MatVec, column(sm.rows), m.id(), v.id(), needs_grad(m) || needs_grad(v));
  const double* w = data(m.id());
  const double* x = data(v.id());
  double* out = data(r.id());
  const std::size_t cols = sm.cols;
  for (std::size_t i = 0; i < sm.rows; ++i) {
    const double* row = w + i * cols;
    double acc = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      acc += row[j] * x[j];
    }
    out[i] = acc;
  }
  check_finite(r);
  return r;
}

namespace {
template <typename F>
void map_unary(const double* x, double* out, std::size_t n, F f) {
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = f(x[i]);
  }
}
}  // namespace

Var Tape::tanh(Var a) {
  check_same_tape(a);
  Var r = push(Op::Tanh, shape(a), a.id(), 0, needs_grad(a));
  map_unary(data(a.id()), data(r.id()), shape(a).size(), [](double x) { return std::tanh(x); });
  return r;
}

Var Tape::exp(Var a) {
  check_same_tape(a);
  Var r = push(Op::Exp, shape(a), a.id(), 0, needs_grad(a));
  map_unary(data(a.id()), data(r.id()), shape(a).size(), [](double x) { return std::exp(x); });
  check_finite(r);
  return r;
}

Var Tape::log(Var a) {
  check_same_tape(a);
  for (double x : value(a)) {
    if (!(x > 0.0)) {
      throw TapeError("log of non-positive value");
    }
  }
  Var r = push(Op::Log, shape(a), a.id(), 0, needs_grad(a));
  map_unary(data(a.id()), data(r.id()), shape(a).size(), [](double x) { return std::log(x); });
  return r;
}

Var Tape::sqrt(Var a) {
  check_same_tape(a);
  for (double x : value(a)) {
    if (x < 0.0) {
      throw TapeError("sqrt of negative value");
    }
  }
  Var r = push(Op::Sqrt, shape(a), a.id(), 0, needs_grad(a));
  map_unary(data(a.id()), data(r.id()), shape(a).size(), [](double x) { return std::sqrt(x); });
  return r;
}

Var Tape::square(Var a) {
  check_same_tape(a);
  Var r = push(Op::Square, shape(a), a.id(), 0, needs_grad(a));
  map_unary(data(a.id()), data(r.id()), shape(a).size(), [](double x) { return x * x; });
  check_finite(r);
  return r;
}

Var Tape::softplus(Var a) {
  check_same_tape(a);
  Var r = push(Op::Softplus, shape(a), a.id(), 0, needs_grad(a));
  map_unary(data(a.id()), data(r.id()), shape(a).size(), softplus_value);
  return r;
}

Var Tape::relu(Var a) {
  check_same_tape(a);
  Var r = push(Op::Relu, shape(a), a.id(), 0, needs_grad(a));
  map_unary(data(a.id()), data(r.id()), shape(a).size(), [](double x) { return x > 0.0 ? x : 0.0; });
  return r;
}

Var Tape::sum(Var a) {
  check_same_tape(a);
  Var r = push(Op::Sum, Shape{}, a.id(), 0, needs_grad(a));
  double acc = 0.0;
  for (double x : value(a)) {
    acc += x;
  }
  *data(r.id()) = acc;
  check_finite(r);
  return r;
}

Var Tape::norm(Var v, double eps) {
  check_same_tape(v);
  if (eps < 0.0) {
    throw TapeError("norm: negative epsilon");
  }
  Var r = push(Op::Norm, Shape{}, v.id(), 0, needs_grad(v));
  nodes_[r.id()].p0 = eps;
  double acc = eps;
  for (double x : value(v)) {
    acc += x * x;
  }
  *data(r.id()) = std::sqrt(acc);
  check_finite(r);
  return r;
}

Var Tape::atan2(Var y, Var x) {
  check_same_tape(y);
  check_same_tape(x);
  if (shape(y) != shape(x)) {
    throw TapeError("atan2: shape mismatch");
  }
  Var r = push(Op::Atan2, shape(y), y.id(), x.id(), needs_grad(y) || needs_grad(x));
  const double* py = data(y.id());
  const double* px = data(x.id());
  double* out = data(r.id());
  for (std::size_t i = 0; i < shape(y).size(); ++i) {
    out[i] = std::atan2(py[i], px[i]);
  }
  return r;
}

Var Tape::smooth_clamp(Var v, double lo, double hi) {
  check_same_tape(v);
  if (!(hi > lo)) {
    throw TapeError("smooth_clamp: empty interval");
  }
  Var r = push(Op::SmoothClamp, shape(v), v.id(), 0, needs_grad(v));
  nodes_[r.id()].p0 = lo;
  nodes_[r.id()].p1 = hi;
  const double mid = 0.5 * (lo + hi);
  const double k = 4.0 / (hi - lo);
  map_unary(data(v.id()), data(r.id()), shape(v).size(),
            [&](double x) { return lo + (hi - lo) * sigmoid(k * (x - mid)); });
  return r;
}

Var Tape::reparam(Var mean, Var sigma, std::span<const double> noise) {
  check_same_tape(mean);
  check_same_tape(sigma);
  const Shape sm = shape(mean);
  if (noise.size() != sm.size()) {
    throw TapeError("reparam: noise size does not match mean");
  }
  if (shape(sigma) != sm && !shape(sigma).is_scalar()) {
    throw TapeError("reparam: sigma must be scalar or match mean");
  }
  for (double e : noise) {
    if (!std::isfinite(e)) {
      throw TapeError("reparam: non-finite noise");
    }
  }
  Var r = push(Op::Reparam, sm, mean.id(), sigma.id(), needs_grad(mean) || needs_grad(sigma));
  const std::uint32_t noise_off = static_cast<std::uint32_t>(values_.size());
  values_.insert(values_.end(), noise.begin(), noise.end());
  nodes_[r.id()].aux = noise_off;
  const double* mu = data(mean.id());
  const double* s = data(sigma.id());
  const std::size_t ss = shape(sigma).is_scalar() ? 0 : 1;
  double* out = data(r.id());
  const double* eps = values_.data() + noise_off;
  for (std::size_t i = 0; i < sm.size(); ++i) {
    out[i] = mu[i] + s[i * ss] * eps[i];
  }
  check_finite(r);
  return r;
}

Var Tape::slice(Var v, std::size_t offset, std::size_t length) {
  check_same_tape(v);
  if (offset + length > shape(v).size()) {
    throw TapeError("slice out of range");
  }
  Var r = push(Op::Slice, column(length), v.id(), 0, needs_grad(v));
  nodes_[r.id()].aux = static_cast<std::uint32_t>(offset);
  const double* x = data(v.id()) + offset;
  std::copy(x, x + length, data(r.id()));
  return r;
}

Var Tape::reshape(Var v, Shape to) {
  check_same_tape(v);
  if (to.size() != shape(v).size()) {
    throw TapeError("reshape changes the element count");
  }
  Var r = push(Op::Slice, to, v.id(), 0, needs_grad(v));
  const double* x = data(v.id());
  std::copy(x, x + to.size(), data(r.id()));
  return r;
}

Var Tape::concat(std::span<const Var> parts) {
  std::size_t total = 0;
  bool ng = false;
  for (Var p : parts) {
    check_same_tape(p);
    total += shape(p).size();
    ng = ng || needs_grad(p);
  }
  const auto mark = static_cast<std::uint32_t>(concat_parents_.size());
  for (Var p : parts) {
    concat_parents_.push_back(p.id());
  }
  Var r = push(Op::Concat, column(total), 0, static_cast<std::uint32_t>(parts.size()), ng);
  nodes_[r.id()].aux = mark;
  double* out = data(r.id());
  for (Var p : parts) {
    auto v = value(p);
    out = std::copy(v.begin(), v.end(), out);
  }
  return r;
}

Var Tape::concat(std::initializer_list<Var> parts) {
  return concat(std::span<const Var>(parts.begin(), parts.size()));
}

void Tape::backward(Var root) {
  check_same_tape(root);
  if (!shape(root).is_scalar()) {
    throw TapeError("backward: root must be scalar, got " + shape_str(shape(root)));
  }
  adjoints_.assign(values_.size(), 0.0);
  has_adjoints_ = true;
  adjoints_[nodes_[root.id()].value_off] = 1.0;
  for (std::uint32_t id = root.id() + 1; id-- > 0;) {
    if (nodes_[id].needs_grad && nodes_[id].op != Op::Leaf) {
      backprop_node(id);
    }
  }
}

void Tape::backprop_node(std::uint32_t id) {
  const Node& n = nodes_[id];
  const std::size_t size = n.shape.size();
  const double* g = adjoints_.data() + n.value_off;
  const double* y = values_.data() + n.value_off;

  auto adj = [&](std::uint32_t p) { return adjoints_.data() + nodes_[p].value_off; };
  auto val = [&](std::uint32_t p) { return values_.data() + nodes_[p].value_off; };
  auto wants = [&](std::uint32_t p) { return nodes_[p].needs_grad; };

  switch (n.op) {
    case Op::Leaf:
      break;
    case Op::Add:
    case Op::Sub: {
      const double sign = n.op == Op::Add ? 1.0 : -1.0;
      if (wants(n.a)) {
        double* ga = adj(n.a);
        for (std::size_t i = 0; i < size; ++i) ga[i] += g[i];
      }
      if (wants(n.b)) {
        double* gb = adj(n.b);
        for (std::size_t i = 0; i < size; ++i) gb[i] += sign * g[i];
      }
      break;
    }
    case Op::Mul: {
      const bool sa = nodes_[n.a].shape.is_scalar() && !n.shape.is_scalar();
      const bool sb = nodes_[n.b].shape.is_scalar() && !n.shape.is_scalar();
      const double* xa = val(n.a);
      const double* xb = val(n.b);
      if (wants(n.a)) {
        double* ga = adj(n.a);
        for (std::size_t i = 0; i < size; ++i) ga[sa ? 0 : i] += g[i] * xb[sb ? 0 : i];
      }
      if (wants(n.b)) {
        double* gb = adj(n.b);
        for (std::size_t i = 0; i < size; ++i) gb[sb ? 0 : i] += g[i] * xa[sa ? 0 : i];
      }
      break;
    }
    case Op::Div: {
      const bool sb = nodes_[n.b].shape.is_scalar() && !n.shape.is_scalar();
      const double* xb = val(n.b);
      if (wants(n.a)) {
        double* ga = adj(n.a);
        for (std::size_t i = 0; i < size; ++i) ga[i] += g[i] / xb[sb ? 0 : i];
      }
      if (wants(n.b)) {
        double* gb = adj(n.b);
        for (std::size_t i = 0; i < size; ++i) gb[sb ? 0 : i] -= g[i] * y[i] / xb[sb ? 0 : i];
      }
      break;
    }
    case Op::Scale: {
      double* ga = adj(n.a);
      for (std::size_t i = 0; i < size; ++i) ga[i] += n.p0 * g[i];
      break;
    }
    case Op::AddConst:
    case Op::Slice: {
      double* ga = adj(n.a) + (n.op == Op::Slice ? n.aux : 0);
      for (std::size_t i = 0; i < size; ++i) ga[i] += g[i];
      break;
    }
    case Op::MatVec: {
      const Shape sm = nodes_[n.a].shape;
      const std::size_t cols = sm.cols;
      const double* w = val(n.a);
      const double* x = val(n.b);
      if (wants(n.a)) {
        double* gw = adj(n.a);
        for (std::size_t i = 0; i < sm.rows; ++i) {
          const double gi = g[i];
          if (gi == 0.0) continue;
          double* row = gw + i * cols;
          for (std::size_t j = 0; j < cols; ++j) row[j] += gi * x[j];
        }
      }
      if (wants(n.b)) {
        double* gx = adj(n.b);
        for (std::size_t i = 0; i < sm.rows; ++i) {
          const double gi = g[i];
          if (gi == 0.0) continue;
          const double* row = w + i * cols;
          for (std::size_t j = 0; j < cols; ++j) gx[j] += gi * row[j];
        }
      }
      break;
    }
    case Op::Tanh: {
      double* ga = adj(n.a);
      for (std::size_t i = 0; i < size; ++i) ga[i] += g[i] * (1.0 - y[i] * y[i]);
      break;
    }
    case Op::Exp: {
      double* ga = adj(n.a);
      for (std::size_t i = 0; i < size; ++i) ga[i] += g[i] * y[i];
      break;
    }
    case Op::Log: {
      double* ga = adj(n.a);
      const double* x = val(n.a);
      for (std::size_t i = 0; i < size; ++i) ga[i] += g[i] / x[i];
      break;
    }
    case Op::Sqrt: {
      double* ga = adj(n.a);
      for (std::size_t i = 0; i < size; ++i) {
        if (y[i] > 0.0) ga[i] += 0.5 * g[i] / y[i];
      }
      break;
    }
    case Op::Square: {
      double* ga = adj(n.a);
      const double* x = val(n.a);
      for (std::size_t i = 0; i < size; ++i) ga[i] += 2.0 * g[i] * x[i];
      break;
    }
    case Op::Softplus: {
      double* ga = adj(n.a);
      const double* x = val(n.a);
      for (std::size_t i = 0; i < size; ++i) ga[i] += g[i] * sigmoid(x[i]);
      break;
    }
    case Op::Relu: {
      double* ga = adj(n.a);
      const double* x = val(n.a);
      for (std::size_t i = 0; i < size; ++i) {
        if (x[i] > 0.0) ga[i] += g[i];
      }
      break;
    }
    case Op::Sum: {
      double* ga = adj(n.a);
      const std::size_t m = nodes_[n.a].shape.size();
      for (std::size_t i = 0; i < m; ++i) ga[i] += g[0];
      break;
    }
    case Op::Norm: {
      double* ga = adj(n.a);
      const double* x = val(n.a);
      const std::size_t m = nodes_[n.a].shape.size();
      for (std::size_t i = 0; i < m; ++i) ga[i] += g[0] * x[i] / y[0];
      break;
    }
    case Op::Atan2: {
      const double* py = val(n.a);
      const double* px = val(n.b);
      for (std::size_t i = 0; i < size; ++i) {
        const double r2 = px[i] * px[i] + py[i] * py[i];
        if (r2 == 0.0) continue;
        if (wants(n.a)) adj(n.a)[i] += g[i] * px[i] / r2;
        if (wants(n.b)) adj(n.b)[i] -= g[i] * py[i] / r2;
      }
      break;
    }
    case Op::SmoothClamp: {
      double* ga = adj(n.a);
      const double width = n.p1 - n.p0;
      for (std::size_t i = 0; i < size; ++i) {
        const double s = (y[i] - n.p0) / width;
        ga[i] += g[i] * 4.0 * s * (1.0 - s);
      }
      break;
    }
    case Op::Reparam: {
      const double* eps = values_.data() + n.aux;
      if (wants(n.a)) {
        double* ga = adj(n.a);
        for (std::size_t i = 0; i < size; ++i) ga[i] += g[i];
      }
      if (wants(n.b)) {
        const bool ss = nodes_[n.b].shape.is_scalar();
        double* gb = adj(n.b);
        for (std::size_t i = 0; i < size; ++i) gb[ss ? 0 : i] += g[i] * eps[i];
      }
      break;
    }
    case Op::Concat: {
      std::size_t off = 0;
      for (std::uint32_t k = 0; k < n.b; ++k) {
        const std::uint32_t p = concat_parents_[n.aux + k];
        const std::size_t m = nodes_[p].shape.size();
        if (wants(p)) {
          double* gp = adj(p);
          for (std::size_t i = 0; i < m; ++i) gp[i] += g[off + i];
        }
        off += m;
      }
      break;
    }
  }
}

Var operator+(Var a, Var b) { return a.tape().add(a, b); }
Var operator-(Var a, Var b) { return a.tape().sub(a, b); }
Var operator*(Var a, Var b) { return a.tape().mul(a, b); }
Var operator/(Var a, Var b) { return a.tape().div(a, b); }
Var operator*(double c, Var a) { return a.tape().scale(a, c); }
Var operator*(Var a, double c) { return a.tape().scale(a, c); }
Var operator+(Var a, double c) { return a.tape().add_const(a, c); }
Var operator-(Var a, double c) { return a.tape().add_const(a, -c); }
Var operator-(Var a) { return a.tape().scale(a, -1.0); }

std::vector<double> gradient(const ScalarProgram& f, std::span<const double> point) {
  Tape tape;
  Var x = tape.lift(point, true);
  Var y = f(tape, x);
  tape.backward(y);
  auto g = x.grad();
  return {g.begin(), g.end()};
}

double grad_check(const ScalarProgram& f, std::span<const double> point, double h) {
  const std::vector<double> analytic = gradient(f, point);
  std::vector<double> probe(point.begin(), point.end());
  auto eval = [&](const std::vector<double>& at) {
    Tape tape;
    return f(tape, tape.lift(at)).scalar();
  };
  double worst = 0.0;
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const double saved = probe[i];
    probe[i] = saved + h;
    const double up = eval(probe);
    probe[i] = saved - h;
    const double down = eval(probe);
    probe[i] = saved;
    const double central = (up - down) / (2.0 * h);
    const double err =
        std::abs(analytic[i] - central) / (std::abs(analytic[i]) + std::abs(central) + 1e-12);
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace posg::ad
