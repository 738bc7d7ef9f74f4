#include "wf/autodiff.hpp"

#include <algorithm>
#include <limits>
#include <numbers>
#include <string>

#include "wf/errors.hpp"

namespace wf {

void SmoothingConfig::validate() const {
  require(k > 0.0, "smoothing.k must be > 0");
  require(beta > 0.0, "smoothing.beta must be > 0");
  require(eps > 0.0, "smoothing.eps must be > 0");
  require(trigger_k > 0.0, "smoothing.trigger_k must be > 0");
}

std::string_view to_string(OpKind kind) {
  switch (kind) {
    case OpKind::leaf: return "leaf";
    case OpKind::add: return "add";
    case OpKind::sub: return "sub";
    case OpKind::mul: return "mul";
    case OpKind::div: return "div";
    case OpKind::exp: return "exp";
    case OpKind::log: return "log";
    case OpKind::neg: return "neg";
    case OpKind::pow_const: return "pow_const";
    case OpKind::sqrt: return "sqrt";
    case OpKind::sigmoid: return "sigmoid";
    case OpKind::softplus: return "softplus";
    case OpKind::normal_cdf: return "normal_cdf";
  }
  return "unknown";
}

// ---- plain-double primitives ------------------------------------------------

double sigmoid(double x, double k) {
  const double z = k * x;
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double softplus(double x, double beta) {
  const double z = beta * x;
  return (std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)))) / beta;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x * std::numbers::sqrt2 * 0.5); }

double normal_pdf(double x) {
  constexpr double inv_sqrt_2pi = 0.3989422804014327;
  return inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

// ---- Tape -------------------------------------------------------------------

Tape::Tape(double eps) : eps_(eps) {
  require(eps > 0.0, "tape eps must be > 0");
}

void Tape::clear() {
  nodes_.clear();
  values_.clear();
  leaves_.clear();
  guard_hits_ = 0;
}

Var Tape::push(double value, OpKind kind, std::uint8_t arity, std::uint32_t lhs, double d_lhs,
               std::uint32_t rhs, double d_rhs) {
  const auto id = static_cast<std::uint32_t>(nodes_.size());
  if (arity < 2) {
    rhs = id;
    d_rhs = 0.0;
  }
  if (arity < 1) {
    lhs = id;
    d_lhs = 0.0;
  }
  nodes_.push_back(Node{lhs, rhs, d_lhs, d_rhs, kind, arity});
  values_.push_back(value);
  return Var(this, id, value);
}

Var Tape::variable(double value) {
  Var v = push(value, OpKind::leaf, 0, 0, 0.0, 0, 0.0);
  leaves_.push_back(v.id());
  return v;
}

Var Tape::record_binary(BinaryOp op, const Var& a, const Var& b) {
  const double x = a.value();
  double y = b.value();
  double value = 0.0;
  double dx = 0.0;
  double dy = 0.0;
  OpKind kind = OpKind::add;
  switch (op) {
    case BinaryOp::add:
      value = x + y, dx = 1.0, dy = 1.0, kind = OpKind::add;
      break;
    case BinaryOp::sub:
      value = x - y, dx = 1.0, dy = -1.0, kind = OpKind::sub;
      break;
    case BinaryOp::mul:
      value = x * y, dx = y, dy = x, kind = OpKind::mul;
      break;
    case BinaryOp::div:
      if (std::abs(y) < eps_) {
        y += (y >= 0.0 ? eps_ : -eps_);
        ++guard_hits_;
      }
      value = x / y, dx = 1.0 / y, dy = -value / y, kind = OpKind::div;
      break;
  }
  const bool ta = !a.is_constant();
  const bool tb = !b.is_constant();
  if (ta && tb) return push(value, kind, 2, a.id(), dx, b.id(), dy);
  if (ta) return push(value, kind, 1, a.id(), dx, 0, 0.0);
  if (tb) return push(value, kind, 1, b.id(), dy, 0, 0.0);
  return Var(value);
}

Var Tape::record_unary(UnaryOp op, const Var& a, double constant) {
  double x = a.value();
  double value = 0.0;
  double dx = 0.0;
  OpKind kind = OpKind::exp;
  switch (op) {
    case UnaryOp::exp:
      value = std::exp(x), dx = value, kind = OpKind::exp;
      break;
    case UnaryOp::log:
      if (x <= 0.0) {
        if (x <= -eps_) throw NumericalError("log of non-positive value " + std::to_string(x));
        x = eps_;
        ++guard_hits_;
      }
      value = std::log(x), dx = 1.0 / x, kind = OpKind::log;
      break;
    case UnaryOp::neg:
      value = -x, dx = -1.0, kind = OpKind::neg;
      break;
    case UnaryOp::pow_const:
      value = std::pow(x, constant), dx = constant * std::pow(x, constant - 1.0), kind = OpKind::pow_const;
      break;
    case UnaryOp::sqrt:
      if (x < 0.0) throw NumericalError("sqrt of negative value " + std::to_string(x));
      value = std::sqrt(x);
      if (value < eps_) {
        dx = 0.5 / std::sqrt(eps_);
        ++guard_hits_;
      } else {
        dx = 0.5 / value;
      }
      kind = OpKind::sqrt;
      break;
    case UnaryOp::sigmoid:
      value = sigmoid(x, constant), dx = constant * value * (1.0 - value), kind = OpKind::sigmoid;
      break;
    case UnaryOp::softplus:
      value = softplus(x, constant), dx = sigmoid(x, constant), kind = OpKind::softplus;
      break;
    case UnaryOp::normal_cdf:
      value = normal_cdf(x), dx = normal_pdf(x), kind = OpKind::normal_cdf;
      break;
  }
  if (a.is_constant()) return Var(value);
  return push(value, kind, 1, a.id(), dx, 0, 0.0);
}

std::vector<double> Tape::backward(const Var& output) const {
  std::vector<double> adjoints;
  std::vector<double> gradient;
  backward(output, adjoints, gradient);
  return gradient;
}

void Tape::backward(const Var& output, std::vector<double>& adjoints, std::vector<double>& gradient) const {
  gradient.assign(leaves_.size(), 0.0);
  if (output.is_constant()) return;
  if (output.tape() != this) throw ConfigError("backward: output recorded on a different tape");
  adjoints.assign(nodes_.size(), 0.0);
  adjoints[output.id()] = 1.0;
  for (std::size_t i = output.id() + 1; i-- > 0;) {
    const double adj = adjoints[i];
    if (adj == 0.0) continue;
    const Node& n = nodes_[i];
    if (std::isnan(adj) || std::isnan(n.d_lhs) || std::isnan(n.d_rhs)) {
      throw NumericalError("backward: NaN at node " + std::to_string(i) + " (" +
                           std::string(to_string(n.kind)) + ")");
    }
    if (n.arity >= 1) adjoints[n.lhs] += adj * n.d_lhs;
    if (n.arity >= 2) adjoints[n.rhs] += adj * n.d_rhs;
  }
  for (std::size_t j = 0; j < leaves_.size(); ++j) gradient[j] = adjoints[leaves_[j]];
}

// ---- Var primitives -----------------------------------------------------------

namespace {

Var binary(BinaryOp op, const Var& a, const Var& b) {
  if (a.is_constant() && b.is_constant()) {
    switch (op) {
      case BinaryOp::add: return a.value() + b.value();
      case BinaryOp::sub: return a.value() - b.value();
      case BinaryOp::mul: return a.value() * b.value();
      case BinaryOp::div: return a.value() / b.value();
    }
  }
  Tape* tape = a.tape() ? a.tape() : b.tape();
  if (a.tape() && b.tape() && a.tape() != b.tape())
    throw ConfigError("operands recorded on different tapes");
  return tape->record_binary(op, a, b);
}

Var unary(UnaryOp op, const Var& a, double c = 0.0) {
  if (a.is_constant()) {
    const double x = a.value();
    switch (op) {
      case UnaryOp::exp: return std::exp(x);
      case UnaryOp::log:
        if (x <= 0.0) throw NumericalError("log of non-positive value " + std::to_string(x));
        return std::log(x);
      case UnaryOp::neg: return -x;
      case UnaryOp::pow_const: return std::pow(x, c);
      case UnaryOp::sqrt: return std::sqrt(x);
      case UnaryOp::sigmoid: return sigmoid(x, c);
      case UnaryOp::softplus: return softplus(x, c);
      case UnaryOp::normal_cdf: return normal_cdf(x);
    }
  }
  return a.tape()->record_unary(op, a, c);
}

}  // namespace

Var operator+(const Var& a, const Var& b) { return binary(BinaryOp::add, a, b); }
Var operator-(const Var& a, const Var& b) { return binary(BinaryOp::sub, a, b); }
Var operator*(const Var& a, const Var& b) { return binary(BinaryOp::mul, a, b); }
Var operator/(const Var& a, const Var& b) { return binary(BinaryOp::div, a, b); }
Var operator-(const Var& a) { return unary(UnaryOp::neg, a); }

Var exp(const Var& a) { return unary(UnaryOp::exp, a); }
Var log(const Var& a) { return unary(UnaryOp::log, a); }
Var sqrt(const Var& a) { return unary(UnaryOp::sqrt, a); }
Var pow(const Var& a, double exponent) { return unary(UnaryOp::pow_const, a, exponent); }
Var sigmoid(const Var& x, double k) { return unary(UnaryOp::sigmoid, x, k); }
Var softplus(const Var& x, double beta) { return unary(UnaryOp::softplus, x, beta); }
Var normal_cdf(const Var& x) { return unary(UnaryOp::normal_cdf, x); }

// ---- validation harness -------------------------------------------------------

std::vector<double> gradient(const ScalarFunction& f, std::span<const double> x, double eps) {
  Tape tape(eps);
  std::vector<Var> leaves;
  leaves.reserve(x.size());
  for (double xi : x) leaves.push_back(tape.variable(xi));
  const Var out = f(leaves);
  if (!std::isfinite(out.value())) throw NumericalError("gradient: non-finite function value");
  return tape.backward(out);
}

double grad_check(const ScalarFunction& f, std::span<const double> x, double h) {
  require(h > 0.0, "grad_check: step must be > 0");
  const std::vector<double> aad = gradient(f, x);
  std::vector<Var> point(x.begin(), x.end());
  auto eval = [&](std::size_t i, double bump) {
    std::vector<Var> p = point;
    p[i] = Var(x[i] + bump);
    const double v = f(p).value();
    if (!std::isfinite(v)) throw NumericalError("grad_check: non-finite function value");
    return v;
  };
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double fd = (eval(i, h) - eval(i, -h)) / (2.0 * h);
    worst = std::max(worst, std::abs(aad[i] - fd) / std::max(std::abs(fd), 1e-8));
  }
  return worst;
}

}  // namespace wf
