#pragma once
// =============================================================================
// Scalar reverse-mode AD
//
// A Tape records every operation applied to tracked scalars (Var) as a node
// holding at most two parent indices and the local partial derivatives. One
// reverse sweep from an output node yields the derivative of that output with
// respect to every leaf variable.
//
// A Var that is not attached to a tape is a plain constant: arithmetic on
// constants records nothing, so the same templated code can be evaluated
// either on doubles, on untracked Vars, or on a tape.
// =============================================================================

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

namespace wf {

// Sharpness and guard settings for the differentiable surrogates.
struct SmoothingConfig {
  double k = 50.0;          // bucket-mask sigmoid sharpness, per grid period
  double beta = 50.0;       // softplus sharpness, per currency unit
  double eps = 1e-12;       // division / log guard
  double trigger_k = 200.0; // CCR trigger sigmoid sharpness, on the ratio scale

  void validate() const;
};

enum class BinaryOp : std::uint8_t { add, sub, mul, div };
enum class UnaryOp : std::uint8_t {
  exp,
  log,
  neg,
  pow_const,
  sqrt,
  sigmoid,    // constant = sharpness k
  softplus,   // constant = sharpness beta
  normal_cdf,
};

enum class OpKind : std::uint8_t {
  leaf,
  add,
  sub,
  mul,
  div,
  exp,
  log,
  neg,
  pow_const,
  sqrt,
  sigmoid,
  softplus,
  normal_cdf,
};

std::string_view to_string(OpKind kind);

class Tape;

class Var {
 public:
  Var() = default;
  // Implicit: a double is an untracked constant.
  Var(double value) : value_(value) {}  // NOLINT

  double value() const { return value_; }
  std::uint32_t id() const { return id_; }
  Tape* tape() const { return tape_; }
  bool is_constant() const { return tape_ == nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::uint32_t id, double value) : tape_(tape), id_(id), value_(value) {}

  Tape* tape_ = nullptr;
  std::uint32_t id_ = 0;
  double value_ = 0.0;
};

class Tape {
 public:
  explicit Tape(double eps = 1e-12);

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // New independent variable.
  Var variable(double value);

  Var record_binary(BinaryOp op, const Var& a, const Var& b);
  Var record_unary(UnaryOp op, const Var& a, double constant = 0.0);

  // Derivatives of `output` with respect to every leaf, in creation order.
  std::vector<double> backward(const Var& output) const;
  // Same, reusing `adjoints` as scratch storage (resized to size()).
  void backward(const Var& output, std::vector<double>& adjoints, std::vector<double>& gradient) const;

  std::size_t size() const { return nodes_.size(); }
  std::size_t leaf_count() const { return leaves_.size(); }
  std::size_t guard_hits() const { return guard_hits_; }
  double eps() const { return eps_; }
  double value(std::uint32_t id) const { return values_[id]; }
  OpKind kind(std::uint32_t id) const { return nodes_[id].kind; }
  // Parent indices of a node; unused slots hold the node's own id.
  std::pair<std::uint32_t, std::uint32_t> parents(std::uint32_t id) const {
    return {nodes_[id].lhs, nodes_[id].rhs};
  }

  // Drops all nodes but keeps the allocated capacity.
  void clear();

 private:
  struct Node {
    std::uint32_t lhs;
    std::uint32_t rhs;
    double d_lhs;
    double d_rhs;
    OpKind kind;
    std::uint8_t arity;
  };

  Var push(double value, OpKind kind, std::uint8_t arity, std::uint32_t lhs, double d_lhs,
           std::uint32_t rhs, double d_rhs);

  std::vector<Node> nodes_;
  std::vector<double> values_;
  std::vector<std::uint32_t> leaves_;
  double eps_;
  std::size_t guard_hits_ = 0;
};

// ---- plain-double primitives ------------------------------------------------

// Sign-split evaluation, no overflow for any finite k*x.
double sigmoid(double x, double k);
// (1/beta) log(1 + exp(beta x)), overflow-safe.
double softplus(double x, double beta);
double normal_cdf(double x);
double normal_pdf(double x);

// ---- Var primitives -----------------------------------------------------------

Var operator+(const Var& a, const Var& b);
Var operator-(const Var& a, const Var& b);
Var operator*(const Var& a, const Var& b);
Var operator/(const Var& a, const Var& b);
Var operator-(const Var& a);
inline Var& operator+=(Var& a, const Var& b) { return a = a + b; }
inline Var& operator-=(Var& a, const Var& b) { return a = a - b; }
inline Var& operator*=(Var& a, const Var& b) { return a = a * b; }
inline Var& operator/=(Var& a, const Var& b) { return a = a / b; }

Var exp(const Var& a);
Var log(const Var& a);
Var sqrt(const Var& a);
Var pow(const Var& a, double exponent);
Var sigmoid(const Var& x, double k);
Var softplus(const Var& x, double beta);
Var normal_cdf(const Var& x);

inline double value_of(double x) { return x; }
inline double value_of(const Var& x) { return x.value(); }

// ---- composite surrogates (templated over double / Var) ----------------------

// sigma_k(tau - i) * (1 - sigma_k(tau - (i + 1))): ~1 on (i, i+1), ~0 elsewhere.
template <class T>
T double_sigmoid_mask(const T& tau, double bucket, double k) {
  return sigmoid(tau - bucket, k) * (1.0 - sigmoid(tau - (bucket + 1.0), k));
}

// Smooth min(a, b) = a - softplus(a - b); the remainder b - result is softplus(b - a) >= 0.
template <class T>
T smooth_min(const T& a, const T& b, double beta) {
  return a - softplus(a - b, beta);
}

template <class T>
T smooth_max(const T& a, const T& b, double beta) {
  return b + softplus(a - b, beta);
}

// Hard min/max that keep the gradient of the selected branch.
template <class T>
T hard_min(const T& a, const T& b) {
  return value_of(b) < value_of(a) ? b : a;
}

template <class T>
T hard_max(const T& a, const T& b) {
  return value_of(b) > value_of(a) ? b : a;
}

// Soft min of two non-negative amounts that is exactly 0 when either one is 0:
// -(1/beta) log(e^{-beta a} + e^{-beta b} - e^{-beta (a + b)}). Without the
// last term this is a - softplus(a - b), whose ln2/beta offset at a = b = 0
// would otherwise leak a payment out of an empty balance every period.
template <class T>
T anchored_smooth_min(const T& a, const T& b, double beta) {
  using std::exp;
  using std::log;
  const T m = hard_min(a, b);
  const T big = hard_max(a, b);
  if (value_of(big) <= 0.0) return value_of(big) < 0.0 ? m : big;
  return m - log(1.0 + exp(-beta * (big - m)) - exp(-beta * big)) / beta;
}

// ---- validation harness -------------------------------------------------------

using ScalarFunction = std::function<Var(std::span<const Var>)>;

// Max over parameters of |AAD - FD| / max(|FD|, 1e-8), FD = central difference
// with step h. The function is re-evaluated on untracked constants for the
// bumps, so it must be deterministic (fixed random draws).
double grad_check(const ScalarFunction& f, std::span<const double> x, double h);

// AAD gradient of f at x (one tape, one backward sweep).
std::vector<double> gradient(const ScalarFunction& f, std::span<const double> x, double eps = 1e-12);

}  // namespace wf
