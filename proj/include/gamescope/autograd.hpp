#pragma once

// Reverse-mode automatic differentiation over dense matrices.
//
// Every operation records its inputs and a backward rule written in terms of
// other recorded operations, so gradients can themselves be differentiated
// (GraphMode::create). That is what makes Jacobian-vector products of a game
// vector field, and the input-gradient penalty of WGAN-GP, expressible.

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "gamescope/params.hpp"

namespace gamescope::autograd {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace detail {
struct Node;
}

class Var {
 public:
  Var() = default;

  /// A value that gradients never flow into.
  static Var constant(Matrix value);
  /// A value that gradients are taken with respect to.
  static Var leaf(Matrix value);

  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  double scalar() const;
  bool requires_grad() const;
  bool defined() const { return node_ != nullptr; }

  /// Same value, cut from the graph.
  Var detached() const { return constant(value()); }

  bool same_node(const Var& other) const { return node_ == other.node_; }

  /// Wraps a recorded node; used by the operation implementations.
  explicit Var(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  const std::shared_ptr<detail::Node>& node() const { return node_; }

 private:
  std::shared_ptr<detail::Node> node_;
};

/// Record an operation. `backward(inputs, output, upstream)` returns one
/// gradient per input (an undefined Var for "no contribution"). Throws
/// NumericError naming `op` if the value is not finite.
Var make_op(const char* op, Matrix value, std::vector<Var> inputs,
            std::function<std::vector<Var>(const std::vector<Var>&, const Var&, const Var&)> backward);

// Linear algebra and elementwise primitives.
Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double c);
Var add_scalar(const Var& a, double c);
/// a (n x m) plus a 1 x m row broadcast over every row.
Var add_row(const Var& a, const Var& row);
Var relu(const Var& a);
Var sigmoid(const Var& a);
Var log(const Var& a);
Var reciprocal(const Var& a);
Var abs(const Var& a);
Var square(const Var& a);
Var clamp(const Var& a, double lo, double hi);

// Reductions and reshapes.
Var sum(const Var& a);
Var mean(const Var& a);
/// Column sums, as a 1 x m row.
Var sum_rows(const Var& a);
/// Repeat a 1 x m row n times.
Var broadcast_rows(const Var& row, Eigen::Index n);
/// Fill an r x c matrix with a 1x1 value.
Var expand(const Var& s, Eigen::Index rows, Eigen::Index cols);
/// rows x cols block read row-major from a column vector starting at offset.
Var slice(const Var& flat, Eigen::Index offset, Eigen::Index rows, Eigen::Index cols);
/// Inverse of slice: place a block row-major into a zero column vector.
Var scatter(const Var& block, Eigen::Index offset, Eigen::Index total);
/// Stack two column vectors.
Var vcat(const Var& a, const Var& b);
Var dot(const Var& a, const Var& b);

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator-(const Var& a) { return scale(a, -1.0); }
inline Var operator*(double c, const Var& a) { return scale(a, c); }

enum class GraphMode {
  /// Gradients come back as constants; nothing further is recorded.
  discard,
  /// Gradients are recorded so they can be differentiated again.
  create,
};

/// Gradients of the scalar `y` with respect to each of `wrt`. Targets may be
/// interior nodes; unreachable targets receive zeros of their shape.
std::vector<Var> grad(const Var& y, std::span<const Var> wrt, GraphMode mode = GraphMode::discard);
Var grad(const Var& y, const Var& wrt, GraphMode mode = GraphMode::discard);

/// Whether operations on this thread currently record a graph.
bool grad_enabled();

/// Keeps freed large blocks in the heap so the many same-sized temporaries
/// of a training loop are reused instead of mapped afresh. Call once at
/// program start; a no-op outside glibc.
void tune_allocator();

/// Scoped switch for recording on this thread.
class GradModeGuard {
 public:
  explicit GradModeGuard(bool enabled);
  ~GradModeGuard();
  GradModeGuard(const GradModeGuard&) = delete;
  GradModeGuard& operator=(const GradModeGuard&) = delete;

 private:
  bool previous_;
};

/// Stops recording: operations produce constants.
class NoGradGuard : public GradModeGuard {
 public:
  NoGradGuard() : GradModeGuard(false) {}
};

using ScalarFunction = std::function<Var(const Var&)>;
using VectorFunction = std::function<Var(const Var&)>;

/// Gradient of a scalar function of a flat parameter column vector.
Vector gradient(const ScalarFunction& f, const Vector& omega);

/// Jacobian-vector product J(omega) u of a vector field, by two reverse
/// passes. `field` must build its output with GraphMode::create wherever it
/// takes gradients internally.
Vector jvp(const VectorFunction& field, const Vector& omega, const Vector& u);
/// Linearizes `field` at omega once; each call of the result is one reverse
/// pass over the retained graph.
std::function<Vector(const Vector&)> jvp_operator(const VectorFunction& field, const Vector& omega);
/// Transposed product J(omega)^T u in one reverse pass.
Vector vjp(const VectorFunction& field, const Vector& omega, const Vector& u);

/// Layout-preserving forms; jvp requires u to share omega's layout.
ParamVector gradient(const ScalarFunction& f, const ParamVector& omega);
ParamVector jvp(const VectorFunction& field, const ParamVector& omega, const ParamVector& u);

}  // namespace gamescope::autograd
