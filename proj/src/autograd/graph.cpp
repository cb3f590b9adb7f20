#include <algorithm>
#include <unordered_map>
#include <unordered_set>

#include <fmt/format.h>

#ifdef __GLIBC__
#include <malloc.h>
#endif

#include "gamescope/autograd.hpp"
#include "gamescope/error.hpp"

namespace gamescope::autograd {
namespace detail {

using Backward = std::function<std::vector<Var>(const std::vector<Var>&, const Var&, const Var&)>;

struct Node {
  Matrix value;
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<Var> inputs;
  Backward backward;
};

namespace {
thread_local bool recording = true;
}

bool is_recording() { return recording; }
void set_recording(bool on) { recording = on; }

}  // namespace detail

Var Var::constant(Matrix value) {
  auto node = std::make_shared<detail::Node>();
  node->value = std::move(value);
  node->op = "constant";
  return Var(std::move(node));
}

Var Var::leaf(Matrix value) {
  auto node = std::make_shared<detail::Node>();
  node->value = std::move(value);
  node->requires_grad = true;
  return Var(std::move(node));
}

const Matrix& Var::value() const { return node_->value; }

double Var::scalar() const {
  if (value().size() != 1) {
    throw ShapeError(fmt::format("expected a 1x1 value, got {}x{}", rows(), cols()));
  }
  return value()(0, 0);
}

bool Var::requires_grad() const { return node_ != nullptr && node_->requires_grad; }

Var make_op(const char* op, Matrix value, std::vector<Var> inputs, detail::Backward backward) {
  if (!value.allFinite()) throw NumericError(fmt::format("non-finite value produced by '{}'", op));
  auto node = std::make_shared<detail::Node>();
  node->value = std::move(value);
  node->op = op;
  const bool needs = detail::is_recording() &&
                     std::any_of(inputs.begin(), inputs.end(), [](const Var& v) { return v.requires_grad(); });
  if (needs) {
    node->requires_grad = true;
    node->inputs = std::move(inputs);
    node->backward = std::move(backward);
  }
  return Var(std::move(node));
}

bool grad_enabled() { return detail::is_recording(); }

void tune_allocator() {
#ifdef __GLIBC__
  mallopt(M_MMAP_THRESHOLD, 256 * 1024 * 1024);
  mallopt(M_TRIM_THRESHOLD, 512 * 1024 * 1024);
#endif
}

GradModeGuard::GradModeGuard(bool enabled) : previous_(detail::is_recording()) { detail::set_recording(enabled); }
GradModeGuard::~GradModeGuard() { detail::set_recording(previous_); }

namespace {

using RecordingScope = GradModeGuard;

// Post-order over the differentiable subgraph: inputs precede consumers.
std::vector<Var> topological_order(const Var& root) {
  std::vector<Var> order;
  std::unordered_set<const detail::Node*> seen{root.node().get()};
  std::vector<std::pair<Var, std::size_t>> stack{{root, 0}};
  while (!stack.empty()) {
    auto& [var, next] = stack.back();
    const auto& inputs = var.node()->inputs;
    if (next < inputs.size()) {
      const Var& child = inputs[next++];
      if (child.requires_grad() && seen.insert(child.node().get()).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(var);
      stack.pop_back();
    }
  }
  return order;
}

}  // namespace

std::vector<Var> grad(const Var& y, std::span<const Var> wrt, GraphMode mode) {
  if (y.value().size() != 1) {
    throw ShapeError(fmt::format("grad needs a scalar output, got {}x{}", y.rows(), y.cols()));
  }
  std::vector<Var> result;
  result.reserve(wrt.size());
  auto zeros_like = [](const Var& v) { return Var::constant(Matrix::Zero(v.rows(), v.cols())); };
  if (!y.requires_grad()) {
    for (const Var& w : wrt) result.push_back(zeros_like(w));
    return result;
  }

  const std::vector<Var> order = topological_order(y);
  std::unordered_set<const detail::Node*> targets;
  for (const Var& w : wrt) targets.insert(w.node().get());
  // A node matters only if some target is reachable through it.
  std::unordered_set<const detail::Node*> relevant;
  for (const Var& v : order) {
    const auto& inputs = v.node()->inputs;
    if (targets.count(v.node().get()) != 0 ||
        std::any_of(inputs.begin(), inputs.end(),
                    [&](const Var& in) { return relevant.count(in.node().get()) != 0; })) {
      relevant.insert(v.node().get());
    }
  }

  RecordingScope scope(mode == GraphMode::create);
  std::unordered_map<const detail::Node*, Var> accum;
  accum.emplace(y.node().get(), Var::constant(Matrix::Ones(1, 1)));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const detail::Node* node = it->node().get();
    if (relevant.count(node) == 0 || !node->backward) continue;
    auto found = accum.find(node);
    if (found == accum.end()) continue;
    const Var upstream = found->second;
    std::vector<Var> grads = node->backward(node->inputs, *it, upstream);
    for (std::size_t i = 0; i < node->inputs.size(); ++i) {
      const detail::Node* in = node->inputs[i].node().get();
      if (!grads[i].defined() || relevant.count(in) == 0) continue;
      auto slot = accum.find(in);
      if (slot == accum.end()) {
        accum.emplace(in, grads[i]);
      } else {
        slot->second = add(slot->second, grads[i]);
      }
    }
  }

  for (const Var& w : wrt) {
    auto found = accum.find(w.node().get());
    result.push_back(found == accum.end() ? zeros_like(w) : found->second);
  }
  return result;
}

Var grad(const Var& y, const Var& wrt, GraphMode mode) {
  const Var targets[] = {wrt};
  return grad(y, targets, mode).front();
}

Vector gradient(const ScalarFunction& f, const Vector& omega) {
  RecordingScope scope(true);
  const Var w = Var::leaf(omega);
  const Var y = f(w);
  return grad(y, w).value();
}

namespace {

Var evaluate_field(const VectorFunction& field, const Var& w) {
  Var v = field(w);
  if (v.rows() != w.rows() || v.cols() != 1) {
    throw ShapeError(fmt::format("vector field returned {}x{}, expected {}x1", v.rows(), v.cols(), w.rows()));
  }
  return v;
}

void check_direction(const char* what, Eigen::Index got, Eigen::Index want) {
  if (got != want) throw ShapeError(fmt::format("{} direction has length {}, state has {}", what, got, want));
}

}  // namespace

std::function<Vector(const Vector&)> jvp_operator(const VectorFunction& field, const Vector& omega) {
  RecordingScope scope(true);
  const Var w = Var::leaf(omega);
  const Var v = evaluate_field(field, w);
  // Reverse mode gives r -> J^T r; that map is linear in r, so differentiating
  // <J^T r, u> with respect to r yields J u.
  const Var r = Var::leaf(Vector::Zero(omega.size()));
  const Var jt_r = grad(dot(v, r), w, GraphMode::create);
  return [r, jt_r](const Vector& u) -> Vector {
    check_direction("jvp", u.size(), r.rows());
    RecordingScope inner(true);
    return grad(dot(jt_r, Var::constant(u)), r).value();
  };
}

Vector jvp(const VectorFunction& field, const Vector& omega, const Vector& u) {
  check_direction("jvp", u.size(), omega.size());
  return jvp_operator(field, omega)(u);
}

Vector vjp(const VectorFunction& field, const Vector& omega, const Vector& u) {
  check_direction("vjp", u.size(), omega.size());
  RecordingScope scope(true);
  const Var w = Var::leaf(omega);
  const Var v = evaluate_field(field, w);
  return grad(dot(v, Var::constant(u)), w).value();
}

ParamVector gradient(const ScalarFunction& f, const ParamVector& omega) {
  return ParamVector(omega.layout(), gradient(f, omega.values()));
}

ParamVector jvp(const VectorFunction& field, const ParamVector& omega, const ParamVector& u) {
  if (!(omega.layout() == u.layout())) throw ShapeError("jvp direction layout differs from the state layout");
  return ParamVector(omega.layout(), jvp(field, omega.values(), u.values()));
}

}  // namespace gamescope::autograd
