#include <fmt/format.h>

#include "gamescope/error.hpp"
#include "gamescope/games.hpp"

namespace gamescope::games {

std::string to_string(Player p) { return p == Player::generator ? "generator" : "discriminator"; }

std::pair<Var, Var> Game::losses(const Var&, const Var&) const {
  throw ArgumentError(fmt::format("game '{}' is defined by its vector field only and has no losses", name()));
}

Var Game::field(const Var& omega, autograd::GraphMode mode) const {
  const Eigen::Index p = generator_size();
  const Eigen::Index d = discriminator_size();
  const Var theta = autograd::slice(omega, 0, p, 1);
  const Var phi = autograd::slice(omega, p, d, 1);
  const auto [loss_g, loss_d] = losses(theta, phi);
  return autograd::vcat(autograd::grad(loss_g, theta, mode), autograd::grad(loss_d, phi, mode));
}

Layout column_layout(Eigen::Index p, Eigen::Index d) {
  Layout l;
  l.add("theta", p, 1).add("phi", d, 1);
  return l;
}

void check_state(const Game& g, const Vector& omega) {
  if (omega.size() != g.size()) {
    throw ShapeError(fmt::format("state has {} coordinates but game '{}' has {}", omega.size(), g.name(), g.size()));
  }
  if (!omega.allFinite()) throw NumericError("state has non-finite coordinates");
}

Vector vector_field(const Game& g, const Vector& omega) {
  check_state(g, omega);
  const Var w = Var::leaf(omega);
  return g.field(w, autograd::GraphMode::discard).value();
}

ParamVector vector_field(const Game& g, const ParamVector& omega) {
  if (!(omega.layout() == g.layout())) {
    throw ShapeError(fmt::format("parameter layout does not match game '{}'", g.name()));
  }
  return ParamVector(g.layout(), vector_field(g, omega.values()));
}

numerics::LinearOperator jacobian_operator(const Game& g, const Vector& omega) {
  check_state(g, omega);
  return autograd::jvp_operator([&g](const Var& w) { return g.field(w, autograd::GraphMode::create); }, omega);
}

namespace {

DenseMatrix columns(const numerics::LinearOperator& apply, Eigen::Index n, Eigen::Index cap, const std::string& what) {
  if (n > cap) {
    throw ArgumentError(fmt::format(
        "{} has dimension {} above the dense cap {}; use the matrix-free operator with eig_topk instead", what, n, cap));
  }
  return numerics::materialize(apply, static_cast<std::size_t>(n));
}

}  // namespace

DenseMatrix jacobian_dense(const Game& g, const Vector& omega, Eigen::Index cap) {
  if (g.size() > cap) return columns({}, g.size(), cap, "game Jacobian");
  return columns(jacobian_operator(g, omega), g.size(), cap, "game Jacobian");
}

numerics::LinearOperator player_hessian_operator(const Game& g, const Vector& omega, Player p) {
  const numerics::LinearOperator full = jacobian_operator(g, omega);
  const Eigen::Index offset = g.player_offset(p);
  const Eigen::Index n = g.player_size(p);
  const Eigen::Index total = g.size();
  return [full, offset, n, total](const Vector& u) -> Vector {
    if (u.size() != n) throw ShapeError(fmt::format("player direction has length {}, expected {}", u.size(), n));
    Vector e = Vector::Zero(total);
    e.segment(offset, n) = u;
    return full(e).segment(offset, n);
  };
}

DenseMatrix player_hessian_dense(const Game& g, const Vector& omega, Player p, Eigen::Index cap) {
  const std::string what = to_string(p) + " Hessian";
  if (g.player_size(p) > cap) return columns({}, g.player_size(p), cap, what);
  return columns(player_hessian_operator(g, omega, p), g.player_size(p), cap, what);
}

}  // namespace gamescope::games
