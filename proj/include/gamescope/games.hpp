#pragma once

// Two-player differentiable games over a flat joint state omega = (theta, phi).
//
// The generator owns the first generator_size() coordinates, the
// discriminator the rest. The game vector field stacks each player's gradient
// of its own loss: v(omega) = (d L_G / d theta, d L_D / d phi).

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>

#include "gamescope/autograd.hpp"
#include "gamescope/numerics.hpp"
#include "gamescope/params.hpp"

namespace gamescope::games {

using autograd::Var;
using numerics::DenseMatrix;
using numerics::Vector;

enum class Player { generator, discriminator };

std::string to_string(Player p);

class Game {
 public:
  virtual ~Game() = default;

  virtual std::string name() const = 0;
  /// Joint layout; generator segments come first.
  virtual const Layout& layout() const = 0;
  virtual Eigen::Index generator_size() const = 0;

  Eigen::Index size() const { return layout().size(); }
  Eigen::Index discriminator_size() const { return size() - generator_size(); }
  Eigen::Index player_offset(Player p) const { return p == Player::generator ? 0 : generator_size(); }
  Eigen::Index player_size(Player p) const {
    return p == Player::generator ? generator_size() : discriminator_size();
  }

  /// False for games that only exist as a vector field.
  virtual bool is_potential() const { return true; }

  /// (L_G, L_D) as recorded scalars of the two column-vector blocks. Throws
  /// ArgumentError for games without losses.
  virtual std::pair<Var, Var> losses(const Var& theta, const Var& phi) const;

  /// Recorded v(omega) for a column vector omega. With GraphMode::create the
  /// result can be differentiated again. The default differentiates losses().
  virtual Var field(const Var& omega, autograd::GraphMode mode = autograd::GraphMode::create) const;

  /// Hand-written field, when one exists; used as a test oracle.
  virtual std::optional<Vector> closed_form_field(const Vector&) const { return std::nullopt; }

  /// Training hooks. A game with per-iteration randomness returns the game to
  /// use at `iteration`; deterministic games return nullptr.
  virtual std::shared_ptr<const Game> at_iteration(std::uint64_t) const { return nullptr; }
  /// Applied to the state after every optimizer step.
  virtual Vector project(const Vector& omega) const { return omega; }
  /// Applied to the field before it is used for diagnostics.
  virtual Vector filter_field(const Vector&, const Vector& v) const { return v; }
};

using GamePtr = std::shared_ptr<const Game>;

/// Layout with a single generator segment "theta" (p x 1) and a single
/// discriminator segment "phi" (d x 1).
Layout column_layout(Eigen::Index p, Eigen::Index d);

/// Throws ShapeError unless omega has the game's dimension, NumericError on
/// non-finite entries.
void check_state(const Game& g, const Vector& omega);

Vector vector_field(const Game& g, const Vector& omega);
ParamVector vector_field(const Game& g, const ParamVector& omega);

/// u -> J(omega) u with the graph built once.
numerics::LinearOperator jacobian_operator(const Game& g, const Vector& omega);

/// Column j is J(omega) e_j. Refuses (ArgumentError) above `cap` coordinates.
DenseMatrix jacobian_dense(const Game& g, const Vector& omega, Eigen::Index cap = 2000);

/// The player's diagonal Jacobian block, i.e. the Hessian of its own loss
/// with the other player frozen, as an operator on that player's coordinates.
numerics::LinearOperator player_hessian_operator(const Game& g, const Vector& omega, Player p);
DenseMatrix player_hessian_dense(const Game& g, const Vector& omega, Player p, Eigen::Index cap = 2000);

/// Saddle for the generator whose principal axes are turned by the
/// discriminator, against a bilinear discriminator:
///   L_G = (t2 - p t1 - 1)^2 - 1/2 (t1 + p t2 - 1)^2,  L_D = p (5 t1 + 4 t2 - 9).
/// (1, 1, 0) is locally stable but not a Nash equilibrium.
GamePtr make_example1();

/// One-dimensional non-zero-sum game with stationary points (0, 1) and
/// (0, -1): the first is a Nash equilibrium that is not locally stable, the
/// second is locally stable but not a Nash equilibrium.
///   L_G = t^2 / 2 + (p^2 / 4 - 1/4) t,  L_D = p^3 / 12 + 2 t p - p / 4.
GamePtr make_example2();

/// v(omega) = [[s1, b], [a, s2]] (omega - center).
struct LinearGameSpec {
  DenseMatrix s1;  // p x p
  DenseMatrix s2;  // d x d
  DenseMatrix a;   // d x p
  DenseMatrix b;   // p x d
  Vector center;   // p + d
};

/// Throws ShapeError on inconsistent blocks. When s1 and s2 are symmetric the
/// game carries the quadratic losses
///   L_G = 1/2 x' s1 x + x' b y,  L_D = 1/2 y' s2 y + y' a x
/// with (x, y) = omega - center; otherwise it is a bare vector field.
GamePtr make_linear_game(LinearGameSpec spec);

/// Full linear Jacobian [[s1, b], [a, s2]].
DenseMatrix linear_jacobian(const LinearGameSpec& spec);

enum class Archetype { attraction, rotation, mixed };

std::string to_string(Archetype a);
/// Parses "attraction", "rotation" or "mixed"; ArgumentError otherwise.
Archetype parse_archetype(const std::string& s);

/// One coordinate per player, centered at `center` (zeros if empty):
/// attraction s1 = s2 = 1, a = b = 0; rotation s1 = s2 = 0, a = 1, b = -1;
/// mixed as rotation with s1 = s2 = 0.1.
LinearGameSpec archetype_spec(Archetype kind, Vector center = Vector());

/// L_G = t p, L_D = -t p; equilibrium at the origin, pure rotation.
GamePtr make_bilinear();

}  // namespace gamescope::games
