#include <fmt/format.h>

#include "gamescope/error.hpp"
#include "gamescope/games.hpp"

namespace gamescope::games {

using autograd::add;
using autograd::add_scalar;
using autograd::mul;
using autograd::scale;
using autograd::square;

namespace {

Var coord(const Var& v, Eigen::Index i) { return autograd::slice(v, i, 1, 1); }

class Example1 final : public Game {
 public:
  std::string name() const override { return "example1"; }
  const Layout& layout() const override { return layout_; }
  Eigen::Index generator_size() const override { return 2; }

  std::pair<Var, Var> losses(const Var& theta, const Var& phi) const override {
    const Var t1 = coord(theta, 0);
    const Var t2 = coord(theta, 1);
    const Var descent = add_scalar(autograd::sub(t2, mul(phi, t1)), -1.0);
    const Var ascent = add_scalar(add(t1, mul(phi, t2)), -1.0);
    const Var loss_g = autograd::sub(square(descent), scale(square(ascent), 0.5));
    const Var loss_d = mul(phi, add_scalar(add(scale(t1, 5.0), scale(t2, 4.0)), -9.0));
    return {loss_g, loss_d};
  }

  std::optional<Vector> closed_form_field(const Vector& w) const override {
    const double t1 = w(0), t2 = w(1), p = w(2);
    Vector v(3);
    v << (2 * p * p - 1) * t1 - 3 * p * t2 + 2 * p + 1, (2 - p * p) * t2 - 3 * p * t1 - 2 + p, 5 * t1 + 4 * t2 - 9;
    return v;
  }

 private:
  Layout layout_ = column_layout(2, 1);
};

class Example2 final : public Game {
 public:
  std::string name() const override { return "example2"; }
  const Layout& layout() const override { return layout_; }
  Eigen::Index generator_size() const override { return 1; }

  std::pair<Var, Var> losses(const Var& t, const Var& p) const override {
    const Var p2 = square(p);
    const Var loss_g = add(scale(square(t), 0.5), mul(add_scalar(scale(p2, 0.25), -0.25), t));
    const Var loss_d = add(add(scale(mul(p2, p), 1.0 / 12.0), scale(mul(t, p), 2.0)), scale(p, -0.25));
    return {loss_g, loss_d};
  }

  std::optional<Vector> closed_form_field(const Vector& w) const override {
    const double t = w(0), p = w(1);
    Vector v(2);
    v << t + 0.25 * p * p - 0.25, 2 * t + 0.25 * p * p - 0.25;
    return v;
  }

 private:
  Layout layout_ = column_layout(1, 1);
};

bool symmetric(const DenseMatrix& m) { return m == m.transpose(); }

class LinearGame final : public Game {
 public:
  explicit LinearGame(LinearGameSpec spec)
      : spec_(std::move(spec)),
        jacobian_(linear_jacobian(spec_)),
        layout_(column_layout(spec_.s1.rows(), spec_.s2.rows())),
        potential_(symmetric(spec_.s1) && symmetric(spec_.s2)) {}

  std::string name() const override { return "linear"; }
  const Layout& layout() const override { return layout_; }
  Eigen::Index generator_size() const override { return spec_.s1.rows(); }
  bool is_potential() const override { return potential_; }

  std::pair<Var, Var> losses(const Var& theta, const Var& phi) const override {
    if (!potential_) return Game::losses(theta, phi);
    const Eigen::Index p = generator_size();
    const Var x = add(theta, Var::constant(-spec_.center.head(p)));
    const Var y = add(phi, Var::constant(-spec_.center.tail(discriminator_size())));
    auto quad = [](const DenseMatrix& m, const Var& u) { return scale(autograd::dot(u, autograd::matmul(Var::constant(m), u)), 0.5); };
    auto bilinear = [](const Var& u, const DenseMatrix& m, const Var& w) {
      return autograd::dot(u, autograd::matmul(Var::constant(m), w));
    };
    return {add(quad(spec_.s1, x), bilinear(x, spec_.b, y)), add(quad(spec_.s2, y), bilinear(y, spec_.a, x))};
  }

  Var field(const Var& omega, autograd::GraphMode mode) const override {
    if (potential_) return Game::field(omega, mode);
    return autograd::matmul(Var::constant(jacobian_), add(omega, Var::constant(-spec_.center)));
  }

  std::optional<Vector> closed_form_field(const Vector& w) const override { return jacobian_ * (w - spec_.center); }

 private:
  LinearGameSpec spec_;
  DenseMatrix jacobian_;
  Layout layout_;
  bool potential_;
};

}  // namespace

GamePtr make_example1() { return std::make_shared<Example1>(); }
GamePtr make_example2() { return std::make_shared<Example2>(); }

DenseMatrix linear_jacobian(const LinearGameSpec& spec) {
  const Eigen::Index p = spec.s1.rows();
  const Eigen::Index d = spec.s2.rows();
  DenseMatrix j(p + d, p + d);
  j << spec.s1, spec.b, spec.a, spec.s2;
  return j;
}

GamePtr make_linear_game(LinearGameSpec spec) {
  const Eigen::Index p = spec.s1.rows();
  const Eigen::Index d = spec.s2.rows();
  auto expect = [](const char* what, const DenseMatrix& m, Eigen::Index r, Eigen::Index c) {
    if (m.rows() != r || m.cols() != c) {
      throw ShapeError(fmt::format("linear game block {} is {}x{}, expected {}x{}", what, m.rows(), m.cols(), r, c));
    }
    if (!m.allFinite()) throw NumericError(fmt::format("linear game block {} has non-finite entries", what));
  };
  if (p < 1 || d < 1) throw ShapeError("linear game needs at least one coordinate per player");
  expect("s1", spec.s1, p, p);
  expect("s2", spec.s2, d, d);
  expect("a", spec.a, d, p);
  expect("b", spec.b, p, d);
  if (spec.center.size() == 0) spec.center = Vector::Zero(p + d);
  if (spec.center.size() != p + d) {
    throw ShapeError(fmt::format("linear game center has {} coordinates, expected {}", spec.center.size(), p + d));
  }
  return std::make_shared<LinearGame>(std::move(spec));
}

std::string to_string(Archetype a) {
  switch (a) {
    case Archetype::attraction:
      return "attraction";
    case Archetype::rotation:
      return "rotation";
    case Archetype::mixed:
      return "mixed";
  }
  return "?";
}

Archetype parse_archetype(const std::string& s) {
  for (Archetype a : {Archetype::attraction, Archetype::rotation, Archetype::mixed}) {
    if (to_string(a) == s) return a;
  }
  throw ArgumentError(fmt::format("unknown linear archetype '{}' (expected attraction, rotation or mixed)", s));
}

LinearGameSpec archetype_spec(Archetype kind, Vector center) {
  const double diag = kind == Archetype::attraction ? 1.0 : kind == Archetype::mixed ? 0.1 : 0.0;
  const double coupling = kind == Archetype::attraction ? 0.0 : 1.0;
  LinearGameSpec spec;
  spec.s1 = DenseMatrix::Constant(1, 1, diag);
  spec.s2 = DenseMatrix::Constant(1, 1, diag);
  spec.a = DenseMatrix::Constant(1, 1, coupling);
  spec.b = DenseMatrix::Constant(1, 1, -coupling);
  spec.center = center.size() == 0 ? Vector::Zero(2) : std::move(center);
  return spec;
}

GamePtr make_bilinear() {
  LinearGameSpec spec;
  spec.s1 = DenseMatrix::Zero(1, 1);
  spec.s2 = DenseMatrix::Zero(1, 1);
  spec.a = DenseMatrix::Constant(1, 1, -1.0);
  spec.b = DenseMatrix::Constant(1, 1, 1.0);
  spec.center = Vector::Zero(2);
  return make_linear_game(std::move(spec));
}

}  // namespace gamescope::games
