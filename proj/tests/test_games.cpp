#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "gamescope/error.hpp"
#include "gamescope/games.hpp"
#include "gamescope/numerics.hpp"
#include "test_support.hpp"

using namespace gamescope;
using namespace gamescope::games;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

VectorXd vec(std::initializer_list<double> xs) {
  VectorXd v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

VectorXd random_point(Eigen::Index n, std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = u(rng);
  return v;
}

std::pair<double, double> loss_values(const Game& g, const VectorXd& w) {
  autograd::NoGradGuard no_grad;
  const auto theta = Var::constant(w.head(g.generator_size()));
  const auto phi = Var::constant(w.tail(g.discriminator_size()));
  const auto [lg, ld] = g.losses(theta, phi);
  return {lg.scalar(), ld.scalar()};
}

double char_poly(const MatrixXd& m, double x) {
  return (x * MatrixXd::Identity(m.rows(), m.cols()) - m).determinant();
}

LinearGameSpec random_linear_spec(Eigen::Index p, Eigen::Index d, bool symmetric_blocks, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  auto rnd = [&](Eigen::Index r, Eigen::Index c) {
    MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
      for (Eigen::Index j = 0; j < c; ++j) m(i, j) = normal(rng);
    return m;
  };
  LinearGameSpec spec{rnd(p, p), rnd(d, d), rnd(d, p), rnd(p, d), random_point(p + d, rng, 2.0)};
  if (symmetric_blocks) {
    spec.s1 = (spec.s1 + spec.s1.transpose()).eval();
    spec.s2 = (spec.s2 + spec.s2.transpose()).eval();
  }
  return spec;
}

}  // namespace

TEST_CASE("saddle game losses and stationary point") {
  const GamePtr g = make_example1();
  CHECK(g->generator_size() == 2);
  CHECK(g->discriminator_size() == 1);
  CHECK(loss_values(*g, vec({1, 1, 0})).first == 0.0);
  for (double phi : {-3.0, -0.5, 0.0, 2.0, 10.0}) CHECK(loss_values(*g, vec({1, 1, phi})).second == 0.0);
  CHECK(vector_field(*g, vec({1, 1, 0})).isZero(0.0));
  // Hand evaluation of the closed-form field at (2, 1, 0): (-2 + 1, 2 - 2, 10 + 4 - 9).
  CHECK((vector_field(*g, vec({2, 1, 0})) - vec({-1, 0, 5})).norm() <= 1e-14);
}

TEST_CASE("saddle game Jacobian and characteristic polynomial") {
  const GamePtr g = make_example1();
  MatrixXd expected(3, 3);
  expected << -1, 0, -1, 0, 2, -2, 5, 4, 0;
  const MatrixXd j = jacobian_dense(*g, vec({1, 1, 0}));
  CHECK((j - expected).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(char_poly(j, 0.0) == doctest::Approx(-2.0).epsilon(1e-9));
  CHECK(char_poly(j, 1.0) == doctest::Approx(9.0).epsilon(1e-9));
  const MatrixXd hg = player_hessian_dense(*g, vec({1, 1, 0}), Player::generator);
  CHECK((hg - Eigen::Vector2d(-1, 2).asDiagonal().toDenseMatrix()).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(player_hessian_dense(*g, vec({1, 1, 0}), Player::discriminator)(0, 0) == 0.0);
}

TEST_CASE("saddle game Jacobian matches the general closed form") {
  // d v / d omega, including the d/dphi term of the first row that vanishes at phi = 0.
  const GamePtr g = make_example1();
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const VectorXd w = random_point(3, rng, 2.0);
    const double t1 = w(0), t2 = w(1), p = w(2);
    MatrixXd expected(3, 3);
    expected << 2 * p * p - 1, -3 * p, 4 * p * t1 - 3 * t2 + 2,  //
        -3 * p, 2 - p * p, -2 * p * t2 - 3 * t1 + 1,          //
        5, 4, 0;
    CHECK((jacobian_dense(*g, w) - expected).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("one-dimensional game: both stationary points and their Jacobians") {
  const GamePtr g = make_example2();
  CHECK(vector_field(*g, vec({0, 1})).isZero(1e-15));
  CHECK(vector_field(*g, vec({0, -1})).isZero(1e-15));
  MatrixXd up(2, 2), down(2, 2);
  up << 1, 0.5, 2, 0.5;
  down << 1, -0.5, 2, -0.5;
  CHECK((jacobian_dense(*g, vec({0, 1})) - up).cwiseAbs().maxCoeff() <= 1e-14);
  CHECK((jacobian_dense(*g, vec({0, -1})) - down).cwiseAbs().maxCoeff() <= 1e-14);

  const auto s_up = numerics::eig_dense(jacobian_dense(*g, vec({0, 1})));
  CHECK(s_up.eigenvalues[0].real() == doctest::Approx((3 + std::sqrt(17.0)) / 4).epsilon(1e-12));
  CHECK(s_up.eigenvalues[1].real() == doctest::Approx((3 - std::sqrt(17.0)) / 4).epsilon(1e-12));
  CHECK(s_up.min_real() < 0);
  const auto s_down = numerics::eig_dense(jacobian_dense(*g, vec({0, -1})));
  CHECK(s_down.min_real() == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(std::abs(s_down.eigenvalues[0].imag()) == doctest::Approx(std::sqrt(7.0) / 4).epsilon(1e-12));

  // Own-loss curvature: generator 1 everywhere, discriminator phi / 2.
  CHECK(player_hessian_dense(*g, vec({0, 1}), Player::generator)(0, 0) == doctest::Approx(1.0));
  CHECK(player_hessian_dense(*g, vec({0, 1}), Player::discriminator)(0, 0) == doctest::Approx(0.5));
  CHECK(player_hessian_dense(*g, vec({0, -1}), Player::discriminator)(0, 0) == doctest::Approx(-0.5));
}

TEST_CASE("autograd fields agree with the closed forms at random points") {
  std::mt19937_64 rng(33);
  std::vector<GamePtr> games{make_example1(), make_example2(), make_bilinear()};
  for (auto a : {Archetype::attraction, Archetype::rotation, Archetype::mixed}) {
    games.push_back(make_linear_game(archetype_spec(a, vec({0.3, -1.2}))));
  }
  games.push_back(make_linear_game(random_linear_spec(3, 2, true, rng)));
  games.push_back(make_linear_game(random_linear_spec(2, 4, false, rng)));
  for (const GamePtr& g : games) {
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      const VectorXd w = random_point(g->size(), rng, 3.0);
      const VectorXd closed = *g->closed_form_field(w);
      worst = std::max(worst, (vector_field(*g, w) - closed).cwiseAbs().maxCoeff() / std::max(1.0, closed.norm()));
    }
    CHECK_MESSAGE(worst <= 1e-10, g->name());
  }
}

TEST_CASE("linear games") {
  SUBCASE("identity blocks give the displacement") {
    const VectorXd center = vec({1, -2, 0.5});
    const GamePtr g = make_linear_game({MatrixXd::Identity(2, 2), MatrixXd::Identity(1, 1), MatrixXd::Zero(1, 2),
                                        MatrixXd::Zero(2, 1), center});
    const VectorXd w = vec({4, 4, 4});
    CHECK((vector_field(*g, w) - (w - center)).norm() == 0.0);
  }
  SUBCASE("the Jacobian is the block matrix at any state") {
    std::mt19937_64 rng(9);
    for (bool sym : {true, false}) {
      const LinearGameSpec spec = random_linear_spec(3, 3, sym, rng);
      const GamePtr g = make_linear_game(spec);
      CHECK(g->is_potential() == sym);
      for (int trial = 0; trial < 3; ++trial) {
        const MatrixXd j = jacobian_dense(*g, random_point(6, rng, 5.0));
        CHECK((j - linear_jacobian(spec)).cwiseAbs().maxCoeff() <= 1e-12);
      }
    }
  }
  SUBCASE("archetype spectra") {
    const auto attraction = numerics::eig_dense(jacobian_dense(*make_linear_game(archetype_spec(Archetype::attraction)), vec({0, 0})));
    CHECK(attraction.eigenvalues[0] == numerics::ComplexScalar(1, 0));
    CHECK(attraction.eigenvalues[1] == numerics::ComplexScalar(1, 0));
    const auto rotation = numerics::eig_dense(jacobian_dense(*make_linear_game(archetype_spec(Archetype::rotation)), vec({0, 0})));
    CHECK(std::abs(rotation.eigenvalues[0] - numerics::ComplexScalar(0, 1)) <= 1e-14);
    CHECK(std::abs(rotation.eigenvalues[1] - numerics::ComplexScalar(0, -1)) <= 1e-14);
    const auto mixed = numerics::eig_dense(jacobian_dense(*make_linear_game(archetype_spec(Archetype::mixed)), vec({0, 0})));
    CHECK(std::abs(mixed.eigenvalues[0] - numerics::ComplexScalar(0.1, 1)) <= 1e-14);
    CHECK(std::abs(mixed.eigenvalues[1] - numerics::ComplexScalar(0.1, -1)) <= 1e-14);
  }
  SUBCASE("rotation is not a gradient field") {
    const GamePtr g = make_linear_game(archetype_spec(Archetype::rotation));
    const MatrixXd j = jacobian_dense(*g, vec({0.7, -0.1}));
    CHECK((j + j.transpose()).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(j.norm() > 1.0);
  }
  SUBCASE("a non-symmetric block has no losses") {
    MatrixXd s1(2, 2);
    s1 << 1, 2, 0, 1;
    const GamePtr g = make_linear_game({s1, MatrixXd::Identity(1, 1), MatrixXd::Zero(1, 2), MatrixXd::Zero(2, 1), {}});
    CHECK_FALSE(g->is_potential());
    CHECK_THROWS_AS(g->losses(Var::constant(VectorXd::Zero(2)), Var::constant(VectorXd::Zero(1))), ArgumentError);
    CHECK((vector_field(*g, vec({1, 1, 1})) - vec({3, 1, 1})).norm() == 0.0);
  }
  SUBCASE("inconsistent blocks") {
    CHECK_THROWS_AS(make_linear_game({MatrixXd::Identity(2, 2), MatrixXd::Identity(1, 1), MatrixXd::Zero(2, 2),
                                      MatrixXd::Zero(2, 1), {}}),
                    ShapeError);
    CHECK_THROWS_AS(make_linear_game({MatrixXd::Identity(2, 2), MatrixXd::Identity(1, 1), MatrixXd::Zero(1, 2),
                                      MatrixXd::Zero(2, 1), VectorXd::Zero(2)}),
                    ShapeError);
  }
}

TEST_CASE("the off-diagonal block holds the mixed second derivatives of each loss") {
  // Central differences of the closed-form field in the other player's coordinates.
  const GamePtr g = make_example1();
  std::mt19937_64 rng(44);
  for (int trial = 0; trial < 10; ++trial) {
    const VectorXd w = random_point(3, rng, 2.0);
    const MatrixXd j = jacobian_dense(*g, w);
    const double h = 1e-4;
    VectorXd plus = w, minus = w;
    plus(2) += h;
    minus(2) -= h;
    const VectorXd mixed_g = (g->closed_form_field(plus)->head(2) - g->closed_form_field(minus)->head(2)) / (2 * h);
    CHECK((j.block(0, 2, 2, 1) - mixed_g).cwiseAbs().maxCoeff() <= 1e-8);
    for (int i = 0; i < 2; ++i) {
      VectorXd p2 = w, m2 = w;
      p2(i) += h;
      m2(i) -= h;
      const double mixed_d = ((*g->closed_form_field(p2))(2) - (*g->closed_form_field(m2))(2)) / (2 * h);
      CHECK(std::abs(j(2, i) - mixed_d) <= 1e-8);
    }
  }
}

TEST_CASE("state validation and the dense cap") {
  const GamePtr g = make_example1();
  CHECK_THROWS_AS(vector_field(*g, VectorXd::Zero(2)), ShapeError);
  CHECK_THROWS_AS(vector_field(*g, vec({1, NAN, 0})), NumericError);
  CHECK_THROWS_AS(jacobian_dense(*g, vec({1, 1, 0}), 2), ArgumentError);
  const ParamVector good(g->layout(), vec({1, 1, 0}));
  CHECK(vector_field(*g, good).values().isZero(0.0));
  CHECK_THROWS_AS(vector_field(*g, ParamVector(column_layout(1, 2), vec({1, 1, 0}))), ShapeError);
  CHECK(parse_archetype("mixed") == Archetype::mixed);
  CHECK_THROWS_AS(parse_archetype("spiral"), ArgumentError);
}

TEST_CASE("field evaluation is deterministic") {
  const GamePtr g = make_example1();
  const VectorXd w = vec({0.3, -0.7, 1.9});
  const VectorXd a = vector_field(*g, w);
  const VectorXd b = vector_field(*g, w);
  CHECK(a == b);
  const auto op = jacobian_operator(*g, w);
  CHECK(op(vec({1, 2, 3})) == op(vec({1, 2, 3})));
}
