#include <fmt/format.h>

#include "gamescope/autograd.hpp"
#include "gamescope/error.hpp"

namespace gamescope::autograd {
namespace {

using RowMap = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using RowMapMut = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

void require_same_shape(const char* op, const Var& a, const Var& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(fmt::format("'{}' operands differ in shape: {}x{} vs {}x{}", op, a.rows(), a.cols(), b.rows(),
                                 b.cols()));
  }
}

Var masked(const Var& g, Matrix mask) { return mul(g, Var::constant(std::move(mask))); }

}  // namespace

namespace {

Matrix product_value(const Matrix& a, const Matrix& b, bool ta, bool tb) {
  if (ta) return tb ? Matrix(a.transpose() * b.transpose()) : Matrix(a.transpose() * b);
  return tb ? Matrix(a * b.transpose()) : Matrix(a * b);
}

// op(a) op(b) where op transposes when the flag is set. Gradients stay in
// this family, so no transposed copies are materialized.
Var product(const Var& a, const Var& b, bool ta, bool tb) {
  const Eigen::Index inner_a = ta ? a.rows() : a.cols();
  const Eigen::Index inner_b = tb ? b.cols() : b.rows();
  if (inner_a != inner_b) {
    throw ShapeError(fmt::format("matmul of {}x{}{} by {}x{}{}", a.rows(), a.cols(), ta ? "^T" : "", b.rows(), b.cols(),
                                 tb ? "^T" : ""));
  }
  return make_op("matmul", product_value(a.value(), b.value(), ta, tb), {a, b},
                 [ta, tb](const std::vector<Var>& in, const Var&, const Var& g) {
                   Var da;
                   Var db;
                   if (in[0].requires_grad()) da = ta ? product(in[1], g, tb, true) : product(g, in[1], false, !tb);
                   if (in[1].requires_grad()) db = tb ? product(g, in[0], true, ta) : product(in[0], g, !ta, false);
                   return std::vector<Var>{da, db};
                 });
}

}  // namespace

Var matmul(const Var& a, const Var& b) { return product(a, b, false, false); }

Var transpose(const Var& a) {
  return make_op("transpose", a.value().transpose(), {a},
                 [](const std::vector<Var>&, const Var&, const Var& g) { return std::vector<Var>{transpose(g)}; });
}

Var add(const Var& a, const Var& b) {
  require_same_shape("add", a, b);
  return make_op("add", a.value() + b.value(), {a, b},
                 [](const std::vector<Var>&, const Var&, const Var& g) { return std::vector<Var>{g, g}; });
}

Var sub(const Var& a, const Var& b) {
  require_same_shape("sub", a, b);
  return make_op("sub", a.value() - b.value(), {a, b}, [](const std::vector<Var>&, const Var&, const Var& g) {
    return std::vector<Var>{g, scale(g, -1.0)};
  });
}

Var mul(const Var& a, const Var& b) {
  require_same_shape("mul", a, b);
  return make_op("mul", a.value().cwiseProduct(b.value()), {a, b},
                 [](const std::vector<Var>& in, const Var&, const Var& g) {
                   return std::vector<Var>{in[0].requires_grad() ? mul(g, in[1]) : Var(),
                                           in[1].requires_grad() ? mul(g, in[0]) : Var()};
                 });
}

Var scale(const Var& a, double c) {
  return make_op("scale", c * a.value(), {a}, [c](const std::vector<Var>&, const Var&, const Var& g) {
    return std::vector<Var>{scale(g, c)};
  });
}

Var add_scalar(const Var& a, double c) {
  return make_op("add_scalar", (a.value().array() + c).matrix(), {a},
                 [](const std::vector<Var>&, const Var&, const Var& g) { return std::vector<Var>{g}; });
}

Var add_row(const Var& a, const Var& row) {
  if (row.rows() != 1 || row.cols() != a.cols()) {
    throw ShapeError(fmt::format("add_row of {}x{} and {}x{}", a.rows(), a.cols(), row.rows(), row.cols()));
  }
  Matrix out = a.value();
  out.rowwise() += row.value().row(0);
  return make_op("add_row", std::move(out), {a, row}, [](const std::vector<Var>&, const Var&, const Var& g) {
    return std::vector<Var>{g, sum_rows(g)};
  });
}

Var relu(const Var& a) {
  // The subgradient at exactly zero is taken as zero.
  Matrix mask = (a.value().array() > 0.0).cast<double>().matrix();
  Matrix out = a.value().cwiseMax(0.0);
  return make_op("relu", std::move(out), {a}, [mask = std::move(mask)](const std::vector<Var>&, const Var&,
                                                                        const Var& g) {
    return std::vector<Var>{masked(g, mask)};
  });
}

Var sigmoid(const Var& a) {
  Matrix out = a.value().unaryExpr([](double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
  });
  return make_op("sigmoid", std::move(out), {a}, [](const std::vector<Var>&, const Var& s, const Var& g) {
    return std::vector<Var>{mul(g, mul(s, add_scalar(scale(s, -1.0), 1.0)))};
  });
}

Var log(const Var& a) {
  if ((a.value().array() <= 0.0).any()) throw NumericError("'log' applied to a non-positive value");
  return make_op("log", a.value().array().log().matrix(), {a},
                 [](const std::vector<Var>& in, const Var&, const Var& g) {
                   return std::vector<Var>{mul(g, reciprocal(in[0]))};
                 });
}

Var reciprocal(const Var& a) {
  return make_op("reciprocal", a.value().cwiseInverse(), {a}, [](const std::vector<Var>&, const Var& r,
                                                                  const Var& g) {
    return std::vector<Var>{scale(mul(g, square(r)), -1.0)};
  });
}

Var abs(const Var& a) {
  Matrix sign = a.value().unaryExpr([](double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
  return make_op("abs", a.value().cwiseAbs(), {a}, [sign = std::move(sign)](const std::vector<Var>&, const Var&,
                                                                            const Var& g) {
    return std::vector<Var>{masked(g, sign)};
  });
}

Var square(const Var& a) {
  return make_op("square", a.value().cwiseAbs2(), {a}, [](const std::vector<Var>& in, const Var&, const Var& g) {
    return std::vector<Var>{scale(mul(g, in[0]), 2.0)};
  });
}

Var clamp(const Var& a, double lo, double hi) {
  Matrix mask = ((a.value().array() >= lo) && (a.value().array() <= hi)).cast<double>().matrix();
  Matrix out = a.value().cwiseMax(lo).cwiseMin(hi);
  return make_op("clamp", std::move(out), {a}, [mask = std::move(mask)](const std::vector<Var>&, const Var&,
                                                                         const Var& g) {
    return std::vector<Var>{masked(g, mask)};
  });
}

Var sum(const Var& a) {
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  const Eigen::Index r = a.rows();
  const Eigen::Index c = a.cols();
  return make_op("sum", std::move(out), {a}, [r, c](const std::vector<Var>&, const Var&, const Var& g) {
    return std::vector<Var>{expand(g, r, c)};
  });
}

Var mean(const Var& a) {
  if (a.value().size() == 0) throw ShapeError("mean of an empty matrix");
  return scale(sum(a), 1.0 / static_cast<double>(a.value().size()));
}

Var sum_rows(const Var& a) {
  const Eigen::Index n = a.rows();
  return make_op("sum_rows", a.value().colwise().sum(), {a}, [n](const std::vector<Var>&, const Var&,
                                                                  const Var& g) {
    return std::vector<Var>{broadcast_rows(g, n)};
  });
}

Var broadcast_rows(const Var& row, Eigen::Index n) {
  if (row.rows() != 1) throw ShapeError("broadcast_rows expects a single row");
  return make_op("broadcast_rows", row.value().replicate(n, 1), {row},
                 [](const std::vector<Var>&, const Var&, const Var& g) { return std::vector<Var>{sum_rows(g)}; });
}

Var expand(const Var& s, Eigen::Index rows, Eigen::Index cols) {
  const double v = s.scalar();
  return make_op("expand", Matrix::Constant(rows, cols, v), {s},
                 [](const std::vector<Var>&, const Var&, const Var& g) { return std::vector<Var>{sum(g)}; });
}

Var slice(const Var& flat, Eigen::Index offset, Eigen::Index rows, Eigen::Index cols) {
  if (flat.cols() != 1 || offset < 0 || offset + rows * cols > flat.rows()) {
    throw ShapeError(fmt::format("slice [{}, {}) of a {}x{} value", offset, offset + rows * cols, flat.rows(),
                                 flat.cols()));
  }
  Matrix out = RowMap(flat.value().data() + offset, rows, cols);
  const Eigen::Index total = flat.rows();
  return make_op("slice", std::move(out), {flat}, [offset, total](const std::vector<Var>&, const Var&,
                                                                    const Var& g) {
    return std::vector<Var>{scatter(g, offset, total)};
  });
}

Var scatter(const Var& block, Eigen::Index offset, Eigen::Index total) {
  const Eigen::Index rows = block.rows();
  const Eigen::Index cols = block.cols();
  if (offset < 0 || offset + rows * cols > total) {
    throw ShapeError(fmt::format("scatter of {} values at {} into length {}", rows * cols, offset, total));
  }
  Matrix out = Matrix::Zero(total, 1);
  RowMapMut(out.data() + offset, rows, cols) = block.value();
  return make_op("scatter", std::move(out), {block}, [offset, rows, cols](const std::vector<Var>&, const Var&,
                                                                            const Var& g) {
    return std::vector<Var>{slice(g, offset, rows, cols)};
  });
}

Var vcat(const Var& a, const Var& b) {
  if (a.cols() != 1 || b.cols() != 1) throw ShapeError("vcat expects column vectors");
  Matrix out(a.rows() + b.rows(), 1);
  out << a.value(), b.value();
  const Eigen::Index na = a.rows();
  const Eigen::Index nb = b.rows();
  return make_op("vcat", std::move(out), {a, b}, [na, nb](const std::vector<Var>&, const Var&, const Var& g) {
    return std::vector<Var>{slice(g, 0, na, 1), slice(g, na, nb, 1)};
  });
}

Var dot(const Var& a, const Var& b) { return sum(mul(a, b)); }

}  // namespace gamescope::autograd
