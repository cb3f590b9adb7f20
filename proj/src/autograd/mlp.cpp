#include "gamescope/mlp.hpp"

#include <cmath>
#include <random>

#include <fmt/format.h>

#include "gamescope/error.hpp"

namespace gamescope {

using autograd::Var;

Layout MlpSpec::layout() const {
  if (input_dim < 1 || hidden_dim < 1 || output_dim < 1) {
    throw ShapeError(fmt::format("MLP dimensions must be positive: {}-{}-{}", input_dim, hidden_dim, output_dim));
  }
  Layout l;
  l.add("w1", input_dim, hidden_dim).add("b1", 1, hidden_dim).add("w2", hidden_dim, output_dim).add("b2", 1, output_dim);
  return l;
}

Var mlp_forward(const MlpSpec& spec, const Var& params, const Var& x) {
  const Layout layout = spec.layout();
  if (params.rows() != layout.size() || params.cols() != 1) {
    throw ShapeError(fmt::format("MLP expects {} parameters, got {}x{}", layout.size(), params.rows(), params.cols()));
  }
  if (x.cols() != spec.input_dim) {
    throw ShapeError(fmt::format("MLP input has {} columns, expected {}", x.cols(), spec.input_dim));
  }
  auto block = [&](const char* name) {
    const Segment& s = layout.find(name);
    return autograd::slice(params, s.offset, s.rows, s.cols);
  };
  const Var hidden = autograd::relu(autograd::add_row(autograd::matmul(x, block("w1")), block("b1")));
  const Var out = autograd::add_row(autograd::matmul(hidden, block("w2")), block("b2"));
  return spec.output == OutputActivation::sigmoid ? autograd::sigmoid(out) : out;
}

Eigen::VectorXd mlp_apply(const MlpSpec& spec, const ParamVector& params, const Eigen::VectorXd& x) {
  if (!(params.layout() == spec.layout())) throw ShapeError("parameter layout does not match the MLP spec");
  autograd::NoGradGuard no_grad;
  const Var out = mlp_forward(spec, Var::constant(params.values()), Var::constant(x.transpose()));
  return out.value().row(0).transpose();
}

ParamVector mlp_init(const MlpSpec& spec, std::uint64_t seed) {
  ParamVector p = ParamVector::zeros(spec.layout());
  std::mt19937_64 rng(seed);
  auto fill = [&](const char* w, const char* b, Eigen::Index fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (const char* name : {w, b}) {
      auto seg = p.segment(name);
      for (Eigen::Index i = 0; i < seg.rows(); ++i)
        for (Eigen::Index j = 0; j < seg.cols(); ++j) seg(i, j) = u(rng);
    }
  };
  fill("w1", "b1", spec.input_dim);
  fill("w2", "b2", spec.hidden_dim);
  return p;
}

}  // namespace gamescope
