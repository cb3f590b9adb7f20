#pragma once

#include <cstdint>

#include "gamescope/autograd.hpp"
#include "gamescope/params.hpp"

namespace gamescope {

enum class OutputActivation { identity, sigmoid };

/// One hidden layer with ReLU: y = out(relu(x W1 + b1) W2 + b2).
struct MlpSpec {
  Eigen::Index input_dim = 1;
  Eigen::Index hidden_dim = 100;
  Eigen::Index output_dim = 1;
  OutputActivation output = OutputActivation::identity;

  /// Segments w1 (in x hidden), b1 (1 x hidden), w2 (hidden x out),
  /// b2 (1 x out). Throws ShapeError if any dimension is below 1.
  Layout layout() const;
  Eigen::Index parameter_count() const { return layout().size(); }
};

/// Batched forward pass; `params` is a column vector laid out as
/// spec.layout(), `x` holds one sample per row.
autograd::Var mlp_forward(const MlpSpec& spec, const autograd::Var& params, const autograd::Var& x);

/// Single-sample evaluation.
Eigen::VectorXd mlp_apply(const MlpSpec& spec, const ParamVector& params, const Eigen::VectorXd& x);

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for every weight and bias of a
/// layer.
ParamVector mlp_init(const MlpSpec& spec, std::uint64_t seed);

}  // namespace gamescope
