#include <cmath>

#include <fmt/format.h>

#include "gamescope/dynamics.hpp"

namespace gamescope::dynamics {

std::string to_string(ModeClass c) {
  switch (c) {
    case ModeClass::attraction:
      return "attraction";
    case ModeClass::rotation:
      return "rotation";
    case ModeClass::both:
      return "both";
  }
  return "?";
}

ModeClass classify_mode(const ComplexScalar& lambda, double zero_tol) {
  if (std::abs(lambda.imag()) <= zero_tol) return ModeClass::attraction;
  if (std::abs(lambda.real()) <= zero_tol) return ModeClass::rotation;
  return ModeClass::both;
}

ModeDecomposition decompose_modes(const DenseMatrix& j, double max_condition) {
  if (j.rows() != j.cols()) throw ShapeError(fmt::format("Jacobian must be square, got {}x{}", j.rows(), j.cols()));
  const numerics::EigenDecomposition eig = numerics::eig_dense_vectors(j);
  const Eigen::Index n = j.rows();
  ModeDecomposition out;
  out.basis = DenseMatrix::Zero(n, n);
  out.blocks = DenseMatrix::Zero(n, n);
  Eigen::Index col = 0;
  const auto& values = eig.spectrum.eigenvalues;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const ComplexScalar lambda = values[i];
    const Eigen::VectorXcd u = eig.vectors.col(static_cast<Eigen::Index>(i));
    if (lambda.imag() < 0.0) continue;  // the partner of a pair already placed
    Mode mode{lambda, classify_mode(lambda), col, lambda.imag() > 0.0 ? 2 : 1};
    if (mode.width == 1) {
      out.basis.col(col) = u.real();
      out.blocks(col, col) = lambda.real();
    } else {
      if (col + 1 >= n) throw NumericError("eigenvalue list is not closed under conjugation");
      // u + conj(u) and i (u - conj(u)).
      out.basis.col(col) = 2.0 * u.real();
      out.basis.col(col + 1) = -2.0 * u.imag();
      const double a = lambda.real();
      const double b = lambda.imag();
      out.blocks(col, col) = a;
      out.blocks(col, col + 1) = -b;
      out.blocks(col + 1, col) = b;
      out.blocks(col + 1, col + 1) = a;
    }
    col += mode.width;
    out.modes.push_back(mode);
  }
  if (col != n) throw NumericError("eigenvalue list is not closed under conjugation");

  DenseMatrix normalized = out.basis;
  for (Eigen::Index c = 0; c < n; ++c) {
    const double norm = normalized.col(c).norm();
    if (norm > 0.0) normalized.col(c) /= norm;
  }
  const Eigen::JacobiSVD<DenseMatrix> svd(normalized);
  const double smin = svd.singularValues()(n - 1);
  out.condition = smin > 0.0 ? svd.singularValues()(0) / smin : std::numeric_limits<double>::infinity();
  if (!(out.condition <= max_condition)) {
    throw NumericError(fmt::format("Jacobian is too close to defective: eigenvector basis condition {:.3g} exceeds {:.3g}",
                                   out.condition, max_condition));
  }
  return out;
}

Vector ModeDecomposition::coordinates(const Vector& delta) const { return basis.partialPivLu().solve(delta); }

Vector ModeDecomposition::evolve_coordinates(const Vector& coords, double t) const {
  Vector out(coords.size());
  for (const Mode& m : modes) {
    const Eigen::Index c = m.column;
    if (m.width == 1) {
      out(c) = std::exp(-m.eigenvalue.real() * t) * coords(c);
    } else {
      // exp(-t [[a, -b], [b, a]]) = e^{-a t} [[cos bt, sin bt], [-sin bt, cos bt]].
      const double decay = std::exp(-m.eigenvalue.real() * t);
      const double cs = std::cos(m.eigenvalue.imag() * t);
      const double sn = std::sin(m.eigenvalue.imag() * t);
      out(c) = decay * (cs * coords(c) + sn * coords(c + 1));
      out(c + 1) = decay * (-sn * coords(c) + cs * coords(c + 1));
    }
  }
  return out;
}

Vector linear_flow_solution(const DenseMatrix& j, const Vector& omega0, const Vector& center, double t) {
  if (omega0.size() != j.rows() || center.size() != j.rows()) {
    throw ShapeError(fmt::format("flow state has length {} and center {}, Jacobian is {}x{}", omega0.size(),
                                 center.size(), j.rows(), j.cols()));
  }
  const ModeDecomposition dec = decompose_modes(j);
  return center + dec.basis * dec.evolve_coordinates(dec.coordinates(omega0 - center), t);
}

FlowPath rk4_integrate(const std::function<Vector(const Vector&)>& field, const Vector& omega0, double T, double h,
                       std::size_t record_every) {
  if (!(h > 0.0)) throw ArgumentError("step size must be positive");
  if (!(T >= 0.0)) throw ArgumentError("final time must be non-negative");
  if (record_every == 0) throw ArgumentError("record interval must be positive");
  FlowPath path;
  path.times.push_back(0.0);
  path.states.push_back(omega0);
  Vector w = omega0;
  double t = 0.0;
  const auto steps = static_cast<std::size_t>(std::ceil(T / h - 1e-9));
  auto rhs = [&](const Vector& x) -> Vector { return -field(x); };
  for (std::size_t s = 1; s <= steps; ++s) {
    const double dt = s == steps ? T - t : h;
    const Vector k1 = rhs(w);
    const Vector k2 = rhs(w + 0.5 * dt * k1);
    const Vector k3 = rhs(w + 0.5 * dt * k2);
    const Vector k4 = rhs(w + dt * k3);
    const Vector next = w + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!next.allFinite()) {
      throw IntegrationError(fmt::format("integration left the finite range after t = {:g}", t), t, w);
    }
    w = next;
    t = s == steps ? T : static_cast<double>(s) * h;
    if (s % record_every == 0 || s == steps) {
      path.times.push_back(t);
      path.states.push_back(w);
    }
  }
  return path;
}

}  // namespace gamescope::dynamics
