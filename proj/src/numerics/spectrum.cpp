#include <algorithm>
#include <limits>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "gamescope/numerics.hpp"

namespace gamescope::numerics {

std::string to_string(SpectrumMethod m) {
  return m == SpectrumMethod::dense ? "dense" : "arnoldi";
}

bool spectral_order(const ComplexScalar& a, const ComplexScalar& b) {
  const double ma = std::abs(a);
  const double mb = std::abs(b);
  if (ma != mb) return ma > mb;
  if (a.real() != b.real()) return a.real() > b.real();
  return a.imag() > b.imag();
}

double Spectrum::max_magnitude() const {
  double out = 0.0;
  for (const auto& l : eigenvalues) out = std::max(out, std::abs(l));
  return out;
}

double Spectrum::min_real() const {
  double out = std::numeric_limits<double>::infinity();
  for (const auto& l : eigenvalues) out = std::min(out, l.real());
  return out;
}

DenseMatrix materialize(const LinearOperator& apply, std::size_t n) {
  const auto dim = static_cast<Eigen::Index>(n);
  DenseMatrix m(dim, dim);
  Vector e = Vector::Zero(dim);
  for (Eigen::Index j = 0; j < dim; ++j) {
    e(j) = 1.0;
    m.col(j) = apply(e);
    e(j) = 0.0;
  }
  return m;
}

void write_spectrum_csv(std::ostream& out, const Spectrum& s) {
  out << "index,re,im,magnitude,residual\n";
  for (std::size_t i = 0; i < s.eigenvalues.size(); ++i) {
    const auto& l = s.eigenvalues[i];
    fmt::print(out, "{},{},{},{},", i, l.real(), l.imag(), std::abs(l));
    if (i < s.residual_norms.size()) fmt::print(out, "{}", s.residual_norms[i]);
    out << '\n';
  }
}

}  // namespace gamescope::numerics
