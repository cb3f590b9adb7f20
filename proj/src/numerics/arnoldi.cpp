#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <fmt/format.h>

#include "gamescope/error.hpp"
#include "gamescope/numerics.hpp"

namespace gamescope::numerics {
namespace {

Vector random_unit(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = normal(rng);
  return v / v.norm();
}

// Two passes of classical Gram-Schmidt against basis.leftCols(cols).
Vector orthogonalize(const DenseMatrix& basis, Eigen::Index cols, Vector w, Vector* coeffs) {
  const auto q = basis.leftCols(cols);
  Vector h = q.transpose() * w;
  w.noalias() -= q * h;
  const Vector h2 = q.transpose() * w;
  w.noalias() -= q * h2;
  if (coeffs != nullptr) *coeffs = h + h2;
  return w;
}

Vector checked_apply(const LinearOperator& apply, const Vector& x, Eigen::Index n) {
  Vector y = apply(x);
  if (y.size() != n) {
    throw ShapeError(fmt::format("operator returned length {}, expected {}", y.size(), n));
  }
  if (!y.allFinite()) throw NumericError("operator produced non-finite values");
  return y;
}

// Number of leading sorted eigenvalues to keep so that no conjugate pair is
// split at the boundary.
std::size_t wanted_count(const std::vector<ComplexScalar>& sorted, std::size_t k) {
  if (k >= sorted.size()) return sorted.size();
  const ComplexScalar last = sorted[k - 1];
  if (last.imag() > 0.0 && sorted[k] == std::conj(last)) return k + 1;
  return k;
}

}  // namespace

Spectrum eig_topk(const LinearOperator& apply, std::size_t n, std::size_t k, const ArnoldiOptions& opts) {
  if (n == 0 || k == 0) throw ArgumentError("eig_topk needs n >= 1 and k >= 1");
  if (k > n) throw ArgumentError(fmt::format("eig_topk: k = {} exceeds the dimension {}", k, n));

  const auto dim = static_cast<Eigen::Index>(n);
  std::size_t m = opts.max_subspace != 0 ? opts.max_subspace : std::min(std::max<std::size_t>(3 * k, 40), n - 1);
  m = std::max(m, k + 2);
  if (m + 1 >= n) m = n;  // Too close to the full space to gain anything from restarts.
  const auto msub = static_cast<Eigen::Index>(m);
  const bool full_space = m == n;

  std::mt19937_64 rng(opts.seed);
  DenseMatrix basis = DenseMatrix::Zero(dim, msub + 1);
  DenseMatrix hess = DenseMatrix::Zero(msub + 1, msub);
  basis.col(0) = random_unit(dim, rng);
  Eigen::Index kept = 0;
  double best_residual = std::numeric_limits<double>::infinity();

  for (int restart = 0;; ++restart) {
    for (Eigen::Index j = kept; j < msub; ++j) {
      Vector coeffs;
      Vector w = orthogonalize(basis, j + 1, checked_apply(apply, basis.col(j), dim), &coeffs);
      hess.col(j).head(j + 1) = coeffs;
      if (j + 1 == dim) break;  // Krylov space exhausted; residual is zero.
      double beta = w.norm();
      const double scale = std::max(1.0, hess.topLeftCorner(j + 2, j + 1).cwiseAbs().maxCoeff());
      if (beta <= 1e-12 * scale) {
        // Invariant subspace reached; continue in a fresh orthogonal direction.
        for (int tries = 0; tries < 5 && beta <= 0.5; ++tries) {
          w = orthogonalize(basis, j + 1, random_unit(dim, rng), nullptr);
          beta = w.norm();
        }
        hess(j + 1, j) = 0.0;
      } else {
        hess(j + 1, j) = beta;
      }
      basis.col(j + 1) = w / beta;
    }

    const DenseMatrix h = hess.topLeftCorner(msub, msub);
    const double f_norm = full_space ? 0.0 : hess(msub, msub - 1);
    const EigenDecomposition ritz = eig_dense_vectors(h);
    const std::vector<ComplexScalar>& theta = ritz.spectrum.eigenvalues;
    const std::size_t want = wanted_count(theta, k);

    bool estimates_ok = true;
    for (std::size_t i = 0; i < want; ++i) {
      const double est = f_norm * std::abs(ritz.vectors(msub - 1, static_cast<Eigen::Index>(i)));
      if (est > opts.tol) estimates_ok = false;
    }

    if (estimates_ok || full_space) {
      Spectrum out;
      out.method = SpectrumMethod::arnoldi;
      double worst = 0.0;
      const auto q = basis.leftCols(msub);
      for (std::size_t i = 0; i < want; ++i) {
        const ComplexScalar l = theta[i];
        if (l.imag() < 0.0 && i > 0 && theta[i - 1] == std::conj(l)) {
          out.eigenvalues.push_back(l);
          out.residual_norms.push_back(out.residual_norms.back());
          continue;
        }
        const Eigen::VectorXcd y = ritz.vectors.col(static_cast<Eigen::Index>(i));
        const Vector xr = q * y.real();
        const Vector xi = q * y.imag();
        const Vector ar = checked_apply(apply, xr, dim);
        const Vector ai = l.imag() != 0.0 ? checked_apply(apply, xi, dim) : Vector(Vector::Zero(dim));
        const Vector rr = ar - l.real() * xr + l.imag() * xi;
        const Vector ri = ai - l.real() * xi - l.imag() * xr;
        const double xnorm = std::sqrt(xr.squaredNorm() + xi.squaredNorm());
        const double res = std::sqrt(rr.squaredNorm() + ri.squaredNorm()) / xnorm;
        out.eigenvalues.push_back(l);
        out.residual_norms.push_back(res);
        worst = std::max(worst, res);
      }
      best_residual = std::min(best_residual, worst);
      if (worst <= opts.tol || (full_space && worst <= std::max(opts.tol, 1e-10 * h.norm()))) return out;
    }

    if (restart >= opts.max_restarts) {
      throw ConvergenceError(
          fmt::format("Arnoldi did not reach tol {:g} for k = {} after {} restarts", opts.tol, k, restart),
          best_residual);
    }
    if (full_space) {
      throw ConvergenceError("Arnoldi on the full Krylov space left residuals above tolerance", best_residual);
    }

    // Thick restart: keep the real invariant subspace of h spanned by the
    // wanted Ritz vectors plus a buffer of the next ones, which speeds up
    // convergence when the cut falls inside a cluster.
    const std::size_t keep = wanted_count(theta, std::min(want + (m - want) / 2, m - 2));
    DenseMatrix y(msub, static_cast<Eigen::Index>(keep) + 1);
    Eigen::Index cols = 0;
    for (std::size_t i = 0; i < keep; ++i) {
      const ComplexScalar l = theta[i];
      const auto v = ritz.vectors.col(static_cast<Eigen::Index>(i));
      if (l.imag() == 0.0) {
        y.col(cols++) = v.real();
      } else if (l.imag() > 0.0) {
        y.col(cols++) = v.real();
        y.col(cols++) = v.imag();
      }
    }
    Eigen::ColPivHouseholderQR<DenseMatrix> qr(y.leftCols(cols));
    qr.setThreshold(1e-10);
    const Eigen::Index rank = std::min<Eigen::Index>(qr.rank(), msub - 1);
    const DenseMatrix qfull = qr.householderQ() * DenseMatrix::Identity(msub, rank);

    const DenseMatrix g = qfull.transpose() * h * qfull;
    const DenseMatrix new_basis = basis.leftCols(msub) * qfull;
    const Vector next = basis.col(msub);
    hess.setZero();
    hess.topLeftCorner(rank, rank) = g;
    hess.row(rank).head(rank) = f_norm * qfull.row(msub - 1);
    basis.setZero();
    basis.leftCols(rank) = new_basis;
    basis.col(rank) = next;
    kept = rank;
  }
}

}  // namespace gamescope::numerics
