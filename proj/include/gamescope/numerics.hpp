#pragma once

// Dense and matrix-free eigenvalue solvers for real nonsymmetric operators.

#include <complex>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace gamescope::numerics {

using DenseMatrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using ComplexScalar = std::complex<double>;

enum class SpectrumMethod { dense, arnoldi };

std::string to_string(SpectrumMethod m);

/// Eigenvalues ordered by descending magnitude, ties broken by descending
/// real part then descending imaginary part. `residual_norms` is filled by
/// the iterative solver only.
struct Spectrum {
  std::vector<ComplexScalar> eigenvalues;
  SpectrumMethod method = SpectrumMethod::dense;
  std::vector<double> residual_norms;

  std::size_t size() const { return eigenvalues.size(); }
  double max_magnitude() const;
  double min_real() const;
};

/// Strict ordering used for every spectrum this library emits.
bool spectral_order(const ComplexScalar& a, const ComplexScalar& b);

/// Real Schur form m = Z T Z^T with T quasi upper triangular. Every 2x2
/// diagonal block of T carries a complex conjugate pair; real eigenvalues
/// always sit in 1x1 blocks.
struct RealSchur {
  DenseMatrix t;
  DenseMatrix z;
};

/// Hessenberg reduction followed by Francis double-shift QR. At most
/// `max_iterations_per_eigenvalue` sweeps are spent on each deflation before
/// a ConvergenceError is thrown.
RealSchur real_schur(const DenseMatrix& m, int max_iterations_per_eigenvalue = 60);

/// Eigenvalues read off the diagonal blocks of a quasi-triangular matrix, in
/// block order (unsorted). Conjugate pairs are exact conjugates.
std::vector<ComplexScalar> schur_eigenvalues(const DenseMatrix& t);

/// All n eigenvalues of a square real matrix.
Spectrum eig_dense(const DenseMatrix& m);

/// Eigenvalues together with unit-norm eigenvectors (columns of `vectors`,
/// aligned with `spectrum.eigenvalues`).
struct EigenDecomposition {
  Spectrum spectrum;
  Eigen::MatrixXcd vectors;
};

EigenDecomposition eig_dense_vectors(const DenseMatrix& m);

using LinearOperator = std::function<Vector(const Vector&)>;

struct ArnoldiOptions {
  /// Krylov subspace size; 0 selects max(3k, 40) capped at n-1.
  std::size_t max_subspace = 0;
  double tol = 1e-8;
  int max_restarts = 100;
  std::uint64_t seed = 0;
};

/// The k eigenvalues of largest magnitude of a linear operator known only
/// through its matrix-vector product. Uses Arnoldi with thick explicit
/// restarts: the retained subspace is spanned by the wanted Ritz vectors
/// and a buffer of the next ones.
///
/// When the k-th eigenvalue is one half of a conjugate pair its partner is
/// returned too, so the result may hold k+1 entries. k may equal n, in which
/// case the full Krylov space is built. residual_norms holds the true
/// residuals ||A x - lambda x|| for unit x.
Spectrum eig_topk(const LinearOperator& apply, std::size_t n, std::size_t k,
                  const ArnoldiOptions& opts = {});

/// Materialize an operator column by column.
DenseMatrix materialize(const LinearOperator& apply, std::size_t n);

/// CSV with columns index,re,im,magnitude,residual.
void write_spectrum_csv(std::ostream& out, const Spectrum& s);

}  // namespace gamescope::numerics
