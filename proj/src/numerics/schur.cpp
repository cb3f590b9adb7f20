#include "gamescope/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "gamescope/error.hpp"

namespace gamescope::numerics {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

constexpr double kEps = std::numeric_limits<double>::epsilon();

void require_square_finite(const DenseMatrix& m) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw ShapeError(fmt::format("expected a non-empty square matrix, got {}x{}", m.rows(), m.cols()));
  }
  if (!m.allFinite()) throw NumericError("matrix has non-finite entries");
}

// Householder reduction to upper Hessenberg form, h = z^T m z.
void reduce_to_hessenberg(RowMatrix& h, RowMatrix& z) {
  const Eigen::Index n = h.rows();
  z.setIdentity(n, n);
  Eigen::VectorXd v;
  for (Eigen::Index k = 0; k + 2 < n; ++k) {
    const Eigen::Index len = n - k - 1;
    v = h.col(k).tail(len);
    const double alpha = v.norm();
    if (alpha == 0.0) continue;
    const double beta = v(0) >= 0.0 ? -alpha : alpha;
    v(0) -= beta;
    const double vnorm2 = v.squaredNorm();
    if (vnorm2 == 0.0) continue;
    const double scale = 2.0 / vnorm2;
    // h <- P h P with P = I - scale v v^T acting on indices k+1..n-1.
    auto rows = h.bottomRows(len);
    Eigen::RowVectorXd vt_rows = v.transpose() * rows;
    rows.noalias() -= scale * v * vt_rows;
    auto cols = h.rightCols(len);
    Eigen::VectorXd cols_v = cols * v;
    cols.noalias() -= scale * cols_v * v.transpose();
    auto zc = z.rightCols(len);
    Eigen::VectorXd zc_v = zc * v;
    zc.noalias() -= scale * zc_v * v.transpose();
    h.col(k).tail(len - 1).setZero();
    h(k + 1, k) = beta;
  }
}

// Rotate a deflated 2x2 block holding two real eigenvalues into upper
// triangular form.
void split_real_pair(RowMatrix& h, RowMatrix& z, Eigen::Index na, Eigen::Index en, double zz) {
  const Eigen::Index n = h.rows();
  double x = h(en, na);
  const double s = std::abs(x) + std::abs(zz);
  double p = x / s;
  double q = zz / s;
  const double r = std::hypot(p, q);
  p /= r;
  q /= r;
  for (Eigen::Index j = na; j < n; ++j) {
    const double t = h(na, j);
    h(na, j) = q * t + p * h(en, j);
    h(en, j) = q * h(en, j) - p * t;
  }
  for (Eigen::Index i = 0; i <= en; ++i) {
    const double t = h(i, na);
    h(i, na) = q * t + p * h(i, en);
    h(i, en) = q * h(i, en) - p * t;
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = z(i, na);
    z(i, na) = q * t + p * z(i, en);
    z(i, en) = q * z(i, en) - p * t;
  }
  h(en, na) = 0.0;
}

// Francis double-shift QR on an upper Hessenberg matrix, applying every
// transformation to the full matrix so that h converges to the real Schur
// form and z accumulates the Schur vectors.
void francis_qr(RowMatrix& h, RowMatrix& z, int max_its) {
  const Eigen::Index n = h.rows();
  double norm = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = std::max<Eigen::Index>(i - 1, 0); j < n; ++j) norm += std::abs(h(i, j));
  }

  double shift_total = 0.0;
  Eigen::Index en = n - 1;
  while (en >= 0) {
    int its = 0;
    while (true) {
      const Eigen::Index na = en - 1;
      Eigen::Index l = en;
      for (; l > 0; --l) {
        double s = std::abs(h(l - 1, l - 1)) + std::abs(h(l, l));
        if (s == 0.0) s = norm;
        if (std::abs(h(l, l - 1)) <= kEps * s) {
          h(l, l - 1) = 0.0;
          break;
        }
      }

      double x = h(en, en);
      if (l == en) {
        h(en, en) = x + shift_total;
        en -= 1;
        break;
      }
      double y = h(na, na);
      double w = h(en, na) * h(na, en);
      if (l == na) {
        const double p = 0.5 * (y - x);
        const double q = p * p + w;
        double zz = std::sqrt(std::abs(q));
        h(en, en) = x + shift_total;
        h(na, na) = y + shift_total;
        if (q >= 0.0) {
          zz = p + std::copysign(zz, p);
          split_real_pair(h, z, na, en, zz);
        }
        en -= 2;
        break;
      }

      if (its == max_its) {
        throw ConvergenceError(
            fmt::format("QR iteration did not converge after {} sweeps on eigenvalue {}", its, en),
            std::abs(h(en, na)));
      }
      if (its > 0 && its % 10 == 0) {
        // Exceptional shift to break cycles.
        shift_total += x;
        for (Eigen::Index i = 0; i <= en; ++i) h(i, i) -= x;
        const double s = std::abs(h(en, na)) + std::abs(h(na, en - 2));
        x = y = 0.75 * s;
        w = -0.4375 * s * s;
      }
      ++its;

      // Find where the bulge can start: two consecutive small subdiagonals.
      Eigen::Index m = en - 2;
      double p = 0.0;
      double q = 0.0;
      double r = 0.0;
      for (; m >= l; --m) {
        const double zz = h(m, m);
        r = x - zz;
        double s = y - zz;
        p = (r * s - w) / h(m + 1, m) + h(m, m + 1);
        q = h(m + 1, m + 1) - zz - r - s;
        r = h(m + 2, m + 1);
        s = std::abs(p) + std::abs(q) + std::abs(r);
        p /= s;
        q /= s;
        r /= s;
        if (m == l) break;
        const double u = std::abs(h(m, m - 1)) * (std::abs(q) + std::abs(r));
        const double v = std::abs(p) * (std::abs(h(m - 1, m - 1)) + std::abs(zz) + std::abs(h(m + 1, m + 1)));
        if (u <= kEps * v) break;
      }

      for (Eigen::Index i = m + 2; i <= en; ++i) {
        h(i, i - 2) = 0.0;
        if (i != m + 2) h(i, i - 3) = 0.0;
      }

      for (Eigen::Index k = m; k <= na; ++k) {
        const bool notlast = k != na;
        if (k != m) {
          p = h(k, k - 1);
          q = h(k + 1, k - 1);
          r = notlast ? h(k + 2, k - 1) : 0.0;
          x = std::abs(p) + std::abs(q) + std::abs(r);
          if (x == 0.0) continue;
          p /= x;
          q /= x;
          r /= x;
        }
        const double s = std::copysign(std::sqrt(p * p + q * q + r * r), p);
        if (k != m) {
          h(k, k - 1) = -s * x;
        } else if (l != m) {
          h(k, k - 1) = -h(k, k - 1);
        }
        p += s;
        x = p / s;
        y = q / s;
        const double zz = r / s;
        q /= p;
        r /= p;

        for (Eigen::Index j = k; j < n; ++j) {
          double t = h(k, j) + q * h(k + 1, j);
          if (notlast) {
            t += r * h(k + 2, j);
            h(k + 2, j) -= t * zz;
          }
          h(k + 1, j) -= t * y;
          h(k, j) -= t * x;
        }
        const Eigen::Index imax = std::min(en, k + 3);
        for (Eigen::Index i = 0; i <= imax; ++i) {
          double t = x * h(i, k) + y * h(i, k + 1);
          if (notlast) {
            t += zz * h(i, k + 2);
            h(i, k + 2) -= t * r;
          }
          h(i, k + 1) -= t * q;
          h(i, k) -= t;
        }
        for (Eigen::Index i = 0; i < n; ++i) {
          double t = x * z(i, k) + y * z(i, k + 1);
          if (notlast) {
            t += zz * z(i, k + 2);
            z(i, k + 2) -= t * r;
          }
          z(i, k + 1) -= t * q;
          z(i, k) -= t;
        }
      }
    }
  }

  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j + 1 < i; ++j) h(i, j) = 0.0;
  }
}

std::pair<ComplexScalar, ComplexScalar> block_pair(double a, double b, double c, double d) {
  const double p = 0.5 * (a - d);
  const double disc = p * p + b * c;
  const double mid = 0.5 * (a + d);
  if (disc >= 0.0) {
    const double root = std::sqrt(disc);
    return {ComplexScalar(mid + root, 0.0), ComplexScalar(mid - root, 0.0)};
  }
  const double im = std::sqrt(-disc);
  return {ComplexScalar(mid, im), ComplexScalar(mid, -im)};
}

// Eigenvector of the quasi-triangular t for the eigenvalue sitting at block
// `start` (size 1 or 2), by back substitution. Near-singular pivots are
// perturbed to `smin` so repeated eigenvalues still yield a vector.
Eigen::VectorXcd quasi_triangular_vector(const DenseMatrix& t, const std::vector<Eigen::Index>& block_start,
                                         Eigen::Index block, ComplexScalar lambda, double smin) {
  const Eigen::Index n = t.rows();
  Eigen::VectorXcd x = Eigen::VectorXcd::Zero(n);
  const Eigen::Index s0 = block_start[block];
  const Eigen::Index size = (block + 1 < static_cast<Eigen::Index>(block_start.size()) ? block_start[block + 1] : n) - s0;
  if (size == 1) {
    x(s0) = 1.0;
  } else {
    const ComplexScalar a = t(s0, s0) - lambda;
    const ComplexScalar b = t(s0, s0 + 1);
    const ComplexScalar c = t(s0 + 1, s0);
    const ComplexScalar d = t(s0 + 1, s0 + 1) - lambda;
    if (std::abs(a) + std::abs(b) >= std::abs(c) + std::abs(d)) {
      x(s0) = b;
      x(s0 + 1) = -a;
    } else {
      x(s0) = -d;
      x(s0 + 1) = c;
    }
  }
  const Eigen::Index top = s0 + size;

  for (Eigen::Index bi = block - 1; bi >= 0; --bi) {
    const Eigen::Index i0 = block_start[bi];
    const Eigen::Index isz = block_start[bi + 1] - i0;
    if (isz == 1) {
      ComplexScalar rhs = 0.0;
      for (Eigen::Index j = i0 + 1; j < top; ++j) rhs -= t(i0, j) * x(j);
      ComplexScalar piv = t(i0, i0) - lambda;
      if (std::abs(piv) < smin) piv = smin;
      x(i0) = rhs / piv;
    } else {
      ComplexScalar r0 = 0.0;
      ComplexScalar r1 = 0.0;
      for (Eigen::Index j = i0 + 2; j < top; ++j) {
        r0 -= t(i0, j) * x(j);
        r1 -= t(i0 + 1, j) * x(j);
      }
      const ComplexScalar a = t(i0, i0) - lambda;
      const ComplexScalar b = t(i0, i0 + 1);
      const ComplexScalar c = t(i0 + 1, i0);
      const ComplexScalar d = t(i0 + 1, i0 + 1) - lambda;
      ComplexScalar det = a * d - b * c;
      if (std::abs(det) < smin * smin) det = smin * smin;
      x(i0) = (r0 * d - b * r1) / det;
      x(i0 + 1) = (a * r1 - c * r0) / det;
    }
    const double big = x.cwiseAbs().maxCoeff();
    if (big > 1e100) x /= big;
  }
  return x;
}

std::vector<Eigen::Index> block_starts(const DenseMatrix& t) {
  std::vector<Eigen::Index> starts;
  const Eigen::Index n = t.rows();
  for (Eigen::Index i = 0; i < n;) {
    starts.push_back(i);
    i += (i + 1 < n && t(i + 1, i) != 0.0) ? 2 : 1;
  }
  return starts;
}

std::vector<std::size_t> sorted_order(const std::vector<ComplexScalar>& values) {
  std::vector<std::size_t> order(values.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return spectral_order(values[a], values[b]); });
  return order;
}

}  // namespace

RealSchur real_schur(const DenseMatrix& m, int max_iterations_per_eigenvalue) {
  require_square_finite(m);
  RowMatrix h = m;
  RowMatrix z;
  reduce_to_hessenberg(h, z);
  francis_qr(h, z, max_iterations_per_eigenvalue);
  return RealSchur{DenseMatrix(h), DenseMatrix(z)};
}

std::vector<ComplexScalar> schur_eigenvalues(const DenseMatrix& t) {
  std::vector<ComplexScalar> out;
  out.reserve(static_cast<std::size_t>(t.rows()));
  for (Eigen::Index s : block_starts(t)) {
    if (s + 1 < t.rows() && t(s + 1, s) != 0.0) {
      auto [a, b] = block_pair(t(s, s), t(s, s + 1), t(s + 1, s), t(s + 1, s + 1));
      out.push_back(a);
      out.push_back(b);
    } else {
      out.emplace_back(t(s, s), 0.0);
    }
  }
  return out;
}

Spectrum eig_dense(const DenseMatrix& m) {
  const RealSchur schur = real_schur(m);
  std::vector<ComplexScalar> values = schur_eigenvalues(schur.t);
  std::sort(values.begin(), values.end(), spectral_order);
  return Spectrum{std::move(values), SpectrumMethod::dense, {}};
}

EigenDecomposition eig_dense_vectors(const DenseMatrix& m) {
  const RealSchur schur = real_schur(m);
  const DenseMatrix& t = schur.t;
  const Eigen::Index n = t.rows();
  const std::vector<Eigen::Index> starts = block_starts(t);
  const double smin = std::max(kEps * t.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());

  std::vector<ComplexScalar> values;
  Eigen::MatrixXcd vecs(n, n);
  const Eigen::MatrixXcd zc = schur.z.cast<ComplexScalar>();
  Eigen::Index col = 0;
  for (std::size_t b = 0; b < starts.size(); ++b) {
    const Eigen::Index s = starts[b];
    const bool pair = s + 1 < n && t(s + 1, s) != 0.0;
    if (pair) {
      auto [lp, lm] = block_pair(t(s, s), t(s, s + 1), t(s + 1, s), t(s + 1, s + 1));
      Eigen::VectorXcd v = zc * quasi_triangular_vector(t, starts, static_cast<Eigen::Index>(b), lp, smin);
      v.normalize();
      values.push_back(lp);
      values.push_back(lm);
      vecs.col(col++) = v;
      vecs.col(col++) = v.conjugate();
    } else {
      const ComplexScalar l(t(s, s), 0.0);
      Eigen::VectorXcd v = zc * quasi_triangular_vector(t, starts, static_cast<Eigen::Index>(b), l, smin);
      v.normalize();
      values.push_back(l);
      vecs.col(col++) = v;
    }
  }

  const std::vector<std::size_t> order = sorted_order(values);
  EigenDecomposition out;
  out.spectrum.method = SpectrumMethod::dense;
  out.vectors.resize(n, n);
  for (std::size_t i = 0; i < order.size(); ++i) {
    out.spectrum.eigenvalues.push_back(values[order[i]]);
    out.vectors.col(static_cast<Eigen::Index>(i)) = vecs.col(static_cast<Eigen::Index>(order[i]));
  }
  return out;
}

}  // namespace gamescope::numerics
