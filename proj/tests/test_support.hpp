#pragma once

// Shared generators for the test suites.

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Dense>

namespace test_support {

inline Eigen::MatrixXd random_matrix(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = normal(rng);
  return m;
}

inline Eigen::MatrixXd random_orthogonal(int n, std::mt19937_64& rng) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(random_matrix(n, rng));
  return qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
}

/// Q (D + N) Q^T where D is block diagonal with leading magnitudes
/// 10, 9, 8 (complex pair), 6.5, 5.5 and the remainder below 4, and N is a
/// small strictly upper block-triangular perturbation.
inline Eigen::MatrixXd separated_spectrum_matrix(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  d(0, 0) = 10.0;
  d(1, 1) = -9.0;
  const double angle = 0.7;
  d(2, 2) = 8.0 * std::cos(angle);
  d(3, 3) = 8.0 * std::cos(angle);
  d(2, 3) = 8.0 * std::sin(angle);
  d(3, 2) = -8.0 * std::sin(angle);
  d(4, 4) = 6.5;
  d(5, 5) = -5.5;
  for (int i = 6; i < n; ++i) d(i, i) = 4.0 * unit(rng);
  for (int i = 0; i < n; ++i)
    for (int j = i + 2; j < n; ++j) d(i, j) = 0.1 * unit(rng);
  const Eigen::MatrixXd q = random_orthogonal(n, rng);
  return q * d * q.transpose();
}

/// P D P^-1 with D block diagonal (real parts in [re_lo, re_hi], imaginary
/// parts up to im_max, about half the modes paired) and a random P whose
/// condition number stays below max_condition.
inline Eigen::MatrixXd random_diagonalizable(int n, std::mt19937_64& rng, double re_lo, double re_hi, double im_max,
                                             double max_condition) {
  std::uniform_real_distribution<double> re(re_lo, re_hi);
  std::uniform_real_distribution<double> im(0.2, im_max);
  std::bernoulli_distribution pair(0.5);
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n;) {
    if (i + 1 < n && pair(rng)) {
      const double a = re(rng);
      const double b = im(rng);
      d(i, i) = a;
      d(i + 1, i + 1) = a;
      d(i, i + 1) = -b;
      d(i + 1, i) = b;
      i += 2;
    } else {
      d(i, i) = re(rng);
      i += 1;
    }
  }
  for (;;) {
    const Eigen::MatrixXd p = random_matrix(n, rng);
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(p);
    const auto& sv = svd.singularValues();
    if (sv(n - 1) > 0 && sv(0) / sv(n - 1) <= max_condition) return p * d * p.inverse();
  }
}

}  // namespace test_support
