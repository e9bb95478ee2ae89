#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numbers>

#include "eiv/matrix_core.hpp"
#include "eiv/rng.hpp"

namespace eiv::test {

// Random symmetric matrix with entries of order one.
inline SymMatrix random_symmetric(Eigen::Index dim, RngStream& rng) {
  Eigen::MatrixXd m(dim, dim);
  for (Eigen::Index j = 0; j < dim; ++j)
    for (Eigen::Index i = j; i < dim; ++i) {
      const double v = rng.uniform(-1.0, 1.0);
      m(i, j) = v;
      m(j, i) = v;
    }
  return SymMatrix(std::move(m));
}

// Random SPD matrix built as Q diag(ev) Q^T with eigenvalues in [ev_lo, ev_hi].
inline SymMatrix random_spd(Eigen::Index dim, RngStream& rng, double ev_lo = 0.5,
                            double ev_hi = 4.0) {
  const Spectrum s = sym_eigen(random_symmetric(dim, rng));
  Eigen::VectorXd ev(dim);
  for (Eigen::Index i = 0; i < dim; ++i) ev(i) = rng.uniform(ev_lo, ev_hi);
  Eigen::MatrixXd m = s.eigenvectors * ev.asDiagonal() *
                      s.eigenvectors.transpose();
  m = ((m + m.transpose()) / 2.0).eval();
  return SymMatrix(std::move(m));
}

// Closed-form slope of the single-covariate fit with identity weighting:
// the positive root of the quadratic in the second-moment statistics.
inline double closed_form_slope(const Eigen::VectorXd& z,
                                const Eigen::VectorXd& y) {
  const double p = static_cast<double>(z.size());
  const double s_zz = z.squaredNorm() / p;
  const double s_yy = y.squaredNorm() / p;
  const double s_zy = z.dot(y) / p;
  const double g = s_yy - s_zz;
  return (g + std::sqrt(g * g + 4.0 * s_zy * s_zy)) / (2.0 * s_zy);
}

// Standard normal CDF used by the bisection oracle below.
inline double normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

// Independent quantile oracle: plain bisection on the erfc-based CDF.
inline double bisect_normal_quantile(double q) {
  double lo = -40.0;
  double hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = (lo + hi) / 2.0;
    if (normal_cdf(mid) < q)
      lo = mid;
    else
      hi = mid;
  }
  return (lo + hi) / 2.0;
}

}  // namespace eiv::test
