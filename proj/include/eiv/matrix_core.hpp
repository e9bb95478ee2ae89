#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <string>
#include <utility>

#include "eiv/errors.hpp"

namespace eiv {

// Global conditioning constant: a symmetric positive semidefinite system is
// treated as numerically singular once lambda_min <= ratio * lambda_max.
// Every solver in the library takes this as a defaulted trailing parameter.
inline constexpr double kConditionRatio = 1e-12;

// Dense symmetric matrix with validated entries. Construction rejects
// non-square shapes, non-finite values, and asymmetry beyond 1e-12 relative.
class SymMatrix {
 public:
  explicit SymMatrix(Eigen::MatrixXd entries) : m_(std::move(entries)) {
    if (m_.rows() == 0 || m_.rows() != m_.cols())
      throw InputError("SymMatrix: expected a nonempty square matrix");
    if (!m_.allFinite()) throw InputError("SymMatrix: non-finite entries");
    for (Eigen::Index j = 0; j < m_.cols(); ++j)
      for (Eigen::Index i = j + 1; i < m_.rows(); ++i) {
        const double a = m_(i, j);
        const double b = m_(j, i);
        if (std::abs(a - b) > 1e-12 * std::max(1.0, std::abs(a)))
          throw InputError("SymMatrix: entries (" + std::to_string(i) + "," +
                           std::to_string(j) + ") and transpose disagree");
      }
  }

  static SymMatrix identity(Eigen::Index dim) {
    return SymMatrix(Eigen::MatrixXd::Identity(dim, dim));
  }

  static SymMatrix diagonal(const Eigen::VectorXd& d) {
    return SymMatrix(Eigen::MatrixXd(d.asDiagonal()));
  }

  Eigen::Index dim() const { return m_.rows(); }
  const Eigen::MatrixXd& mat() const { return m_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

 private:
  Eigen::MatrixXd m_;
};

// Full eigendecomposition of a symmetric matrix, eigenvalues ascending and
// eigenvector columns paired with them.
struct Spectrum {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;

  double lambda_min() const { return eigenvalues(0); }
  double lambda_max() const { return eigenvalues(eigenvalues.size() - 1); }
};

inline Spectrum sym_eigen(const SymMatrix& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m.mat());
  if (solver.info() != Eigen::Success)
    throw Error("sym_eigen: eigendecomposition did not converge");
  return Spectrum{solver.eigenvalues(), solver.eigenvectors()};
}

// Eigenvalues only, ascending; roughly four times cheaper than sym_eigen for
// large matrices.
inline Eigen::VectorXd sym_eigenvalues(const SymMatrix& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m.mat(),
                                                        Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success)
    throw Error("sym_eigenvalues: eigendecomposition did not converge");
  return solver.eigenvalues();
}

inline double spectral_norm(const SymMatrix& m) {
  const Eigen::VectorXd ev = sym_eigenvalues(m);
  return std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
}

// Lower-triangular factor L with L L^T = m. Throws with the offending pivot
// index when a pivot falls to or below 1e-12 * trace/dim.
inline Eigen::MatrixXd cholesky_lower(const SymMatrix& m) {
  const Eigen::Index n = m.dim();
  Eigen::MatrixXd a = m.mat();
  const double pivot_floor = 1e-12 * a.trace() / static_cast<double>(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    if (j > 0)
      a.col(j).tail(n - j).noalias() -=
          a.block(j, 0, n - j, j) * a.row(j).head(j).transpose();
    const double pivot = a(j, j);
    if (pivot <= pivot_floor)
      throw NotPositiveDefiniteError(
          "cholesky_lower: nonpositive pivot " + std::to_string(pivot) +
              " at index " + std::to_string(j),
          static_cast<int>(j));
    const double root = std::sqrt(pivot);
    a(j, j) = root;
    if (j + 1 < n) a.col(j).tail(n - j - 1) /= root;
  }
  a.triangularView<Eigen::StrictlyUpper>().setZero();
  return a;
}

// Solves m x = rhs for every column of rhs through a precomputed spectrum.
// Refuses indefinite input and systems past the conditioning threshold.
inline Eigen::MatrixXd spectral_solve(const Spectrum& s,
                                      const Eigen::MatrixXd& rhs,
                                      double condition_ratio = kConditionRatio) {
  if (s.eigenvalues.size() != rhs.rows())
    throw InputError("spectral_solve: dimension mismatch");
  const double lmin = s.lambda_min();
  const double lmax = s.lambda_max();
  if (lmin <= 0.0)
    throw NotPositiveDefiniteError(
        "spectral_solve: matrix is not positive definite (lambda_min=" +
            std::to_string(lmin) + ")",
        -1);
  if (lmin <= condition_ratio * lmax)
    throw IllConditionedError(
        "spectral_solve: eigenvalue ratio " + std::to_string(lmin / lmax) +
            " below threshold " + std::to_string(condition_ratio),
        lmin / lmax);
  Eigen::MatrixXd t = s.eigenvectors.transpose() * rhs;
  t.array().colwise() /= s.eigenvalues.array();
  return s.eigenvectors * t;
}

inline Eigen::MatrixXd solve_spd(const SymMatrix& m, const Eigen::MatrixXd& rhs,
                                 double condition_ratio = kConditionRatio) {
  return spectral_solve(sym_eigen(m), rhs, condition_ratio);
}

// Inverse standard normal CDF. Rational initial estimate (Acklam) refined by
// one Halley step against the erfc-based CDF; absolute error is far below the
// 1e-8 contract across (0,1).
inline double normal_quantile(double q) {
  if (!(q > 0.0 && q < 1.0))
    throw InputError("normal_quantile: q must lie strictly inside (0,1)");
  static constexpr double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                  -2.759285104469687e+02, 1.383577518672690e+02,
                                  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                  -1.556989798598866e+02, 6.680131188771972e+01,
                                  -1.328068155288572e+01};
  static constexpr double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                  -2.400758277161838e+00, -2.549732539343734e+00,
                                  4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                  2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double plow = 0.02425;
  constexpr double phigh = 1.0 - plow;
  double x;
  if (q < plow) {
    const double r = std::sqrt(-2.0 * std::log(q));
    x = (((((c[0] * r + c[1]) * r + c[2]) * r + c[3]) * r + c[4]) * r + c[5]) /
        ((((d[0] * r + d[1]) * r + d[2]) * r + d[3]) * r + 1.0);
  } else if (q <= phigh) {
    const double r = q - 0.5;
    const double s = r * r;
    x = (((((a[0] * s + a[1]) * s + a[2]) * s + a[3]) * s + a[4]) * s + a[5]) *
        r /
        (((((b[0] * s + b[1]) * s + b[2]) * s + b[3]) * s + b[4]) * s + 1.0);
  } else {
    const double r = std::sqrt(-2.0 * std::log(1.0 - q));
    x = -(((((c[0] * r + c[1]) * r + c[2]) * r + c[3]) * r + c[4]) * r + c[5]) /
        ((((d[0] * r + d[1]) * r + d[2]) * r + d[3]) * r + 1.0);
  }
  const double err = 0.5 * std::erfc(-x / std::numbers::sqrt2) - q;
  const double u =
      err * std::sqrt(2.0 * std::numbers::pi) * std::exp(x * x / 2.0);
  return x - u / (1.0 + x * u / 2.0);
}

}  // namespace eiv
