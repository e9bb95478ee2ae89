#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "eiv/errors.hpp"
#include "eiv/matrix_core.hpp"

namespace eiv {

// Observed covariates (one per column) and responses for a single fit.
class Dataset {
 public:
  Dataset(Eigen::MatrixXd z, Eigen::VectorXd y)
      : z_(std::move(z)), y_(std::move(y)) {
    if (z_.cols() < 1) throw InputError("Dataset: need at least one covariate");
    if (z_.rows() != y_.size())
      throw InputError("Dataset: covariate and response lengths differ");
    if (z_.rows() <= z_.cols())
      throw InputError("Dataset: need more observations than covariates");
    if (!z_.allFinite() || !y_.allFinite())
      throw InputError("Dataset: non-finite entries");
  }

  Eigen::Index p() const { return z_.rows(); }
  Eigen::Index m() const { return z_.cols(); }
  const Eigen::MatrixXd& z() const { return z_; }
  const Eigen::VectorXd& y() const { return y_; }

 private:
  Eigen::MatrixXd z_;
  Eigen::VectorXd y_;
};

enum class WeightKind { identity, explicit_matrix, inverse_of };

// Observation weighting A. Realization is eager: an explicit weight is
// checked for positive definiteness, an inverse weight for conditioning of
// the matrix being inverted, so apply() never fails numerically.
class Weighting {
 public:
  static Weighting identity() { return Weighting(); }

  static Weighting explicit_matrix(SymMatrix a) {
    const Eigen::VectorXd ev = sym_eigenvalues(a);
    if (ev(0) <= 0.0)
      throw NotPositiveDefiniteError(
          "Weighting: explicit weight has lambda_min=" + std::to_string(ev(0)),
          -1);
    Weighting w;
    w.kind_ = WeightKind::explicit_matrix;
    w.dim_ = a.dim();
    w.measured_ratio_ = ev(0) / ev(ev.size() - 1);
    w.matrix_ = std::make_shared<Eigen::MatrixXd>(a.mat());
    return w;
  }

  // Weight by the inverse of s. A spectrum of s may be supplied to reuse an
  // existing factorization; it must belong to s.
  static Weighting inverse_of(const SymMatrix& s,
                              std::shared_ptr<const Spectrum> spectrum = nullptr,
                              double condition_ratio = kConditionRatio) {
    if (!spectrum) spectrum = std::make_shared<Spectrum>(sym_eigen(s));
    if (spectrum->eigenvalues.size() != s.dim())
      throw InputError("Weighting: spectrum does not match the matrix");
    const double lmin = spectrum->lambda_min();
    const double lmax = spectrum->lambda_max();
    if (lmin <= 0.0)
      throw NotPositiveDefiniteError(
          "Weighting: matrix to invert has lambda_min=" + std::to_string(lmin),
          -1);
    if (lmin <= condition_ratio * lmax)
      throw IllConditionedError(
          "Weighting: matrix to invert has eigenvalue ratio " +
              std::to_string(lmin / lmax),
          lmin / lmax);
    Weighting w;
    w.kind_ = WeightKind::inverse_of;
    w.dim_ = s.dim();
    w.measured_ratio_ = lmin / lmax;
    w.spectrum_ = std::move(spectrum);
    return w;
  }

  WeightKind kind() const { return kind_; }

  // 0 means the weight works for any dimension (identity).
  Eigen::Index dim() const { return dim_; }

  // lambda_min / lambda_max of the realized weight.
  double condition_ratio_measured() const { return measured_ratio_; }

  // Returns A x.
  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const {
    if (dim_ > 0 && x.rows() != dim_)
      throw InputError("Weighting: dimension mismatch in apply");
    switch (kind_) {
      case WeightKind::identity:
        return x;
      case WeightKind::explicit_matrix:
        return *matrix_ * x;
      case WeightKind::inverse_of: {
        Eigen::MatrixXd t = spectrum_->eigenvectors.transpose() * x;
        t.array().colwise() /= spectrum_->eigenvalues.array();
        return spectrum_->eigenvectors * t;
      }
    }
    throw Error("Weighting: unreachable");
  }

 private:
  Weighting() = default;

  WeightKind kind_ = WeightKind::identity;
  Eigen::Index dim_ = 0;
  double measured_ratio_ = 1.0;
  std::shared_ptr<const Eigen::MatrixXd> matrix_;
  std::shared_ptr<const Spectrum> spectrum_;
};

// Weighted second-moment statistics of the augmented data W = (Z, y):
// q_ww = W' A W / p, with the covariate block and its spectrum split out.
struct QStats {
  Eigen::MatrixXd q_zz;
  Eigen::VectorXd q_zy;
  double q_yy = 0.0;
  Eigen::MatrixXd q_ww;
  double lambda_min_ww = 0.0;
  double lambda_max_ww = 0.0;
  double lambda_min_zz = 0.0;
  double lambda_max_zz = 0.0;
};

inline QStats q_stats(const Dataset& data, const Weighting& w) {
  const Eigen::Index p = data.p();
  const Eigen::Index m = data.m();
  Eigen::MatrixXd wmat(p, m + 1);
  wmat.leftCols(m) = data.z();
  wmat.col(m) = data.y();
  const Eigen::MatrixXd aw = w.apply(wmat);
  Eigen::MatrixXd q = wmat.transpose() * aw / static_cast<double>(p);
  q = ((q + q.transpose()) / 2.0).eval();

  QStats s;
  s.q_ww = std::move(q);
  s.q_zz = s.q_ww.topLeftCorner(m, m);
  s.q_zy = s.q_ww.topRightCorner(m, 1);
  s.q_yy = s.q_ww(m, m);
  const Eigen::VectorXd eww = sym_eigenvalues(SymMatrix(s.q_ww));
  const Eigen::VectorXd ezz = sym_eigenvalues(SymMatrix(s.q_zz));
  s.lambda_min_ww = eww(0);
  s.lambda_max_ww = eww(eww.size() - 1);
  s.lambda_min_zz = ezz(0);
  s.lambda_max_zz = ezz(ezz.size() - 1);
  return s;
}

enum class FitVariant { unprewhitened, prewhitened, custom };

struct ConditionReport {
  // lambda_min(q_zz) - lambda_min(q_ww); the fit degenerates as this closes.
  double lambda_gap = 0.0;
  // lambda_min / lambda_max of the realized weight.
  double weight_condition = 1.0;
};

struct EivFit {
  Eigen::VectorXd beta_hat;
  Eigen::MatrixXd qxx0_hat;
  FitVariant variant = FitVariant::custom;
  Eigen::Index p = 0;
  QStats stats;
  ConditionReport condition_report;
};

// Weighted errors-in-variables fit: solves
//   { q_zz - lambda_min(q_ww) I } beta = q_zy
// through the spectrum of the covariate block.
inline EivFit tls_fit(const Dataset& data, const Weighting& w,
                      double condition_ratio = kConditionRatio) {
  QStats stats = q_stats(data, w);
  const Eigen::Index m = data.m();
  const double shift = stats.lambda_min_ww;
  const Spectrum zz = sym_eigen(SymMatrix(stats.q_zz));
  const Eigen::VectorXd mu = zz.eigenvalues.array() - shift;
  const double mu_max = mu(m - 1);
  if (mu_max <= 0.0)
    throw DegenerateFitError(
        "tls_fit: shifted covariate Gram has no positive spectrum");
  if (mu(0) <= condition_ratio * mu_max)
    throw DegenerateFitError(
        "tls_fit: shifted covariate Gram is numerically singular (gap " +
        std::to_string(mu(0)) + ")");

  Eigen::VectorXd t = zz.eigenvectors.transpose() * stats.q_zy;
  t.array() /= mu.array();

  EivFit fit;
  fit.beta_hat = zz.eigenvectors * t;
  fit.qxx0_hat =
      stats.q_zz - shift * Eigen::MatrixXd::Identity(m, m);
  switch (w.kind()) {
    case WeightKind::identity:
      fit.variant = FitVariant::unprewhitened;
      break;
    case WeightKind::inverse_of:
      fit.variant = FitVariant::prewhitened;
      break;
    case WeightKind::explicit_matrix:
      fit.variant = FitVariant::custom;
      break;
  }
  fit.p = data.p();
  fit.condition_report = {stats.lambda_min_zz - stats.lambda_min_ww,
                          w.condition_ratio_measured()};
  fit.stats = std::move(stats);
  return fit;
}

// Sandwich form of the scaled asymptotic covariance:
//   (1 + b'b) Q0^{-1} { Q1 + tau2 (I + b b')^{-1} } Q0^{-1}.
inline Eigen::MatrixXd assemble_omega(const Eigen::VectorXd& beta,
                                      const Eigen::MatrixXd& qxx0,
                                      const Eigen::MatrixXd& qxx1, double tau2,
                                      double condition_ratio = kConditionRatio) {
  const Eigen::Index m = beta.size();
  if (qxx0.rows() != m || qxx0.cols() != m || qxx1.rows() != m ||
      qxx1.cols() != m)
    throw InputError("assemble_omega: dimension mismatch");
  const double bsq = beta.squaredNorm();
  const Eigen::MatrixXd core =
      ((qxx1 + qxx1.transpose()) / 2.0 +
       tau2 * (Eigen::MatrixXd::Identity(m, m) -
               beta * beta.transpose() / (1.0 + bsq)))
          .eval();

  const Spectrum s0 = sym_eigen(SymMatrix((qxx0 + qxx0.transpose()) / 2.0));
  const double lmin = s0.lambda_min();
  const double lmax = s0.lambda_max();
  if (lmin <= 0.0 || lmin <= condition_ratio * lmax)
    throw DegenerateInferenceError(
        "assemble_omega: normalizer is numerically singular (lambda_min=" +
        std::to_string(lmin) + ")");

  const Eigen::MatrixXd half = spectral_solve(s0, core, condition_ratio);
  Eigen::MatrixXd omega =
      spectral_solve(s0, half.transpose(), condition_ratio);
  omega = ((omega + omega.transpose()) * ((1.0 + bsq) / 2.0)).eval();
  return omega;
}

// Covariance form taken by the inverse-weighted fit, where the correction
// Gram coincides with the normalizer and the spectrum average is 1.
inline Eigen::MatrixXd assemble_omega_prewhitened(
    const Eigen::VectorXd& beta, const Eigen::MatrixXd& qxx0,
    double condition_ratio = kConditionRatio) {
  return assemble_omega(beta, qxx0, qxx0, 1.0, condition_ratio);
}

// Plug-in covariance of sqrt(p) beta_hat for the two canonical variants.
// For the unprewhitened fit the correction Gram weights the data by the
// covariance estimate itself; that estimate may be indefinite, so this path
// deliberately skips the positive definiteness gate of Weighting.
inline Eigen::MatrixXd plug_in_omega(const Dataset& data, const EivFit& fit,
                                     const SymMatrix& sigma_hat,
                                     double condition_ratio = kConditionRatio) {
  if (fit.variant == FitVariant::prewhitened)
    return assemble_omega_prewhitened(fit.beta_hat, fit.qxx0_hat,
                                      condition_ratio);
  if (fit.variant != FitVariant::unprewhitened)
    throw InputError("plug_in_omega: custom-weight fits have no plug-in form");
  if (sigma_hat.dim() != data.p())
    throw InputError("plug_in_omega: covariance estimate has wrong dimension");

  const Eigen::Index p = data.p();
  const Eigen::Index m = data.m();
  Eigen::MatrixXd wmat(p, m + 1);
  wmat.leftCols(m) = data.z();
  wmat.col(m) = data.y();
  Eigen::MatrixXd q =
      wmat.transpose() * (sigma_hat.mat() * wmat) / static_cast<double>(p);
  q = ((q + q.transpose()) / 2.0).eval();
  const Eigen::VectorXd ev = sym_eigenvalues(SymMatrix(q));
  const Eigen::MatrixXd qxx1 =
      q.topLeftCorner(m, m) - ev(0) * Eigen::MatrixXd::Identity(m, m);
  const double tau2 = sigma_hat.mat().squaredNorm() / static_cast<double>(p);
  return assemble_omega(fit.beta_hat, fit.qxx0_hat, qxx1, tau2,
                        condition_ratio);
}

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double length() const { return hi - lo; }
  double center() const { return (lo + hi) / 2.0; }
  bool contains(double v) const { return lo <= v && v <= hi; }
};

// Per-coordinate normal intervals beta_hat_j -+ z * sqrt(omega_jj / p).
inline std::vector<Interval> confidence_intervals(const EivFit& fit,
                                                  const Eigen::MatrixXd& omega,
                                                  double level = 0.95) {
  const Eigen::Index m = fit.beta_hat.size();
  if (omega.rows() != m || omega.cols() != m)
    throw InputError("confidence_intervals: dimension mismatch");
  if (!(level > 0.0 && level < 1.0))
    throw InputError("confidence_intervals: level must lie in (0,1)");
  const double z = normal_quantile(0.5 + level / 2.0);
  std::vector<Interval> out;
  out.reserve(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const double v = omega(j, j);
    if (!std::isfinite(v) || v <= 0.0)
      throw DegenerateInferenceError(
          "confidence_intervals: nonpositive variance for coordinate " +
          std::to_string(j));
    const double half = z * std::sqrt(v / static_cast<double>(fit.p));
    out.push_back({fit.beta_hat(j) - half, fit.beta_hat(j) + half});
  }
  return out;
}

}  // namespace eiv
