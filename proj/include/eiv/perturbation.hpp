#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <string>

#include "eiv/errors.hpp"
#include "eiv/estimator.hpp"
#include "eiv/matrix_core.hpp"

namespace eiv {

// Relative perturbation size Delta = ||A^{-1}|| ||B - A|| for a positive
// definite reference A.
inline double delta(const SymMatrix& a, const SymMatrix& b) {
  if (a.dim() != b.dim()) throw InputError("delta: dimension mismatch");
  const Eigen::VectorXd ev = sym_eigenvalues(a);
  if (ev(0) <= 0.0)
    throw NotPositiveDefiniteError(
        "delta: reference matrix has lambda_min=" + std::to_string(ev(0)), -1);
  return spectral_norm(SymMatrix(b.mat() - a.mat())) / ev(0);
}

// Estimated amplification of a weight perturbation of relative size d into
// the fit, computed from reference-fit statistics alone.
inline double delta_hat(const QStats& stats, double d) {
  if (!std::isfinite(d) || d < 0.0)
    throw InputError("delta_hat: perturbation size must be nonnegative");
  const double gap = stats.lambda_min_zz - stats.lambda_min_ww;
  if (gap <= 0.0)
    throw CertificateInapplicableError(
        "delta_hat: nonpositive spectral gap " + std::to_string(gap));
  return (stats.lambda_max_zz + stats.lambda_max_ww) / gap * d;
}

// Norm scale of the reference fit; ||beta_hat(A)|| never exceeds it.
inline double ub_norm(const QStats& stats) {
  const double gap = stats.lambda_min_zz - stats.lambda_min_ww;
  if (gap <= 0.0)
    throw CertificateInapplicableError(
        "ub_norm: nonpositive spectral gap " + std::to_string(gap));
  return std::sqrt(stats.lambda_max_zz) * std::sqrt(std::max(stats.q_yy, 0.0)) /
         gap;
}

struct PerturbationReport {
  double delta = 0.0;
  double delta_hat = 0.0;
  double ub = 0.0;
  bool applicable = false;
  bool b_positive_definite = false;
  std::optional<double> bound_norm;
  std::optional<double> bound_diff;
  std::optional<double> beta_norm_a;
  std::optional<double> beta_norm_b;
  std::optional<double> measured_diff;
};

// Certifies how far the fit under weight B can drift from the fit under the
// reference weight A. When delta_hat < 1 the certificate guarantees B is
// positive definite, the perturbed fit exists, and
//   ||beta_hat(B)||              <= (1 + delta_hat)/(1 - delta_hat) * ub,
//   ||beta_hat(B) - beta_hat(A)|| <= 2 delta_hat/(1 - delta_hat) * ub.
// The perturbed fit is also attempted so measured quantities can be compared
// against the bounds.
inline PerturbationReport certify_tls_perturbation(
    const Dataset& data, const SymMatrix& a, const SymMatrix& b,
    double condition_ratio = kConditionRatio) {
  const Weighting wa = Weighting::explicit_matrix(a);
  const EivFit fit_a = tls_fit(data, wa, condition_ratio);

  PerturbationReport r;
  r.delta = delta(a, b);
  r.delta_hat = delta_hat(fit_a.stats, r.delta);
  r.ub = ub_norm(fit_a.stats);
  r.applicable = r.delta_hat < 1.0;
  r.beta_norm_a = fit_a.beta_hat.norm();
  if (r.applicable) {
    r.bound_norm = (1.0 + r.delta_hat) / (1.0 - r.delta_hat) * r.ub;
    r.bound_diff = 2.0 * r.delta_hat / (1.0 - r.delta_hat) * r.ub;
  }
  try {
    const Weighting wb = Weighting::explicit_matrix(b);
    r.b_positive_definite = true;
    const EivFit fit_b = tls_fit(data, wb, condition_ratio);
    r.beta_norm_b = fit_b.beta_hat.norm();
    r.measured_diff = (fit_b.beta_hat - fit_a.beta_hat).norm();
  } catch (const NotPositiveDefiniteError&) {
    r.b_positive_definite = false;
  } catch (const DegenerateFitError&) {
  }
  return r;
}

struct InversionCheck {
  double delta = 0.0;
  double norm_b_inv = 0.0;
  double bound_norm_b_inv = 0.0;
  double norm_diff = 0.0;
  double bound_norm_diff = 0.0;
  bool pass = false;
};

// Verifies the inverse-perturbation bounds
//   ||B^{-1}||          <= ||A^{-1}|| / (1 - Delta),
//   ||B^{-1} - A^{-1}|| <= Delta/(1 - Delta) ||A^{-1}||
// on a concrete pair, with 1e-9 relative slack for roundoff.
inline InversionCheck inversion_perturbation_check(const SymMatrix& a,
                                                   const SymMatrix& b) {
  if (a.dim() != b.dim())
    throw InputError("inversion_perturbation_check: dimension mismatch");
  const Spectrum sa = sym_eigen(a);
  if (sa.lambda_min() <= 0.0)
    throw NotPositiveDefiniteError(
        "inversion_perturbation_check: reference matrix not positive definite",
        -1);
  const double norm_a_inv = 1.0 / sa.lambda_min();
  const double d =
      spectral_norm(SymMatrix(b.mat() - a.mat())) * norm_a_inv;
  if (d >= 1.0)
    throw CertificateInapplicableError(
        "inversion_perturbation_check: delta=" + std::to_string(d));

  const Spectrum sb = sym_eigen(b);
  const Eigen::MatrixXd a_inv =
      sa.eigenvectors * sa.eigenvalues.cwiseInverse().asDiagonal() *
      sa.eigenvectors.transpose();
  const Eigen::MatrixXd b_inv =
      sb.eigenvectors * sb.eigenvalues.cwiseInverse().asDiagonal() *
      sb.eigenvectors.transpose();

  InversionCheck c;
  c.delta = d;
  c.norm_b_inv = 1.0 / sb.lambda_min();
  c.bound_norm_b_inv = norm_a_inv / (1.0 - d);
  c.norm_diff = spectral_norm(
      SymMatrix(((b_inv - a_inv) + (b_inv - a_inv).transpose()) / 2.0));
  c.bound_norm_diff = d / (1.0 - d) * norm_a_inv;
  constexpr double tol = 1e-9;
  c.pass = c.norm_b_inv <= c.bound_norm_b_inv * (1.0 + tol) &&
           c.norm_diff <= c.bound_norm_diff * (1.0 + tol) + 1e-15;
  return c;
}

struct WeylCheck {
  double max_gap = 0.0;
  double bound = 0.0;
  bool pass = false;
};

// Verifies that sorted eigenvalues move by no more than ||B - A||.
inline WeylCheck weyl_gap_check(const SymMatrix& a, const SymMatrix& b) {
  if (a.dim() != b.dim())
    throw InputError("weyl_gap_check: dimension mismatch");
  const Eigen::VectorXd ea = sym_eigenvalues(a);
  const Eigen::VectorXd eb = sym_eigenvalues(b);
  WeylCheck c;
  c.max_gap = (ea - eb).cwiseAbs().maxCoeff();
  c.bound = spectral_norm(SymMatrix(b.mat() - a.mat()));
  c.pass = c.max_gap <= c.bound * (1.0 + 1e-9) + 1e-15;
  return c;
}

struct PrewhiteningDiagnostic {
  // ||Sigma|| ||SigmaHat^{-1} - Sigma^{-1}||; infinite when the estimate is
  // not invertible at the conditioning threshold.
  double delta = std::numeric_limits<double>::infinity();
  // sqrt(p) * delta; inverse weighting is asymptotically safe only when this
  // shrinks as the estimate improves.
  double scaled = std::numeric_limits<double>::infinity();
  bool invertible = false;
};

inline PrewhiteningDiagnostic prewhitening_delta_diagnostic(
    const SymMatrix& sigma, const SymMatrix& sigma_hat,
    double condition_ratio = kConditionRatio,
    std::shared_ptr<const Spectrum> sigma_spectrum = nullptr,
    std::shared_ptr<const Spectrum> sigma_hat_spectrum = nullptr) {
  if (sigma.dim() != sigma_hat.dim())
    throw InputError("prewhitening_delta_diagnostic: dimension mismatch");
  if (!sigma_spectrum)
    sigma_spectrum = std::make_shared<Spectrum>(sym_eigen(sigma));
  if (sigma_spectrum->lambda_min() <= 0.0)
    throw NotPositiveDefiniteError(
        "prewhitening_delta_diagnostic: truth covariance not positive definite",
        -1);
  if (!sigma_hat_spectrum)
    sigma_hat_spectrum = std::make_shared<Spectrum>(sym_eigen(sigma_hat));

  PrewhiteningDiagnostic d;
  const double lmin = sigma_hat_spectrum->lambda_min();
  const double lmax = sigma_hat_spectrum->lambda_max();
  if (lmin <= 0.0 || lmin <= condition_ratio * lmax) return d;
  d.invertible = true;

  const auto inverse = [](const Spectrum& s) {
    return Eigen::MatrixXd(s.eigenvectors *
                           s.eigenvalues.cwiseInverse().asDiagonal() *
                           s.eigenvectors.transpose());
  };
  const Eigen::MatrixXd diff =
      inverse(*sigma_hat_spectrum) - inverse(*sigma_spectrum);
  const double norm_diff =
      spectral_norm(SymMatrix((diff + diff.transpose()) / 2.0));
  d.delta = sigma_spectrum->lambda_max() * norm_diff;
  d.scaled = std::sqrt(static_cast<double>(sigma.dim())) * d.delta;
  return d;
}

}  // namespace eiv
