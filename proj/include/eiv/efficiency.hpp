#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "eiv/errors.hpp"
#include "eiv/estimator.hpp"
#include "eiv/matrix_core.hpp"

namespace eiv {

// Single-covariate design with a diagonal error covariance; the setting in
// which weighted asymptotic mean squared error has closed forms.
struct DiagonalSpec {
  Eigen::VectorXd x;
  Eigen::VectorXd sigma_sq;
  double beta1 = 0.0;

  void validate() const {
    if (x.size() < 1) throw InputError("DiagonalSpec: empty design");
    if (sigma_sq.size() != x.size())
      throw InputError("DiagonalSpec: x and sigma_sq lengths differ");
    if (!x.allFinite() || !sigma_sq.allFinite() || !std::isfinite(beta1))
      throw InputError("DiagonalSpec: non-finite entries");
    if ((sigma_sq.array() <= 0.0).any())
      throw InputError("DiagonalSpec: variances must be positive");
  }
};

// Asymptotic mean squared error of the slope under diagonal weights a:
//   sum a_i^2 { (1+beta^2) x_i^2 s_i^2 + s_i^4 }  /  ( sum a_i x_i^2 )^2.
inline double amse_diag(const DiagonalSpec& spec,
                        const Eigen::VectorXd& weights) {
  spec.validate();
  if (weights.size() != spec.x.size())
    throw InputError("amse_diag: weight length mismatch");
  if (!weights.allFinite() || (weights.array() < 0.0).any())
    throw InputError("amse_diag: weights must be nonnegative and finite");
  const double b2 = 1.0 + spec.beta1 * spec.beta1;
  const Eigen::ArrayXd x2 = spec.x.array().square();
  const Eigen::ArrayXd s2 = spec.sigma_sq.array();
  const double den = (weights.array() * x2).sum();
  if (den <= 0.0)
    throw InfeasibleDesignError("amse_diag: design carries no signal");
  const double num =
      (weights.array().square() * (b2 * x2 * s2 + s2.square())).sum();
  return num / (den * den);
}

// Weights minimizing amse_diag, scaled so the largest entry is 1.
inline Eigen::VectorXd optimal_diag_weight(const DiagonalSpec& spec) {
  spec.validate();
  const double b2 = 1.0 + spec.beta1 * spec.beta1;
  const Eigen::ArrayXd x2 = spec.x.array().square();
  const Eigen::ArrayXd s2 = spec.sigma_sq.array();
  Eigen::VectorXd a = (x2 / (b2 * x2 * s2 + s2.square())).matrix();
  const double top = a.maxCoeff();
  if (top <= 0.0)
    throw InfeasibleDesignError("optimal_diag_weight: design carries no signal");
  return a / top;
}

// Minimum of amse_diag over diagonal weights.
inline double amse_lower_bound(const DiagonalSpec& spec) {
  spec.validate();
  const double b2 = 1.0 + spec.beta1 * spec.beta1;
  const Eigen::ArrayXd x2 = spec.x.array().square();
  const Eigen::ArrayXd s2 = spec.sigma_sq.array();
  const double sum = (x2.square() / (b2 * x2 * s2 + s2.square())).sum();
  if (sum <= 0.0)
    throw InfeasibleDesignError("amse_lower_bound: design carries no signal");
  return 1.0 / sum;
}

// Design for which the identity weight is exactly optimal:
//   x_i^2 = s_i^4 / { (1+beta^2)(sigma_max_sq - s_i^2) }.
inline Eigen::VectorXd design_example2(const Eigen::VectorXd& sigma_sq,
                                       double sigma_max_sq, double beta1) {
  if (sigma_sq.size() < 1 || !sigma_sq.allFinite() ||
      (sigma_sq.array() <= 0.0).any())
    throw InputError("design_example2: variances must be positive and finite");
  if (!std::isfinite(sigma_max_sq) || !std::isfinite(beta1))
    throw InputError("design_example2: non-finite parameters");
  if (sigma_max_sq <= sigma_sq.maxCoeff())
    throw InfeasibleDesignError(
        "design_example2: sigma_max_sq must exceed every variance");
  const double b2 = 1.0 + beta1 * beta1;
  return (sigma_sq.array() /
          (b2 * (sigma_max_sq - sigma_sq.array())).sqrt())
      .matrix();
}

// Design for which inverse-variance weighting is exactly optimal: x_i = s_i.
inline Eigen::VectorXd design_example3(const Eigen::VectorXd& sigma_sq) {
  if (sigma_sq.size() < 1 || !sigma_sq.allFinite() ||
      (sigma_sq.array() <= 0.0).any())
    throw InputError("design_example3: variances must be positive and finite");
  return sigma_sq.cwiseSqrt();
}

// Finite-sample proxy of the scaled covariance for a fixed design x, truth
// covariance sigma, and explicit weight a:
//   (1+b'b) Q0^{-1} { Q1 + tau2 (I+bb')^{-1} } Q0^{-1}
// with Q0 = X'AX/p, Q1 = X'A Sigma A X/p, tau2 = tr(Sigma A Sigma A)/p.
inline Eigen::MatrixXd omega_star(const Eigen::MatrixXd& x,
                                  const SymMatrix& sigma, const SymMatrix& a,
                                  const Eigen::VectorXd& beta,
                                  double condition_ratio = kConditionRatio) {
  const Eigen::Index p = x.rows();
  const Eigen::Index m = x.cols();
  if (p < 1 || m < 1 || !x.allFinite())
    throw InputError("omega_star: bad design matrix");
  if (sigma.dim() != p || a.dim() != p)
    throw InputError("omega_star: dimension mismatch");
  if (beta.size() != m) throw InputError("omega_star: beta length mismatch");

  const Eigen::MatrixXd ax = a.mat() * x;
  Eigen::MatrixXd q0 = x.transpose() * ax / static_cast<double>(p);
  q0 = ((q0 + q0.transpose()) / 2.0).eval();
  Eigen::MatrixXd q1 =
      ax.transpose() * sigma.mat() * ax / static_cast<double>(p);
  q1 = ((q1 + q1.transpose()) / 2.0).eval();
  const Eigen::MatrixXd sa = sigma.mat() * a.mat();
  const double tau2 =
      (sa.array() * sa.transpose().array()).sum() / static_cast<double>(p);
  try {
    return assemble_omega(beta, q0, q1, tau2, condition_ratio);
  } catch (const DegenerateInferenceError& e) {
    throw InfeasibleDesignError(std::string("omega_star: ") + e.what());
  }
}

// omega_star specialized to the inverse-covariance weight, where the
// correction Gram collapses onto the normalizer Q** = X' Sigma^{-1} X / p.
inline Eigen::MatrixXd omega_star_inverse_weight(
    const Eigen::MatrixXd& x, const SymMatrix& sigma,
    const Eigen::VectorXd& beta, double condition_ratio = kConditionRatio) {
  const Eigen::Index p = x.rows();
  const Eigen::Index m = x.cols();
  if (p < 1 || m < 1 || !x.allFinite())
    throw InputError("omega_star_inverse_weight: bad design matrix");
  if (sigma.dim() != p)
    throw InputError("omega_star_inverse_weight: dimension mismatch");
  if (beta.size() != m)
    throw InputError("omega_star_inverse_weight: beta length mismatch");

  const Eigen::MatrixXd six = solve_spd(sigma, x, condition_ratio);
  Eigen::MatrixXd qss = x.transpose() * six / static_cast<double>(p);
  qss = ((qss + qss.transpose()) / 2.0).eval();
  try {
    return assemble_omega(beta, qss, qss, 1.0, condition_ratio);
  } catch (const DegenerateInferenceError& e) {
    throw InfeasibleDesignError(std::string("omega_star_inverse_weight: ") +
                                e.what());
  }
}

}  // namespace eiv
