#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <utility>

#include "eiv/errors.hpp"
#include "eiv/matrix_core.hpp"
#include "eiv/rng.hpp"

namespace eiv {

// Covariance model with polynomially decaying cross-correlation:
//   sigma_ij = rho * |i-j|^-(alpha+1) * sigma_i * sigma_j   for i != j,
//   sigma_ii = sigma_sq_i.
struct CovarianceModel {
  int p = 0;
  double rho = 0.0;
  double alpha = 1.0;
  Eigen::VectorXd sigma_sq;

  void validate() const {
    if (p < 1) throw InputError("CovarianceModel: p must be at least 1");
    if (sigma_sq.size() != p)
      throw InputError("CovarianceModel: sigma_sq must have length p");
    if (!sigma_sq.allFinite() || (sigma_sq.array() <= 0.0).any())
      throw InputError("CovarianceModel: variances must be positive and finite");
    if (!std::isfinite(rho) || rho < 0.0)
      throw InputError("CovarianceModel: rho must be nonnegative and finite");
    if (!std::isfinite(alpha) || alpha <= 0.0)
      throw InputError("CovarianceModel: alpha must be positive and finite");
  }
};

// Materializes the model and verifies positive definiteness of the result.
inline SymMatrix build_sigma(const CovarianceModel& model) {
  model.validate();
  const int p = model.p;
  const Eigen::VectorXd sd = model.sigma_sq.cwiseSqrt();
  Eigen::VectorXd decay(p);
  for (int d = 1; d < p; ++d)
    decay(d) = model.rho * std::pow(static_cast<double>(d), -(model.alpha + 1.0));
  Eigen::MatrixXd m(p, p);
  for (int j = 0; j < p; ++j) {
    m(j, j) = model.sigma_sq(j);
    for (int i = j + 1; i < p; ++i) {
      const double v = decay(i - j) * sd(i) * sd(j);
      m(i, j) = v;
      m(j, i) = v;
    }
  }
  SymMatrix sigma{std::move(m)};
  const Eigen::VectorXd ev = sym_eigenvalues(sigma);
  if (ev(0) <= 0.0)
    throw ModelInfeasibleError(
        "build_sigma: rho=" + std::to_string(model.rho) + ", alpha=" +
        std::to_string(model.alpha) + " gives lambda_min=" +
        std::to_string(ev(0)));
  return sigma;
}

// Taper bandwidth k = floor(n^{1/(2 alpha + 1)}), never below 1. The tiny
// bump guards the floor against representation error in pow.
inline int bandwidth(int n, double alpha) {
  if (n < 1) throw InputError("bandwidth: n must be at least 1");
  if (!std::isfinite(alpha) || alpha <= 0.0)
    throw InputError("bandwidth: alpha must be positive and finite");
  const double raw = std::pow(static_cast<double>(n), 1.0 / (2.0 * alpha + 1.0));
  return std::max(1, static_cast<int>(std::floor(raw + 1e-9)));
}

// Trapezoid taper weight for a given bandwidth and lag: flat at 1 through
// lag k/2, linear down to 0 at lag k.
inline double taper_weight(int k, int lag) {
  if (k < 1) throw InputError("taper_weight: bandwidth must be positive");
  if (lag < 0) throw InputError("taper_weight: lag must be nonnegative");
  const double kd = static_cast<double>(k);
  const double d = static_cast<double>(lag);
  return (2.0 / kd) * (std::max(kd - d, 0.0) - std::max(kd / 2.0 - d, 0.0));
}

// Independent replicates of a mean-zero vector, one per column.
struct Ensemble {
  int n = 0;
  Eigen::MatrixXd vectors;

  Ensemble(int n, Eigen::MatrixXd vectors)
      : n(n), vectors(std::move(vectors)) {
    if (n < 2) throw InputError("Ensemble: need at least two replicates");
    if (this->vectors.cols() != n || this->vectors.rows() < 1)
      throw InputError("Ensemble: vector matrix must be p x n");
    if (!this->vectors.allFinite())
      throw InputError("Ensemble: non-finite entries");
  }
};

// Draws n replicates of L g with g standard normal.
inline Ensemble sample_ensemble(const Eigen::MatrixXd& chol_lower, int n,
                                RngStream& rng) {
  const Eigen::Index p = chol_lower.rows();
  if (p < 1 || chol_lower.cols() != p)
    throw InputError("sample_ensemble: factor must be square");
  if (n < 2) throw InputError("sample_ensemble: need at least two replicates");
  Eigen::MatrixXd v(p, n);
  for (int j = 0; j < n; ++j)
    v.col(j).noalias() =
        chol_lower.triangularView<Eigen::Lower>() * rng.normal_vector(p);
  return Ensemble(n, std::move(v));
}

// Sample covariance about the ensemble mean with divisor n.
inline SymMatrix ensemble_cov(const Ensemble& e) {
  const Eigen::Index p = e.vectors.rows();
  const Eigen::MatrixXd centered =
      e.vectors.colwise() - e.vectors.rowwise().mean().eval();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(p, p);
  m.selfadjointView<Eigen::Lower>().rankUpdate(centered,
                                               1.0 / static_cast<double>(e.n));
  Eigen::MatrixXd full = m.selfadjointView<Eigen::Lower>();
  return SymMatrix(std::move(full));
}

// Banded tapered covariance estimate, carrying its full spectrum so that
// downstream weighting can reuse the factorization.
struct TaperedEstimate {
  SymMatrix sigma_hat;
  int bandwidth_k = 0;
  double lambda_min = 0.0;
  bool invertible = false;
  std::shared_ptr<const Spectrum> spectrum;
};

inline TaperedEstimate taper(const SymMatrix& raw_cov, int k,
                             double condition_ratio = kConditionRatio) {
  if (k < 1) throw InputError("taper: bandwidth must be positive");
  const Eigen::Index p = raw_cov.dim();
  Eigen::VectorXd w(p);
  for (Eigen::Index d = 0; d < p; ++d)
    w(d) = taper_weight(k, static_cast<int>(d));
  Eigen::MatrixXd m(p, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    m(j, j) = raw_cov(j, j);
    for (Eigen::Index i = j + 1; i < p; ++i) {
      const double v = raw_cov(i, j) * w(i - j);
      m(i, j) = v;
      m(j, i) = v;
    }
  }
  SymMatrix sigma{std::move(m)};
  auto spectrum = std::make_shared<Spectrum>(sym_eigen(sigma));
  const double lmin = spectrum->lambda_min();
  const bool invertible =
      lmin > 0.0 && lmin > condition_ratio * spectrum->lambda_max();
  return TaperedEstimate{std::move(sigma), k, lmin, invertible,
                         std::move(spectrum)};
}

// Returns (tr(S)/p, tr(S^2)/p). The second is the plug-in for the average
// squared spectrum that scales the inference correction term.
inline std::pair<double, double> trace_ratios(const SymMatrix& s) {
  const double p = static_cast<double>(s.dim());
  return {s.mat().trace() / p, s.mat().squaredNorm() / p};
}

}  // namespace eiv
