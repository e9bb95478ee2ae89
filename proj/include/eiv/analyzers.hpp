#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "eiv/config.hpp"
#include "eiv/efficiency.hpp"
#include "eiv/errors.hpp"
#include "eiv/estimator.hpp"
#include "eiv/matrix_core.hpp"
#include "eiv/perturbation.hpp"
#include "eiv/rng.hpp"

namespace eiv {

struct AmseRow {
  std::string weighting;
  double amse = 0.0;
  double efficiency = 0.0;  // lower bound over amse, 1 at the optimum
};

struct AmseReport {
  int p = 0;
  double beta1 = 0.0;
  std::string design;
  double lower_bound = 0.0;
  std::vector<AmseRow> rows;
};

inline AmseReport run_amse(const AmseSpec& spec) {
  Eigen::VectorXd sigma_sq = spec.sigma_sq;
  Eigen::VectorXd x = spec.x;
  if (spec.design != "explicit") {
    RngStream stream = RngStream::derive(
        {spec.seed, 0x616d7365ULL,
         static_cast<std::uint64_t>(StreamPurpose::variance_draw)});
    sigma_sq.resize(spec.p);
    for (int i = 0; i < spec.p; ++i)
      sigma_sq(i) = stream.uniform(spec.variance_range.first,
                                   spec.variance_range.second);
    if (spec.design == "example2") {
      const double cap = spec.sigma_max_sq > 0.0
                             ? spec.sigma_max_sq
                             : 1.0 / (1.0 + spec.beta1 * spec.beta1);
      x = design_example2(sigma_sq, cap, spec.beta1);
    } else {
      x = design_example3(sigma_sq);
    }
  }

  const DiagonalSpec diag{x, sigma_sq, spec.beta1};
  AmseReport report;
  report.p = static_cast<int>(x.size());
  report.beta1 = spec.beta1;
  report.design = spec.design;
  report.lower_bound = amse_lower_bound(diag);

  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(x.size());
  const Eigen::VectorXd inv_var = sigma_sq.cwiseInverse();
  const Eigen::VectorXd astar = optimal_diag_weight(diag);
  const auto row = [&](const char* name, const Eigen::VectorXd& a) {
    const double value = amse_diag(diag, a);
    report.rows.push_back({name, value, report.lower_bound / value});
  };
  row("identity", ones);
  row("inverse_variance", inv_var);
  row("optimal", astar);
  return report;
}

struct CertifyTrial {
  int index = 0;
  double delta = 0.0;
  double delta_hat = 0.0;
  double ub = 0.0;
  bool applicable = false;
  bool b_positive_definite = false;
  double bound_diff = 0.0;
  double measured_diff = 0.0;
  bool within_bound = false;
};

struct CertifyReport {
  CertifySpec spec;
  std::vector<CertifyTrial> trials;
  int violations = 0;
};

namespace detail {

inline SymMatrix random_spd_matrix(int dim, RngStream& rng, double ev_lo,
                                   double ev_hi) {
  Eigen::MatrixXd raw(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) raw(i, j) = rng.normal();
  const Eigen::MatrixXd q =
      Eigen::HouseholderQR<Eigen::MatrixXd>(raw).householderQ();
  Eigen::VectorXd ev(dim);
  for (int i = 0; i < dim; ++i) ev(i) = rng.uniform(ev_lo, ev_hi);
  Eigen::MatrixXd m = q * ev.asDiagonal() * q.transpose();
  return SymMatrix((m + m.transpose()) / 2.0);
}

}  // namespace detail

// Random (data, A, B) triples with B = A + t vv', t chosen so the certified
// amplification lands at a target below one.
inline CertifyReport run_certify(const CertifySpec& spec) {
  CertifyReport report;
  report.spec = spec;
  report.trials.reserve(spec.trials);

  for (int trial = 0; trial < spec.trials; ++trial) {
    RngStream rng = RngStream::derive(
        {spec.seed, 0x6365727469667931ULL, static_cast<std::uint64_t>(trial)});

    Eigen::MatrixXd z(spec.p, spec.m);
    for (int i = 0; i < spec.p; ++i)
      for (int j = 0; j < spec.m; ++j) z(i, j) = rng.normal();
    Eigen::VectorXd y = rng.normal_vector(spec.p);
    y += z.rowwise().sum();
    const Dataset data(std::move(z), std::move(y));

    const SymMatrix a = detail::random_spd_matrix(spec.p, rng, 0.5, 4.0);
    const QStats stats = q_stats(data, Weighting::explicit_matrix(a));
    const double gap = stats.lambda_min_zz - stats.lambda_min_ww;
    if (gap <= 0.0) continue;
    const double amp = (stats.lambda_max_zz + stats.lambda_max_ww) / gap;

    const double target =
        rng.uniform(spec.delta_hat_lo, spec.delta_hat_hi);
    Eigen::VectorXd v = rng.normal_vector(spec.p);
    v.normalize();
    const double lambda_min_a = sym_eigenvalues(a).minCoeff();
    const double t = (target / amp) * lambda_min_a;
    Eigen::MatrixXd bm = a.mat() + t * (v * v.transpose());
    const SymMatrix b((bm + bm.transpose()) / 2.0);

    const PerturbationReport cert = certify_tls_perturbation(data, a, b);
    CertifyTrial row;
    row.index = trial;
    row.delta = cert.delta;
    row.delta_hat = cert.delta_hat;
    row.ub = cert.ub;
    row.applicable = cert.applicable;
    row.b_positive_definite = cert.b_positive_definite;
    if (cert.bound_diff && cert.measured_diff) {
      row.bound_diff = *cert.bound_diff;
      row.measured_diff = *cert.measured_diff;
      row.within_bound =
          row.measured_diff <= row.bound_diff * (1.0 + 1e-9) + 1e-15;
      if (!row.within_bound) ++report.violations;
    }
    report.trials.push_back(row);
  }
  if (report.trials.empty())
    throw DegenerateFitError("certify: no applicable trials generated");
  return report;
}

}  // namespace eiv
