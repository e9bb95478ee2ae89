#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "eiv/covariance.hpp"
#include "eiv/efficiency.hpp"
#include "eiv/errors.hpp"
#include "eiv/estimator.hpp"
#include "eiv/matrix_core.hpp"
#include "eiv/rng.hpp"

namespace eiv {

enum class Variant { unprewhitened = 0, prewhitened = 1 };

inline const char* variant_name(Variant v) {
  return v == Variant::unprewhitened ? "unprewhitened" : "prewhitened";
}

// One simulation cell. ensemble_n == 0 is the infinite-ensemble sentinel:
// the truth covariance is used directly as the estimate.
struct SimConfig {
  int p = 572;
  double beta1 = 2.0;
  double rho = 0.2;
  double alpha = 0.5;
  int ensemble_n = 0;
  int reps = 1000;
  double level = 0.95;
  std::pair<double, double> variance_range = {0.02, 0.18};
  std::uint64_t seed = 0;
  std::vector<Variant> variants = {Variant::unprewhitened,
                                   Variant::prewhitened};
  double condition_ratio = kConditionRatio;

  bool infinite_ensemble() const { return ensemble_n == 0; }

  void validate() const {
    if (p <= 2) throw InputError("SimConfig: p must exceed 2");
    if (reps < 1) throw InputError("SimConfig: reps must be positive");
    if (ensemble_n < 0 || ensemble_n == 1)
      throw InputError("SimConfig: n must be 0 (infinite) or at least 2");
    if (!(level > 0.0 && level < 1.0))
      throw InputError("SimConfig: level must lie in (0,1)");
    if (!std::isfinite(beta1)) throw InputError("SimConfig: beta1 not finite");
    if (!std::isfinite(rho) || rho < 0.0)
      throw InputError("SimConfig: rho must be nonnegative");
    if (!std::isfinite(alpha) || alpha <= 0.0)
      throw InputError("SimConfig: alpha must be positive");
    if (!(variance_range.first > 0.0) ||
        !(variance_range.second >= variance_range.first))
      throw InputError("SimConfig: bad variance range");
    if ((1.0 + beta1 * beta1) * variance_range.second >= 1.0)
      throw InputError(
          "SimConfig: need (1 + beta1^2) * high < 1 for a feasible design");
    if (variants.empty()) throw InputError("SimConfig: no variants requested");
    if (!(condition_ratio > 0.0))
      throw InputError("SimConfig: condition ratio must be positive");
  }

  // Keys the truth draw. Deliberately independent of rho, alpha, and n so a
  // grid shares one variance draw, the way a fixed design is carried across
  // the cells of a table.
  std::uint64_t truth_key() const {
    return hash_words({0x74727574686b6579ULL, static_cast<std::uint64_t>(p),
                       bits_of(variance_range.first),
                       bits_of(variance_range.second)});
  }

  // Keys replication streams; any content change moves every draw.
  std::uint64_t cell_key() const {
    return hash_words({0x63656c6c6b657931ULL, static_cast<std::uint64_t>(p),
                       bits_of(beta1), bits_of(rho), bits_of(alpha),
                       static_cast<std::uint64_t>(ensemble_n),
                       bits_of(variance_range.first),
                       bits_of(variance_range.second)});
  }
};

// Ground truth of a cell: the covariance, its factor and spectrum, and the
// design tuned so the identity weight is optimal at this variance profile.
struct Truth {
  SymMatrix sigma;
  Eigen::MatrixXd chol;
  std::shared_ptr<const Spectrum> sigma_spectrum;
  Eigen::VectorXd sigma_sq;
  Eigen::VectorXd x;
  double beta1 = 0.0;
};

inline Truth gen_truth(const SimConfig& cfg) {
  cfg.validate();
  RngStream stream = RngStream::derive(
      {cfg.seed, cfg.truth_key(),
       static_cast<std::uint64_t>(StreamPurpose::variance_draw)});
  Eigen::VectorXd sigma_sq(cfg.p);
  for (int i = 0; i < cfg.p; ++i)
    sigma_sq(i) =
        stream.uniform(cfg.variance_range.first, cfg.variance_range.second);

  CovarianceModel model;
  model.p = cfg.p;
  model.rho = cfg.rho;
  model.alpha = cfg.alpha;
  model.sigma_sq = sigma_sq;

  const double b2 = 1.0 + cfg.beta1 * cfg.beta1;
  Truth truth{build_sigma(model),
              Eigen::MatrixXd(),
              nullptr,
              sigma_sq,
              design_example2(sigma_sq, 1.0 / b2, cfg.beta1),
              cfg.beta1};
  truth.chol = cholesky_lower(truth.sigma);
  truth.sigma_spectrum = std::make_shared<Spectrum>(sym_eigen(truth.sigma));
  return truth;
}

enum class FailureReason {
  weight_not_positive_definite,
  weight_ill_conditioned,
  degenerate_fit,
  degenerate_inference,
};

inline const char* failure_reason_name(FailureReason r) {
  switch (r) {
    case FailureReason::weight_not_positive_definite:
      return "weight_not_positive_definite";
    case FailureReason::weight_ill_conditioned:
      return "weight_ill_conditioned";
    case FailureReason::degenerate_fit:
      return "degenerate_fit";
    case FailureReason::degenerate_inference:
      return "degenerate_inference";
  }
  return "unknown";
}

struct VariantOutcome {
  std::optional<double> beta_hat;
  std::optional<Interval> ci;
  std::optional<FailureReason> failure;
  bool covered = false;
  double ci_length = 0.0;
};

struct RepRecord {
  std::array<std::optional<VariantOutcome>, 2> outcomes;

  const std::optional<VariantOutcome>& outcome(Variant v) const {
    return outcomes[static_cast<std::size_t>(v)];
  }
};

// One replication: draw the observation and measurement errors, estimate the
// covariance from a fresh ensemble (or take the truth when n is infinite),
// then fit and build intervals for each requested variant. Failures are
// recorded, never thrown.
inline RepRecord run_replication(const Truth& truth, const SimConfig& cfg,
                                 int rep_index) {
  const std::uint64_t cell = cfg.cell_key();
  const auto stream = [&](StreamPurpose purpose) {
    return RngStream::derive({cfg.seed, cell,
                              static_cast<std::uint64_t>(rep_index),
                              static_cast<std::uint64_t>(purpose)});
  };

  RngStream obs = stream(StreamPurpose::observation_error);
  RngStream meas = stream(StreamPurpose::measurement_error);
  const auto lower = truth.chol.triangularView<Eigen::Lower>();
  const Eigen::VectorXd eps = lower * obs.normal_vector(cfg.p);
  const Eigen::VectorXd u = lower * meas.normal_vector(cfg.p);

  Eigen::MatrixXd z(cfg.p, 1);
  z.col(0) = truth.x + u;
  const Dataset data(std::move(z), truth.beta1 * truth.x + eps);

  const SymMatrix* sigma_hat = &truth.sigma;
  std::shared_ptr<const Spectrum> spectrum = truth.sigma_spectrum;
  std::optional<TaperedEstimate> tapered;
  if (!cfg.infinite_ensemble()) {
    RngStream ens = stream(StreamPurpose::ensemble);
    const Ensemble e = sample_ensemble(truth.chol, cfg.ensemble_n, ens);
    tapered = taper(ensemble_cov(e), bandwidth(cfg.ensemble_n, cfg.alpha),
                    cfg.condition_ratio);
    sigma_hat = &tapered->sigma_hat;
    spectrum = tapered->spectrum;
  }

  RepRecord rec;
  for (Variant v : cfg.variants) {
    VariantOutcome out;
    try {
      const Weighting w =
          v == Variant::unprewhitened
              ? Weighting::identity()
              : Weighting::inverse_of(*sigma_hat, spectrum,
                                      cfg.condition_ratio);
      const EivFit fit = tls_fit(data, w, cfg.condition_ratio);
      out.beta_hat = fit.beta_hat(0);
      const Eigen::MatrixXd omega =
          plug_in_omega(data, fit, *sigma_hat, cfg.condition_ratio);
      const std::vector<Interval> ci =
          confidence_intervals(fit, omega, cfg.level);
      out.ci = ci[0];
      out.covered = ci[0].contains(cfg.beta1);
      out.ci_length = ci[0].length();
    } catch (const NotPositiveDefiniteError&) {
      out.failure = FailureReason::weight_not_positive_definite;
    } catch (const IllConditionedError&) {
      out.failure = FailureReason::weight_ill_conditioned;
    } catch (const DegenerateFitError&) {
      out.failure = FailureReason::degenerate_fit;
    } catch (const DegenerateInferenceError&) {
      out.failure = FailureReason::degenerate_inference;
    }
    rec.outcomes[static_cast<std::size_t>(v)] = std::move(out);
  }
  return rec;
}

struct VariantSummary {
  Variant variant = Variant::unprewhitened;
  int reps = 0;
  int failures = 0;
  // Over non-failed replications only; zero when every replication failed.
  double coverage = 0.0;
  double mean_length = 0.0;
  double median_length = 0.0;
};

struct CellResult {
  SimConfig config;
  std::vector<VariantSummary> variants;
  double wall_seconds = 0.0;

  const VariantSummary& summary(Variant v) const {
    for (const VariantSummary& s : variants)
      if (s.variant == v) return s;
    throw InputError("CellResult: variant not present");
  }
};

// Runs every replication of one cell, optionally across threads. Records are
// stored by replication index and aggregated serially in that order, so the
// result is bit-identical for any thread count.
inline CellResult run_cell(const SimConfig& cfg, int threads = 1) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  const Truth truth = gen_truth(cfg);

  std::vector<RepRecord> records(cfg.reps);
  int pool_size = threads;
  if (pool_size <= 0)
    pool_size = std::max(1u, std::thread::hardware_concurrency());
  pool_size = std::min(pool_size, cfg.reps);

  if (pool_size <= 1) {
    for (int i = 0; i < cfg.reps; ++i)
      records[i] = run_replication(truth, cfg, i);
  } else {
    std::atomic<int> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    const auto worker = [&] {
      try {
        for (int i = next.fetch_add(1); i < cfg.reps; i = next.fetch_add(1))
          records[i] = run_replication(truth, cfg, i);
      } catch (...) {
        const std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        next.store(cfg.reps);
      }
    };
    std::vector<std::thread> pool;
    pool.reserve(pool_size);
    for (int t = 0; t < pool_size; ++t) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
  }

  CellResult result{cfg, {}, 0.0};
  for (Variant v : cfg.variants) {
    VariantSummary s;
    s.variant = v;
    s.reps = cfg.reps;
    std::vector<double> lengths;
    lengths.reserve(cfg.reps);
    int covered = 0;
    for (const RepRecord& rec : records) {
      const std::optional<VariantOutcome>& out = rec.outcome(v);
      if (out->failure) {
        ++s.failures;
        continue;
      }
      lengths.push_back(out->ci_length);
      if (out->covered) ++covered;
    }
    if (!lengths.empty()) {
      s.coverage = static_cast<double>(covered) /
                   static_cast<double>(lengths.size());
      double sum = 0.0;
      for (double len : lengths) sum += len;
      s.mean_length = sum / static_cast<double>(lengths.size());
      std::sort(lengths.begin(), lengths.end());
      const std::size_t mid = lengths.size() / 2;
      s.median_length = lengths.size() % 2 == 1
                            ? lengths[mid]
                            : (lengths[mid - 1] + lengths[mid]) / 2.0;
    }
    result.variants.push_back(s);
  }
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return result;
}

struct GridCellError {
  std::size_t index = 0;
  std::string message;
};

// Evaluates cells independently in input order. A cell that fails outright
// (infeasible model, bad config) is skipped and reported through errors.
inline std::vector<CellResult> run_grid(
    const std::vector<SimConfig>& cells, int threads = 1,
    std::vector<GridCellError>* errors = nullptr) {
  if (cells.empty()) throw InputError("run_grid: empty cell list");
  std::vector<CellResult> out;
  out.reserve(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    try {
      out.push_back(run_cell(cells[i], threads));
    } catch (const Error& e) {
      if (errors) errors->push_back({i, e.what()});
    }
  }
  return out;
}

// Ensemble-size growth rule for the rate sweep.
struct SweepRule {
  enum class Kind { logarithmic, polynomial };

  Kind kind = Kind::logarithmic;
  double scale = 10.0;
  double exponent = 1.0;

  // n = ceil(scale * log p) or ceil(scale * p^exponent), at least 2.
  int ensemble_size(int p) const {
    if (p <= 2) throw InputError("SweepRule: p must exceed 2");
    if (!std::isfinite(scale) || scale <= 0.0)
      throw InputError("SweepRule: scale must be positive");
    double raw;
    if (kind == Kind::logarithmic) {
      raw = scale * std::log(static_cast<double>(p));
    } else {
      if (!std::isfinite(exponent) || exponent <= 0.0)
        throw InputError("SweepRule: exponent must be positive");
      raw = scale * std::pow(static_cast<double>(p), exponent);
    }
    return std::max(2, static_cast<int>(std::ceil(raw - 1e-9)));
  }
};

// Runs one cell per p with the ensemble size set by the rule, exposing the
// coverage trend in the dimension.
inline std::vector<CellResult> rate_sweep(
    const std::vector<int>& ps, const SweepRule& rule, const SimConfig& base,
    int threads = 1, std::vector<GridCellError>* errors = nullptr) {
  if (ps.empty()) throw InputError("rate_sweep: empty dimension list");
  for (std::size_t i = 1; i < ps.size(); ++i)
    if (ps[i] <= ps[i - 1])
      throw InputError("rate_sweep: dimensions must be strictly increasing");
  std::vector<SimConfig> cells;
  cells.reserve(ps.size());
  for (int p : ps) {
    SimConfig cell = base;
    cell.p = p;
    cell.ensemble_n = rule.ensemble_size(p);
    cells.push_back(cell);
  }
  return run_grid(cells, threads, errors);
}

}  // namespace eiv
