#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "eiv/efficiency.hpp"
#include "eiv/errors.hpp"
#include "eiv/matrix_core.hpp"
#include "eiv/montecarlo.hpp"

namespace {

eiv::SimConfig small_config() {
  eiv::SimConfig cfg;
  cfg.p = 24;
  cfg.beta1 = 2.0;
  cfg.rho = 0.2;
  cfg.alpha = 0.5;
  cfg.ensemble_n = 40;
  cfg.reps = 25;
  cfg.seed = 999;
  return cfg;
}

bool summaries_identical(const eiv::CellResult& a, const eiv::CellResult& b) {
  if (a.variants.size() != b.variants.size()) return false;
  for (std::size_t i = 0; i < a.variants.size(); ++i) {
    const eiv::VariantSummary& x = a.variants[i];
    const eiv::VariantSummary& y = b.variants[i];
    if (x.variant != y.variant || x.reps != y.reps ||
        x.failures != y.failures || x.coverage != y.coverage ||
        x.mean_length != y.mean_length || x.median_length != y.median_length)
      return false;
  }
  return true;
}

}  // namespace

TEST_CASE("config validation rejects infeasible setups") {
  eiv::SimConfig cfg = small_config();
  CHECK_NOTHROW(cfg.validate());

  eiv::SimConfig bad = cfg;
  bad.p = 2;
  CHECK_THROWS_AS(bad.validate(), eiv::InputError);

  bad = cfg;
  bad.reps = 0;
  CHECK_THROWS_AS(bad.validate(), eiv::InputError);

  bad = cfg;
  bad.ensemble_n = 1;
  CHECK_THROWS_AS(bad.validate(), eiv::InputError);

  bad = cfg;
  bad.ensemble_n = -3;
  CHECK_THROWS_AS(bad.validate(), eiv::InputError);

  bad = cfg;
  bad.level = 1.0;
  CHECK_THROWS_AS(bad.validate(), eiv::InputError);

  bad = cfg;
  bad.variance_range = {0.05, 0.2};  // (1 + 4) * 0.2 = 1, design infeasible
  CHECK_THROWS_AS(bad.validate(), eiv::InputError);

  bad = cfg;
  bad.variance_range = {0.1, 0.05};
  CHECK_THROWS_AS(bad.validate(), eiv::InputError);

  bad = cfg;
  bad.alpha = 0.0;
  CHECK_THROWS_AS(bad.validate(), eiv::InputError);

  bad = cfg;
  bad.variants.clear();
  CHECK_THROWS_AS(bad.validate(), eiv::InputError);
}

TEST_CASE("truth draw is shared across cells that differ only in rho, alpha, n") {
  eiv::SimConfig a = small_config();
  eiv::SimConfig b = a;
  b.rho = 0.6;
  b.alpha = 0.1;
  b.ensemble_n = 0;

  const eiv::Truth ta = eiv::gen_truth(a);
  const eiv::Truth tb = eiv::gen_truth(b);
  CHECK(ta.sigma_sq == tb.sigma_sq);
  CHECK(ta.x == tb.x);
  CHECK(ta.sigma.mat() != tb.sigma.mat());

  eiv::SimConfig c = a;
  c.variance_range = {0.03, 0.15};
  CHECK(eiv::gen_truth(c).sigma_sq != ta.sigma_sq);

  for (int i = 0; i < a.p; ++i) {
    CHECK(ta.sigma_sq(i) >= a.variance_range.first);
    CHECK(ta.sigma_sq(i) <= a.variance_range.second);
    CHECK(ta.sigma(i, i) == Catch::Approx(ta.sigma_sq(i)).epsilon(1e-12));
  }
}

TEST_CASE("truth design makes the identity weight optimal") {
  const eiv::SimConfig cfg = small_config();
  const eiv::Truth truth = eiv::gen_truth(cfg);
  const double b2 = 1.0 + cfg.beta1 * cfg.beta1;
  const Eigen::VectorXd expected =
      eiv::design_example2(truth.sigma_sq, 1.0 / b2, cfg.beta1);
  CHECK((truth.x - expected).lpNorm<Eigen::Infinity>() < 1e-14);

  eiv::DiagonalSpec spec{truth.x, truth.sigma_sq, cfg.beta1};
  const Eigen::VectorXd astar = eiv::optimal_diag_weight(spec);
  CHECK((astar.array() - astar(0)).abs().maxCoeff() < 1e-10);
}

TEST_CASE("sweep rule reproduces pinned ensemble sizes") {
  eiv::SweepRule rule;
  rule.kind = eiv::SweepRule::Kind::logarithmic;
  rule.scale = 10.0;
  CHECK(rule.ensemble_size(100) == 47);
  CHECK(rule.ensemble_size(200) == 53);
  CHECK(rule.ensemble_size(400) == 60);

  eiv::SweepRule poly;
  poly.kind = eiv::SweepRule::Kind::polynomial;
  poly.scale = 2.0;
  poly.exponent = 0.5;
  CHECK(poly.ensemble_size(100) == 20);
  CHECK(poly.ensemble_size(101) == 21);

  eiv::SweepRule tiny;
  tiny.scale = 0.01;
  CHECK(tiny.ensemble_size(100) == 2);

  CHECK_THROWS_AS(rule.ensemble_size(2), eiv::InputError);
  eiv::SweepRule bad;
  bad.scale = 0.0;
  CHECK_THROWS_AS(bad.ensemble_size(100), eiv::InputError);
}

TEST_CASE("replication outcomes are keyed by cell and rep index") {
  const eiv::SimConfig cfg = small_config();
  const eiv::Truth truth = eiv::gen_truth(cfg);

  const eiv::RepRecord r0 = eiv::run_replication(truth, cfg, 0);
  const eiv::RepRecord r0b = eiv::run_replication(truth, cfg, 0);
  const eiv::RepRecord r1 = eiv::run_replication(truth, cfg, 1);

  const auto& u0 = r0.outcome(eiv::Variant::unprewhitened);
  const auto& u0b = r0b.outcome(eiv::Variant::unprewhitened);
  const auto& u1 = r1.outcome(eiv::Variant::unprewhitened);
  REQUIRE(u0.has_value());
  REQUIRE(u0->beta_hat.has_value());
  CHECK(*u0->beta_hat == *u0b->beta_hat);
  CHECK(*u0->beta_hat != *u1->beta_hat);

  eiv::SimConfig other = cfg;
  other.rho = 0.4;
  const eiv::Truth truth_other = eiv::gen_truth(other);
  const eiv::RepRecord s0 = eiv::run_replication(truth_other, other, 0);
  CHECK(*s0.outcome(eiv::Variant::unprewhitened)->beta_hat != *u0->beta_hat);
}

TEST_CASE("variant subset leaves the other slot empty") {
  eiv::SimConfig cfg = small_config();
  cfg.variants = {eiv::Variant::prewhitened};
  const eiv::Truth truth = eiv::gen_truth(cfg);
  const eiv::RepRecord rec = eiv::run_replication(truth, cfg, 0);
  CHECK_FALSE(rec.outcome(eiv::Variant::unprewhitened).has_value());
  CHECK(rec.outcome(eiv::Variant::prewhitened).has_value());

  cfg.reps = 3;
  const eiv::CellResult cell = eiv::run_cell(cfg);
  REQUIRE(cell.variants.size() == 1);
  CHECK(cell.variants[0].variant == eiv::Variant::prewhitened);
  CHECK_THROWS_AS(cell.summary(eiv::Variant::unprewhitened), eiv::InputError);
}

TEST_CASE("cell results are identical for any thread count") {
  const eiv::SimConfig cfg = small_config();
  const eiv::CellResult serial = eiv::run_cell(cfg, 1);
  const eiv::CellResult two = eiv::run_cell(cfg, 2);
  const eiv::CellResult many = eiv::run_cell(cfg, 8);
  CHECK(summaries_identical(serial, two));
  CHECK(summaries_identical(serial, many));

  eiv::SimConfig reseeded = cfg;
  reseeded.seed = cfg.seed + 1;
  CHECK_FALSE(summaries_identical(serial, eiv::run_cell(reseeded, 1)));
}

TEST_CASE("single replication cell produces defined summaries") {
  eiv::SimConfig cfg = small_config();
  cfg.reps = 1;
  const eiv::CellResult cell = eiv::run_cell(cfg);
  for (const eiv::VariantSummary& s : cell.variants) {
    CHECK(s.reps == 1);
    if (s.failures == 0) {
      CHECK((s.coverage == 0.0 || s.coverage == 1.0));
      CHECK(s.mean_length == s.median_length);
      CHECK(s.mean_length > 0.0);
    }
  }
  CHECK(cell.wall_seconds >= 0.0);
}

TEST_CASE("infinite ensemble cell covers near the nominal level") {
  eiv::SimConfig cfg = small_config();
  cfg.p = 100;
  cfg.ensemble_n = 0;
  cfg.reps = 200;
  cfg.seed = 31;
  const eiv::CellResult cell = eiv::run_cell(cfg);
  for (const eiv::VariantSummary& s : cell.variants) {
    CHECK(s.failures == 0);
    CHECK(s.coverage > 0.85);
    CHECK(s.mean_length > 0.0);
    CHECK(s.median_length > 0.0);
  }
}

TEST_CASE("plug-in variance tracks the sampling variance of the estimate") {
  eiv::SimConfig cfg;
  cfg.p = 300;
  cfg.ensemble_n = 0;
  cfg.reps = 600;
  cfg.seed = 77;
  cfg.variants = {eiv::Variant::unprewhitened};
  const eiv::Truth truth = eiv::gen_truth(cfg);

  const double z = eiv::normal_quantile(0.975);
  std::vector<double> betas;
  double mean_var = 0.0;
  for (int i = 0; i < cfg.reps; ++i) {
    const eiv::RepRecord rec = eiv::run_replication(truth, cfg, i);
    const auto& out = rec.outcome(eiv::Variant::unprewhitened);
    REQUIRE(out.has_value());
    REQUIRE_FALSE(out->failure.has_value());
    betas.push_back(*out->beta_hat);
    const double half = out->ci_length / 2.0;
    mean_var += (half / z) * (half / z);
  }
  mean_var /= cfg.reps;

  double mean = 0.0;
  for (double b : betas) mean += b;
  mean /= betas.size();
  double var = 0.0;
  for (double b : betas) var += (b - mean) * (b - mean);
  var /= (betas.size() - 1);

  CHECK(mean_var == Catch::Approx(var).margin(0.15 * var));
  // Second-order bias is O(1/p), so the band is wider than pure noise.
  CHECK(mean == Catch::Approx(cfg.beta1).margin(0.1));
}

TEST_CASE("grid preserves input order and isolates failing cells") {
  eiv::SimConfig good = small_config();
  good.reps = 5;
  eiv::SimConfig other = good;
  other.rho = 0.4;
  eiv::SimConfig broken = good;
  broken.p = 2;

  std::vector<eiv::GridCellError> errors;
  const std::vector<eiv::CellResult> results =
      eiv::run_grid({good, broken, other}, 1, &errors);
  REQUIRE(results.size() == 2);
  CHECK(results[0].config.rho == good.rho);
  CHECK(results[1].config.rho == other.rho);
  REQUIRE(errors.size() == 1);
  CHECK(errors[0].index == 1);
  CHECK_FALSE(errors[0].message.empty());

  CHECK_THROWS_AS(eiv::run_grid({}, 1, nullptr), eiv::InputError);
}

TEST_CASE("rate sweep grows the ensemble with the dimension") {
  eiv::SimConfig base = small_config();
  base.reps = 3;
  eiv::SweepRule rule;
  rule.scale = 10.0;

  const std::vector<eiv::CellResult> sweep =
      eiv::rate_sweep({24, 48}, rule, base);
  REQUIRE(sweep.size() == 2);
  CHECK(sweep[0].config.p == 24);
  CHECK(sweep[0].config.ensemble_n == rule.ensemble_size(24));
  CHECK(sweep[1].config.p == 48);
  CHECK(sweep[1].config.ensemble_n == rule.ensemble_size(48));

  CHECK_THROWS_AS(eiv::rate_sweep({48, 24}, rule, base), eiv::InputError);
  CHECK_THROWS_AS(eiv::rate_sweep({24, 24}, rule, base), eiv::InputError);
  CHECK_THROWS_AS(eiv::rate_sweep({}, rule, base), eiv::InputError);
}
