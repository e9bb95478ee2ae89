#include "eiv/efficiency.hpp"

#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "eiv/rng.hpp"
#include "test_util.hpp"

using Catch::Approx;
using eiv::DiagonalSpec;
using eiv::SymMatrix;

namespace {

DiagonalSpec random_spec(Eigen::Index p, eiv::RngStream& rng) {
  DiagonalSpec s;
  s.x = Eigen::VectorXd(p);
  s.sigma_sq = Eigen::VectorXd(p);
  for (Eigen::Index i = 0; i < p; ++i) {
    s.x(i) = rng.uniform(0.1, 2.0);
    s.sigma_sq(i) = rng.uniform(0.05, 1.5);
  }
  s.beta1 = rng.uniform(-2.5, 2.5);
  return s;
}

Eigen::VectorXd random_weights(Eigen::Index p, eiv::RngStream& rng) {
  Eigen::VectorXd w(p);
  for (Eigen::Index i = 0; i < p; ++i) w(i) = rng.uniform(0.05, 3.0);
  return w;
}

}  // namespace

TEST_CASE("amse_diag scalar substitution") {
  DiagonalSpec s;
  s.x = Eigen::VectorXd::Ones(1);
  s.sigma_sq = Eigen::VectorXd::Ones(1);
  s.beta1 = 0.0;
  CHECK(eiv::amse_diag(s, Eigen::VectorXd::Ones(1)) == Approx(2.0));

  s.beta1 = 2.0;
  CHECK(eiv::amse_diag(s, Eigen::VectorXd::Ones(1)) == Approx(6.0));
}

TEST_CASE("amse_diag validation") {
  DiagonalSpec s;
  s.x = Eigen::VectorXd::Ones(3);
  s.sigma_sq = Eigen::VectorXd::Ones(3);

  CHECK_THROWS_AS(eiv::amse_diag(s, Eigen::VectorXd::Ones(2)), eiv::InputError);
  CHECK_THROWS_AS(eiv::amse_diag(s, Eigen::Vector3d(1.0, -1.0, 1.0)),
                  eiv::InputError);

  s.sigma_sq(1) = 0.0;
  CHECK_THROWS_AS(eiv::amse_diag(s, Eigen::VectorXd::Ones(3)), eiv::InputError);

  s.sigma_sq(1) = 1.0;
  s.x.setZero();
  CHECK_THROWS_AS(eiv::amse_diag(s, Eigen::VectorXd::Ones(3)),
                  eiv::InfeasibleDesignError);
  CHECK_THROWS_AS(eiv::optimal_diag_weight(s), eiv::InfeasibleDesignError);
  CHECK_THROWS_AS(eiv::amse_lower_bound(s), eiv::InfeasibleDesignError);
}

TEST_CASE("amse_diag is invariant to weight scale") {
  eiv::RngStream rng(100100);
  const DiagonalSpec s = random_spec(12, rng);
  const Eigen::VectorXd w = random_weights(12, rng);
  const double base = eiv::amse_diag(s, w);
  for (double c : {1e-3, 0.5, 42.0, 1e5})
    CHECK(eiv::amse_diag(s, c * w) == Approx(base).epsilon(1e-12));
}

TEST_CASE("optimal weight attains the lower bound and beats all others") {
  eiv::RngStream rng(777001);
  for (int trial = 0; trial < 300; ++trial) {
    const Eigen::Index p = 2 + trial % 19;
    const DiagonalSpec s = random_spec(p, rng);
    const Eigen::VectorXd opt = eiv::optimal_diag_weight(s);
    const double bound = eiv::amse_lower_bound(s);

    CHECK(opt.maxCoeff() == Approx(1.0));
    CHECK(eiv::amse_diag(s, opt) == Approx(bound).epsilon(1e-10));

    const Eigen::VectorXd w = random_weights(p, rng);
    CHECK(eiv::amse_diag(s, w) >= bound * (1.0 - 1e-12));
  }
}

TEST_CASE("amse strictly exceeds the bound off the optimal ray") {
  eiv::RngStream rng(13579);
  const DiagonalSpec s = random_spec(10, rng);
  Eigen::VectorXd w = eiv::optimal_diag_weight(s);
  w(0) *= 2.0;
  CHECK(eiv::amse_diag(s, w) > eiv::amse_lower_bound(s) * (1.0 + 1e-10));
}

TEST_CASE("design_example2 makes the identity weight optimal") {
  eiv::RngStream rng(246810);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index p = 3 + trial % 10;
    Eigen::VectorXd sigma_sq(p);
    for (Eigen::Index i = 0; i < p; ++i) sigma_sq(i) = rng.uniform(0.02, 0.18);
    const double beta1 = rng.uniform(-2.0, 2.0);
    const double sigma_max_sq = sigma_sq.maxCoeff() * rng.uniform(1.05, 3.0);

    DiagonalSpec s;
    s.x = eiv::design_example2(sigma_sq, sigma_max_sq, beta1);
    s.sigma_sq = sigma_sq;
    s.beta1 = beta1;

    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(p);
    const double amse_identity = eiv::amse_diag(s, ones);
    CHECK(amse_identity == Approx(eiv::amse_lower_bound(s)).epsilon(1e-10));
    CHECK(eiv::amse_diag(s, sigma_sq.cwiseInverse()) >=
          amse_identity * (1.0 - 1e-12));
  }
}

TEST_CASE("design_example2 requires a strict variance ceiling") {
  const Eigen::VectorXd sigma_sq = Eigen::Vector3d(0.1, 0.2, 0.3);
  CHECK_THROWS_AS(eiv::design_example2(sigma_sq, 0.3, 1.0),
                  eiv::InfeasibleDesignError);
  CHECK_THROWS_AS(eiv::design_example2(sigma_sq, 0.25, 1.0),
                  eiv::InfeasibleDesignError);
  CHECK_NOTHROW(eiv::design_example2(sigma_sq, 0.31, 1.0));
}

TEST_CASE("design_example2 ceiling at the inverse signal scale") {
  eiv::RngStream rng(55555);
  const double beta1 = 2.0;
  const double b2 = 1.0 + beta1 * beta1;
  Eigen::VectorXd sigma_sq(6);
  for (int i = 0; i < 6; ++i) sigma_sq(i) = rng.uniform(0.02, 0.18);
  const Eigen::VectorXd x = eiv::design_example2(sigma_sq, 1.0 / b2, beta1);
  for (int i = 0; i < 6; ++i) {
    const double expected =
        sigma_sq(i) / std::sqrt(1.0 - b2 * sigma_sq(i));
    CHECK(x(i) == Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("design_example3 makes inverse-variance weighting optimal") {
  eiv::RngStream rng(368);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index p = 3 + trial % 10;
    Eigen::VectorXd sigma_sq(p);
    for (Eigen::Index i = 0; i < p; ++i) sigma_sq(i) = rng.uniform(0.05, 1.0);
    const double beta1 = rng.uniform(-2.0, 2.0);
    const double b2 = 1.0 + beta1 * beta1;

    DiagonalSpec s;
    s.x = eiv::design_example3(sigma_sq);
    s.sigma_sq = sigma_sq;
    s.beta1 = beta1;

    const double amse_inv = eiv::amse_diag(s, sigma_sq.cwiseInverse());
    CHECK(amse_inv == Approx((b2 + 1.0) / static_cast<double>(p)).epsilon(1e-10));
    CHECK(amse_inv == Approx(eiv::amse_lower_bound(s)).epsilon(1e-10));

    const double amse_identity =
        eiv::amse_diag(s, Eigen::VectorXd::Ones(p));
    CHECK(amse_identity ==
          Approx((b2 + 1.0) * sigma_sq.array().square().sum() /
                 std::pow(sigma_sq.sum(), 2))
              .epsilon(1e-10));
    CHECK(amse_identity >= amse_inv * (1.0 - 1e-12));
  }

  SECTION("constant variances make the two weights tie") {
    DiagonalSpec s;
    s.sigma_sq = Eigen::VectorXd::Constant(7, 0.3);
    s.x = eiv::design_example3(s.sigma_sq);
    s.beta1 = 1.3;
    CHECK(eiv::amse_diag(s, Eigen::VectorXd::Ones(7)) ==
          Approx(eiv::amse_diag(s, s.sigma_sq.cwiseInverse())).epsilon(1e-12));
  }
}

TEST_CASE("omega_star scalar substitution") {
  const Eigen::Index p = 5;
  const Eigen::MatrixXd x = Eigen::MatrixXd::Ones(p, 1);
  const Eigen::MatrixXd omega =
      eiv::omega_star(x, SymMatrix::identity(p), SymMatrix::identity(p),
                      Eigen::VectorXd::Zero(1));
  CHECK(omega(0, 0) == Approx(2.0).epsilon(1e-12));
}

TEST_CASE("omega_star agrees with amse_diag in the diagonal case") {
  eiv::RngStream rng(987654);
  for (int trial = 0; trial < 40; ++trial) {
    const Eigen::Index p = 2 + trial % 12;
    const DiagonalSpec s = random_spec(p, rng);
    const Eigen::VectorXd w = random_weights(p, rng);

    const Eigen::MatrixXd omega = eiv::omega_star(
        Eigen::MatrixXd(s.x), SymMatrix::diagonal(s.sigma_sq),
        SymMatrix::diagonal(w), Eigen::VectorXd::Constant(1, s.beta1));
    CHECK(omega(0, 0) / static_cast<double>(p) ==
          Approx(eiv::amse_diag(s, w)).epsilon(1e-10));
  }
}

TEST_CASE("omega_star_inverse_weight matches the explicit inverse") {
  eiv::RngStream rng(192837);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index p = 6 + trial % 5;
    const Eigen::Index m = 1 + trial % 2;
    Eigen::MatrixXd x(p, m);
    for (Eigen::Index j = 0; j < m; ++j) x.col(j) = rng.normal_vector(p);
    const SymMatrix sigma = eiv::test::random_spd(p, rng, 0.4, 2.0);
    const Eigen::VectorXd beta = rng.normal_vector(m);

    const Eigen::MatrixXd inv = sigma.mat().inverse();
    const Eigen::MatrixXd via_explicit = eiv::omega_star(
        x, sigma, SymMatrix(((inv + inv.transpose()) / 2.0).eval()), beta);
    const Eigen::MatrixXd direct =
        eiv::omega_star_inverse_weight(x, sigma, beta);
    CHECK((via_explicit - direct).cwiseAbs().maxCoeff() <=
          1e-8 * std::max(1.0, direct.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("omega_star rejects degenerate designs") {
  const Eigen::MatrixXd x = Eigen::MatrixXd::Zero(4, 1);
  CHECK_THROWS_AS(eiv::omega_star(x, SymMatrix::identity(4),
                                  SymMatrix::identity(4),
                                  Eigen::VectorXd::Zero(1)),
                  eiv::InfeasibleDesignError);
}
