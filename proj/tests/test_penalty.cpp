#include "oracles.hpp"

#include "tisp/penalty.hpp"
#include "tisp/solver.hpp"

#include <doctest.h>

#include <cmath>

using namespace tisp;

TEST_CASE("penalty_theta: tabulated values") {
  CHECK(penalty_theta(ThresholdRule::soft(1), 2) == doctest::Approx(2));
  CHECK(penalty_theta(ThresholdRule::hard(1), 2) == doctest::Approx(0.5));
  CHECK(penalty_theta(ThresholdRule::hard(1), 0.5) == doctest::Approx(0.375));
  CHECK(penalty_theta(ThresholdRule::mcp(1, 2), 5) == doctest::Approx(1));
}

TEST_CASE("penalty_theta matches the oracle closed forms and oracle quadrature") {
  for (double lambda : {0.5, 1.0, 2.0}) {
    for (const auto& rule : standard_rule_catalog(lambda)) {
      CAPTURE(rule.to_spec());
      for (int i = 0; i <= 200; ++i) {
        const double t = -10 * lambda + 20 * lambda * i / 200.0;
        const double closed = penalty_theta(rule, t);
        CHECK(closed == doctest::Approx(oracle::penalty(rule, t)).epsilon(1e-11).scale(1));
        CHECK(closed == doctest::Approx(oracle::penalty_by_quadrature(rule, t)).epsilon(1e-8).scale(1));
        CHECK(closed == doctest::Approx(penalty_theta_quadrature(rule, t)).epsilon(1e-8).scale(1));
      }
    }
  }
}

TEST_CASE("reference penalties") {
  CHECK(penalty_hard(1.0, 1.0) == doctest::Approx(0.5));
  CHECK(penalty_l0(0.0, 1.0) == 0.0);
  CHECK(penalty_l0(0.1, 1.0) == doctest::Approx(0.5));
  CHECK(penalty_l1(-2.0, 1.5) == doctest::Approx(3));
  for (int i = -100; i <= 100; ++i) {
    const double t = i * 0.05;
    CHECK(penalty_hard(t, 1.3) == doctest::Approx(oracle::hard_penalty(t, 1.3)));
  }
}

TEST_CASE("augmentations") {
  const PenaltySpec capped(ThresholdRule::hard(1), Augmentation::capped_l1);
  CHECK(penalty_theta(capped, 0.5) == doctest::Approx(0.5));
  CHECK(penalty_theta(capped, 3.0) == doctest::Approx(0.5));
  const PenaltySpec l0(ThresholdRule::hard(1), Augmentation::l0);
  CHECK(penalty_theta(l0, 0.1) == doctest::Approx(0.5));
  CHECK(penalty_theta(l0, 0.0) == 0.0);
  const auto hr = ThresholdRule::hard_ridge(1, 0.5);
  const PenaltySpec l0l2(hr, Augmentation::l0_l2);
  for (double t : {0.2, 0.6, 1.0, 3.0}) {
    CHECK(penalty_theta(l0l2, t) == doctest::Approx(1.0 / 3.0 + 0.25 * t * t));
    CHECK(augmentation_term(l0l2, t) >= 0);
  }
  CHECK_THROWS_AS(PenaltySpec(ThresholdRule::soft(1), Augmentation::l0), std::invalid_argument);
  CHECK_THROWS_AS(PenaltySpec(ThresholdRule::hard(1), Augmentation::l0_l2), std::invalid_argument);
  CHECK(augmentation_from_string("l0+l2") == Augmentation::l0_l2);
  CHECK(to_string(Augmentation::capped_l1) == "capped-l1");
}

TEST_CASE("energy") {
  Eigen::MatrixXd X(1, 1);
  X << 1;
  Eigen::VectorXd y(1);
  y << 3;
  const Problem prob(X, y);
  const PenaltySpec soft(ThresholdRule::soft(1));
  Eigen::VectorXd b(1);
  b << 2;
  CHECK(energy(soft, prob, b, 1.0) == doctest::Approx(2.5));
  CHECK(energy(soft, prob, Eigen::VectorXd::Zero(1), 1.0) == doctest::Approx(4.5));

  std::mt19937_64 rng(3);
  const Eigen::MatrixXd Xr = oracle::gaussian_matrix(rng, 8, 5);
  const Eigen::VectorXd yr = oracle::gaussian_vector(rng, 8);
  const Eigen::VectorXd br = oracle::gaussian_vector(rng, 5);
  const double rho = 2.7;
  const PenaltySpec mcp(ThresholdRule::mcp(0.8, 2));
  const Problem scaled_prob(Xr / rho, yr);
  CHECK(energy(mcp, Problem(Xr, yr), br, rho) == doctest::Approx(energy(mcp, scaled_prob, rho * br, 1.0)).epsilon(1e-12));
  CHECK(energy(mcp, Problem(Xr, yr), br, rho) ==
        doctest::Approx(oracle::objective(ThresholdRule::mcp(0.8, 2), Xr / rho, yr, rho * br)).epsilon(1e-12));
  CHECK_THROWS(energy(soft, prob, Eigen::VectorXd::Zero(2), 1.0));
}
