#pragma once

#include "tisp/problem.hpp"
#include "tisp/thresholding.hpp"

#include <Eigen/Dense>

#include <string_view>

namespace tisp {

/// Extra term q in P = P_Theta + q. q >= 0 and vanishes on the range of Theta, so it
/// changes objective values but not the set of fixed points.
enum class Augmentation {
  none,
  capped_l1, // hard: min(lambda|t|, lambda^2/2)
  l0,        // hard: lambda^2/2 1{t != 0}
  l0_l2,     // hard-ridge: lambda^2/(2(1+eta)) 1{t != 0} + eta t^2/2
};

std::string_view to_string(Augmentation aug);
Augmentation augmentation_from_string(std::string_view name);

class PenaltySpec {
public:
  /// Throws std::invalid_argument when the augmentation does not match the rule.
  explicit PenaltySpec(ThresholdRule rule, Augmentation augmentation = Augmentation::none);

  const ThresholdRule& rule() const { return rule_; }
  Augmentation augmentation() const { return augmentation_; }

private:
  ThresholdRule rule_;
  Augmentation augmentation_;
};

/// P_Theta(t) = int_0^|t| (Theta^{-1}(u) - u) du. Closed form for every rule except lr,
/// which goes through quadrature.
double penalty_theta(const ThresholdRule& rule, double t);
/// P_Theta(t) + q(t) with q from the PenaltySpec augmentation.
double penalty_theta(const PenaltySpec& spec, double t);

/// Adaptive Simpson quadrature of Theta^{-1}(u) - u on [0, |t|], split at the rule's kinks.
double penalty_theta_quadrature(const ThresholdRule& rule, double t, double abs_tol = 1e-10);

/// q(t) alone.
double augmentation_term(const PenaltySpec& spec, double t);

/// P_H(t; lambda) = (-t^2/2 + lambda|t|) 1{|t| < lambda} + lambda^2/2 1{|t| >= lambda}
double penalty_hard(double t, double lambda);
/// P_0(t; lambda) = lambda^2/2 1{t != 0}
double penalty_l0(double t, double lambda);
/// P_1(t; lambda) = lambda |t|
double penalty_l1(double t, double lambda);

double penalty_hard(const Eigen::Ref<const Eigen::VectorXd>& v, double lambda);

/// sum_j P(scale * |v_j|)
double penalty_sum(const PenaltySpec& spec, const Eigen::Ref<const Eigen::VectorXd>& v, double scale = 1.0);

/// f(beta) = 1/2 ||X beta - y||^2 + sum_j P(rho |beta_j|; lambda), beta in original coordinates.
double energy(const PenaltySpec& spec, const Problem& problem, const Eigen::Ref<const Eigen::VectorXd>& beta,
              double rho);

} // namespace tisp
