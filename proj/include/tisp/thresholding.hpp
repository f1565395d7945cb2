#pragma once

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace tisp {

enum class RuleKind {
  soft,
  hard,
  ridge,
  elastic_net,
  berhu,
  hard_ridge,
  scad,
  mcp,
  lr,
};

/// Rule names as used in rule specification strings ("elastic-net", "hard-ridge", ...).
std::string_view to_string(RuleKind kind);
RuleKind rule_kind_from_string(std::string_view name);

/// One piece of a piecewise quadratic penalty on [lo, hi): A*t^2 + B*t + C for t >= 0.
struct QuadraticPiece {
  double lo;
  double hi;
  double A;
  double B;
  double C;
};

///
/// A thresholding function Theta(t; lambda) with its parameters.
///
/// Rules are immutable values; every parameter is validated on construction.
/// For all kinds except `ridge` and `lr`, lambda() is the threshold
/// tau = Theta^{-1}(0). Ridge has no threshold (tau = 0); the l_r rule's
/// threshold is a function of zeta and r. Use effective_threshold() when the
/// zero-region boundary is needed for an arbitrary rule.
///
/// Discontinuous rules (hard, hard-ridge, lr) return 0 at the jump point
/// itself, so the zero region {t : Theta(t) = 0} is closed.
///
class ThresholdRule {
public:
  static ThresholdRule soft(double lambda);
  static ThresholdRule hard(double lambda);
  static ThresholdRule ridge(double eta);
  static ThresholdRule elastic_net(double lambda, double eta);
  static ThresholdRule berhu(double lambda, double eta);
  static ThresholdRule hard_ridge(double lambda, double eta);
  static ThresholdRule scad(double lambda, double a = 3.7);
  static ThresholdRule mcp(double lambda, double gamma);
  static ThresholdRule lr(double zeta, double r);
  /// l_r rule whose zero region is exactly [-threshold, threshold].
  static ThresholdRule lr_with_threshold(double threshold, double r);

  RuleKind kind() const { return kind_; }
  double lambda() const { return lambda_; }
  double eta() const { return eta_; }
  double a() const { return a_; }
  double gamma() const { return gamma_; }
  double r() const { return r_; }
  double zeta() const { return zeta_; }

  /// Contraction constant L_Theta (tabulated value, not estimated).
  double contraction() const;
  /// tau = Theta^{-1}(0) = sup{t : Theta(t) = 0}.
  double effective_threshold() const;
  /// True when lambda() is the threshold parameter (tau == lambda).
  bool lambda_is_threshold() const { return kind_ != RuleKind::ridge && kind_ != RuleKind::lr; }

  bool continuous() const;
  /// Positive jump locations of Theta (empty for continuous rules).
  std::vector<double> discontinuities() const;
  /// Positive kink locations of Theta^{-1} on (0, inf), used for quadrature splitting.
  std::vector<double> inverse_kinks() const;

  /// Copy with the threshold moved to `lambda`. For lr, zeta is re-solved so that
  /// the new threshold is `lambda`; ridge has no threshold and is returned unchanged.
  ThresholdRule with_threshold(double lambda) const;

  /// Rule whose penalty is alpha * P(t) of this rule, for 0 < alpha <= 1.
  /// Throws std::invalid_argument for rules without a closed form (scad with alpha < 1).
  ThresholdRule for_stepsize(double alpha) const;
  bool supports_stepsize() const { return kind_ != RuleKind::scad; }

  /// P_Theta on t >= 0 as quadratic pieces; nullopt for lr (power branch).
  std::optional<std::vector<QuadraticPiece>> penalty_pieces() const;

  /// Canonical rule specification string, e.g. "scad(lambda=0.5,a=3.7)".
  std::string to_spec() const;

  double operator()(double t) const;
  double inverse(double u) const;

  bool operator==(const ThresholdRule&) const = default;

private:
  ThresholdRule(RuleKind kind) : kind_(kind) {}

  double apply_lr(double abs_t) const;
  double lr_jump_value() const;

  RuleKind kind_;
  double lambda_ = 0.0;
  double eta_ = 0.0;
  double a_ = 0.0;
  double gamma_ = 0.0;
  double r_ = 0.0;
  double zeta_ = 0.0;
};

/// Theta(t; lambda). Throws std::domain_error for non-finite t.
double apply(const ThresholdRule& rule, double t);

/// Componentwise Theta. `lambda_override` replaces the rule's threshold (see with_threshold).
Eigen::VectorXd apply_vec(const ThresholdRule& rule, const Eigen::Ref<const Eigen::VectorXd>& v,
                          std::optional<double> lambda_override = std::nullopt);

/// Theta^{-1}(u) = sup{t : Theta(t) <= u}, closed form. Throws std::domain_error for u < 0.
double inverse(const ThresholdRule& rule, double u);

/// Theta^{-1}(u) by monotone bisection on apply(), to absolute tolerance `tol`.
double inverse_by_bisection(const ThresholdRule& rule, double u, double tol = 1e-12);

/// 1 - min finite-difference slope of Theta^{-1} over a strictly increasing positive grid
/// of at least 100 points. Throws std::domain_error on a degenerate grid.
double estimate_contraction(const ThresholdRule& rule, std::span<const double> grid);

/// Uniform grid of `points` values on (0, 10 * scale], scale = tau (or 1 when tau = 0).
std::vector<double> contraction_grid(const ThresholdRule& rule, std::size_t points = 1000);

struct AxiomCheck {
  std::string name;
  bool passed = true;
  double worst_violation = 0.0;
};

struct AxiomReport {
  AxiomCheck oddness{"oddness"};
  AxiomCheck monotonicity{"monotonicity"};
  AxiomCheck unboundedness{"unboundedness"};
  AxiomCheck shrinkage{"shrinkage"};

  bool passed() const {
    return oddness.passed && monotonicity.passed && unboundedness.passed && shrinkage.passed;
  }
  std::vector<AxiomCheck> checks() const { return {oddness, monotonicity, unboundedness, shrinkage}; }
};

/// A thresholding family t, lambda -> Theta(t; lambda).
using ThresholdFamily = std::function<double(double t, double lambda)>;

/// Checks the four thresholding axioms on t_grid x lambda_grid. Report only, never throws.
/// Oddness is checked to 1e-12; monotonicity and shrinkage exactly; unboundedness by the
/// proxy Theta(lambda + 1e6; lambda) >= 1e5.
AxiomReport verify_axioms(const ThresholdFamily& theta, std::span<const double> t_grid,
                          std::span<const double> lambda_grid);
AxiomReport verify_axioms(const ThresholdRule& rule, std::span<const double> t_grid,
                          std::span<const double> lambda_grid);

/// The nine tabulated rules at threshold `lambda` with the default shape parameters
/// (eta = 0.5, a = 3.7, gamma = 2, r = 0.5).
std::vector<ThresholdRule> standard_rule_catalog(double lambda);

class RuleParseError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Parses "soft(lambda=0.5)", "scad(lambda=0.5,a=3.7)", "lr(zeta=0.5,r=0.5)", ...
/// Errors name the offending key.
ThresholdRule parse_rule(std::string_view spec);

} // namespace tisp
