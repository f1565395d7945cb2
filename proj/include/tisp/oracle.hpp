#pragma once

#include "tisp/penalty.hpp"
#include "tisp/problem.hpp"
#include "tisp/solver.hpp"
#include "tisp/thresholding.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string_view>

namespace tisp {

struct L0Result {
  Eigen::VectorXd beta;       // original coordinates
  Eigen::VectorXd beta_tilde; // scaled coordinates
  /// 1/2 ||y - X~ b||^2 + lambda^2/2 ||b||_0 in scaled coordinates.
  double objective = 0.0;
  /// The enumerated minimizer had a nonzero below lambda and was replaced by its hard TISP image.
  bool gap_repaired = false;
};

/// Exact minimizer of the l0-penalized least squares objective by enumerating all 2^p supports.
/// Refuses p > 14.
L0Result l0_global_min(const Problem& problem, double lambda, double rho);

/// argmin_b c/2 (b - w)^2 + P(|b|) for c > 0.
double scalar_minimize(const PenaltySpec& spec, double c, double w);

struct CoordinateDescentResult {
  Eigen::VectorXd beta;       // original coordinates
  Eigen::VectorXd beta_tilde; // scaled coordinates
  std::size_t sweeps = 0;
  bool converged = false;
};

/// Cyclic exact coordinate minimization of the scaled objective until the sweep change is <= 1e-10.
/// `start` is in original coordinates (zero when empty).
CoordinateDescentResult coordinate_descent_local_min(const Problem& problem, const PenaltySpec& spec, double rho,
                                                     const std::optional<Eigen::VectorXd>& start = std::nullopt,
                                                     std::size_t max_sweeps = 10000);

struct ThetaEquationReport {
  double residual = 0.0;
  /// Some argument came within 1e-9 of a jump of Theta.
  bool near_discontinuity = false;
};

/// sup-norm of rho beta - Theta(rho beta + X~'(y - X~ rho beta)), beta in original coordinates.
ThetaEquationReport check_theta_equation(const Eigen::VectorXd& beta, const Problem& problem,
                                         const ThresholdRule& rule, double rho);

enum class Assumption { R0, R1, S0, S1 };
std::string_view to_string(Assumption a);
Assumption assumption_from_string(std::string_view name);

struct RegularityProbeConfig {
  Assumption assumption = Assumption::R0;
  double delta = 0.5;
  double vartheta = 1.0;
  double K = 1.0;
  /// Threshold in P_H and in the lambda^2 J(beta) term; the rule's threshold when empty.
  std::optional<double> lambda;
  /// beta in scaled coordinates; zero when empty.
  std::optional<Eigen::VectorXd> reference_beta;
  std::size_t num_samples = 200;
  double sample_radius = 1.0;
  std::uint64_t seed = 1;
};

struct ProbeResult {
  double min_slack = 0.0;
  /// beta' attaining the minimum when it is negative.
  std::optional<Eigen::VectorXd> violating_beta;
  std::size_t samples = 0;
};

/// RHS - LHS of the assumption at beta' = beta + d, with d drawn from coordinate, Gaussian and
/// sparse directions, plus d = 0. A negative minimum certifies a violation; a nonnegative one is
/// evidence only.
ProbeResult probe_regularity(const RegularityProbeConfig& config, const Problem& problem, const ThresholdRule& rule,
                             double rho);
/// Slack at a single beta' (scaled coordinates).
double regularity_slack(const RegularityProbeConfig& config, const ScaledProblem& scaled, const ThresholdRule& rule,
                        const Eigen::VectorXd& beta, const Eigen::VectorXd& beta_prime);

/// sigma^2 (J + J log(e p / J))
double minimax_reference(std::size_t J, std::size_t p, double sigma);

} // namespace tisp
