#pragma once

#include "tisp/penalty.hpp"
#include "tisp/problem.hpp"
#include "tisp/thresholding.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace tisp {

/// Invalid solver setup (rho too small, bad schedule, ...).
class ConfigError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// A non-finite iterate appeared.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// ||X||_2 by power iteration on X'X from a fixed start vector. Returns 0 for X = 0.
double spectral_norm(const Eigen::MatrixXd& X, double tol = 1e-6);

/// X~ = X / rho. Coefficients live in scaled coordinates beta~ = rho * beta.
struct ScaledProblem {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  double rho = 1.0;

  Eigen::VectorXd scale(const Eigen::VectorXd& beta) const { return rho * beta; }
  Eigen::VectorXd unscale(const Eigen::VectorXd& beta_tilde) const { return beta_tilde / rho; }
};

/// Throws ConfigError when rho < ||X||_2 (up to the power-iteration tolerance).
ScaledProblem scale_problem(const Problem& problem, double rho);
/// Same without the rho check, for experiments outside the guaranteed regime.
ScaledProblem scale_problem_unchecked(const Problem& problem, double rho);

/// Threshold sequence lambda(t). The last value is held once the schedule runs out.
class LambdaSchedule {
public:
  static LambdaSchedule constant(double lambda);
  /// max(lambda0 * factor^t, floor)
  static LambdaSchedule geometric(double lambda0, double factor, double floor);
  static LambdaSchedule explicit_list(std::vector<double> values);
  /// "constant:0.5", "geometric:2,0.9,0.5" (lambda0,factor,floor), "explicit:1,0.8,0.5".
  static LambdaSchedule parse(std::string_view text);

  double at(std::size_t t) const;
  /// True when lambda(s) == lambda(t) for every s >= t.
  bool settled(std::size_t t) const;
  double final_value() const;
  std::string describe() const;

private:
  enum class Mode { constant, geometric, explicit_list };
  Mode mode_ = Mode::constant;
  double lambda0_ = 0.0;
  double factor_ = 1.0;
  double floor_ = 0.0;
  std::vector<double> values_;
};

struct RhoPolicy {
  std::optional<double> fixed;
  double epsilon = 0.01;

  static RhoPolicy automatic(double epsilon = 0.01) { return {std::nullopt, epsilon}; }
  static RhoPolicy fixed_value(double rho) { return {rho, 0.01}; }
  /// (1 + epsilon) ||X||_2, or the fixed value.
  double resolve(double x_norm) const;
};

struct SolverConfig {
  ThresholdRule rule = ThresholdRule::soft(0.0);
  Augmentation augmentation = Augmentation::none;
  RhoPolicy rho = RhoPolicy::automatic();
  double alpha = 1.0;
  /// Per-iteration thresholds; when empty the rule's own threshold is used throughout.
  std::optional<LambdaSchedule> schedule;
  double tol = 1e-8;
  std::size_t max_iter = 10000;
  std::size_t record_every = 1;
  /// Start in original coordinates; zero when empty.
  std::optional<Eigen::VectorXd> start;
  /// Keep every iterate (scaled coordinates) in the trace.
  bool keep_iterates = false;
};

struct TraceRow {
  std::size_t iter = 0;
  double objective = 0.0;
  double fp_residual = 0.0;
  std::size_t support = 0;
  std::optional<double> pred_err;
  std::optional<double> est_err;
  std::optional<double> weighted_err;
};

struct IterateTrace {
  std::vector<TraceRow> rows;
  /// Scaled iterates, filled only with SolverConfig::keep_iterates.
  std::vector<Eigen::VectorXd> iterates;
  /// Iterations where a thresholded argument came within 1e-12 of a jump of Theta.
  std::vector<std::size_t> discontinuity_hits;

  void write_csv(std::ostream& out) const;
  void write_csv(const std::string& path) const;
};

enum class Termination { converged, max_iter };
std::string_view to_string(Termination t);

struct SolveResult {
  Eigen::VectorXd beta;       // original coordinates
  Eigen::VectorXd beta_tilde; // scaled coordinates
  IterateTrace trace;
  Termination termination = Termination::max_iter;
  std::size_t iterations = 0;
  double rho = 1.0;
  double objective = 0.0;
};

/// One TISP step Theta(beta + alpha X~'(y - X~ beta); lambda_alpha) in scaled coordinates.
Eigen::VectorXd tisp_step(const Eigen::VectorXd& beta, const ScaledProblem& scaled, const ThresholdRule& rule,
                          double alpha = 1.0);
Eigen::VectorXd tisp_step(const Eigen::VectorXd& beta, const ScaledProblem& scaled, const ThresholdRule& rule,
                          double lambda_t, double alpha);

/// f in scaled coordinates: 1/2 ||X~ b - y||^2 + sum_j P(|b_j|).
double scaled_objective(const PenaltySpec& spec, const ScaledProblem& scaled, const Eigen::VectorXd& beta_tilde);

SolveResult solve(const Problem& problem, const SolverConfig& config);

/// Start points: a ridge pilot plus `count - 1` Gaussian perturbations of it (original coordinates).
std::vector<Eigen::VectorXd> multistart_points(const Problem& problem, std::size_t count, std::uint64_t seed,
                                               double spread = 1.0);
/// Lowest-objective result over multistart_points.
SolveResult solve_multistart(const Problem& problem, const SolverConfig& config, std::size_t count,
                             std::uint64_t seed);

/// ceil(log(rho^2 err0 / (K sigma^2 lambda^2 J*)) / log(1/kappa)) clamped to [1, max_iter].
std::size_t t_max_estimate(double rho, double beta0_error, double sigma, double lambda, double J_star,
                           double kappa, std::size_t max_iter = 10000, double K = 1.0);

/// RHS - LHS of the three-point inequality
///   (1-L)/2 ||b1 - b||^2 + 1/2 ||b1 - b0||^2_{I - X~'X~} <= 1/2 ||b0 - b||^2_{I - X~'X~} + f(b) - f(b1)
/// with b0 = beta_t, b1 = beta_t1 = tisp_step(beta_t), b = probe, all in scaled coordinates.
double triangle_inequality_slack(const Eigen::VectorXd& beta_t, const Eigen::VectorXd& beta_t1,
                                 const Eigen::VectorXd& probe, const ScaledProblem& scaled, const PenaltySpec& spec);

/// A sigma sqrt(log(e p))
double theory_lambda(double A, double sigma, std::size_t p);

} // namespace tisp
