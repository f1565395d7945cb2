#pragma once

#include "tisp/problem.hpp"
#include "tisp/solver.hpp"
#include "tisp/thresholding.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace tisp {

enum class Ensemble { gaussian_iid, gaussian_ar1, orthonormal };
enum class NoiseKind { gaussian, rademacher_scaled, uniform_bounded };

std::string_view to_string(Ensemble e);
Ensemble ensemble_from_string(std::string_view name);
std::string_view to_string(NoiseKind k);
NoiseKind noise_kind_from_string(std::string_view name);

/// lambda = A sigma sqrt(log(e p)) ("theory") or a fixed value ("explicit").
struct LambdaPolicy {
  enum class Mode { theory, explicit_value };
  Mode mode = Mode::theory;
  double value = 1.0; // A for theory, lambda for explicit

  double resolve(double sigma, std::size_t p) const;
};

struct ExperimentSpec {
  Ensemble ensemble = Ensemble::gaussian_iid;
  double rho_corr = 0.5;
  std::size_t n = 400;
  std::size_t p = 200;
  std::size_t J_star = 5;
  /// Defaults to 5 sqrt(log(e p)) times sigma (times 1 when sigma = 0).
  std::optional<double> signal_magnitude;
  double sigma = 1.0;
  NoiseKind noise_kind = NoiseKind::gaussian;
  std::vector<std::uint64_t> seeds;
  /// Rule names ("soft") or rule specs ("mcp(lambda=1,gamma=3)"); the threshold always comes from
  /// lambda_policy.
  std::vector<std::string> rules;
  LambdaPolicy lambda_policy;
  std::optional<LambdaSchedule> schedule;
  double rho_epsilon = 0.01;
  double tol = 1e-8;
  std::size_t max_iter = 10000;
  /// Rate study grid; n = ceil(n_factor J* log p) per grid point.
  std::vector<std::size_t> p_grid;
  std::vector<std::size_t> J_star_grid;
  double n_factor = 20.0;

  /// Every problem found, empty when the experiment is usable.
  std::vector<std::string> issues() const;
  /// Throws std::invalid_argument listing issues().
  void validate() const;
  double resolved_signal_magnitude() const;
};

/// Independent RNG stream for (seed, stream id).
std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream);

Eigen::MatrixXd gen_design(const ExperimentSpec& spec, std::uint64_t seed);
Eigen::VectorXd gen_beta_star(const ExperimentSpec& spec, std::uint64_t seed);
Eigen::VectorXd gen_response(const Eigen::MatrixXd& X, const Eigen::VectorXd& beta_star, double sigma,
                             NoiseKind noise_kind, std::uint64_t seed);
Problem gen_problem(const ExperimentSpec& spec, std::uint64_t seed);

struct ErrorMetrics {
  double pred = 0.0;     // ||X (beta - beta*)||^2
  double est = 0.0;      // ||beta - beta*||^2
  double weighted = 0.0; // rho^2 est - pred
};

/// Throws std::invalid_argument when the problem carries no beta*.
ErrorMetrics error_metrics(const Eigen::VectorXd& beta, const Problem& problem, double rho);

/// Rule for an entry of ExperimentSpec::rules at threshold lambda.
ThresholdRule experiment_rule(std::string_view entry, double lambda);

struct RunResult {
  std::uint64_t seed = 0;
  std::string rule;
  std::size_t n = 0;
  std::size_t p = 0;
  std::size_t J_star = 0;
  double sigma = 0.0;
  double lambda = 0.0;
  double rho = 0.0;
  std::size_t iters = 0;
  bool converged = false;
  double pred_err = 0.0;
  double est_err = 0.0;
  double weighted_err = 0.0;
  std::optional<double> kappa_hat;
  double plateau = 0.0;
  std::optional<double> plateau_ratio;
  /// e_t = weighted error of every iterate.
  std::vector<double> weighted_sequence;
};

struct DecayFit {
  std::optional<double> kappa_hat;
  double plateau = 0.0;
};

/// Plateau = median of the last 10 values; kappa_hat = exp(slope) of a least-squares line through
/// log e_t over the leading stretch where e_t > 4 plateau. No fit for fewer than 5 points.
DecayFit fit_decay(const std::vector<double>& e);

struct DecayBound {
  double kappa = 0.0;
  double K_prime = 0.0;
  bool passed = false;
};

/// Single kappa (the largest fitted kappa_hat) and the smallest K' with
/// e_{t+1} <= kappa e_t + K' lambda^2 J* on every step of every converged run.
DecayBound fit_decay_bound(const std::vector<RunResult>& runs);

/// One solve per (seed, rule), recorded at every iteration. Results sorted by (rule, seed).
std::vector<RunResult> run_decay_experiment(const ExperimentSpec& spec, unsigned jobs = 1);

struct RatePoint {
  std::size_t p = 0;
  std::size_t J_star = 0;
  std::size_t n = 0;
  std::string rule;
  double rate = 0.0; // sigma^2 J* log(e p)
  double median_pred_err = 0.0;
};

struct RateReport {
  std::vector<RatePoint> points;
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::vector<RunResult> runs;
};

/// Grid over p_grid x J_star_grid x rules x seeds; regresses log median prediction error on
/// log(sigma^2 J* log(e p)) across all points.
RateReport run_rate_experiment(const ExperimentSpec& spec, unsigned jobs = 1);

} // namespace tisp
