#include "tisp/solver.hpp"

#include "tisp/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>

#include <fmt/format.h>

namespace tisp {

double spectral_norm(const Eigen::MatrixXd& X, double tol) {
  if (X.size() == 0) return 0.0;
  if (!X.allFinite()) throw std::invalid_argument("spectral_norm: matrix has non-finite entries");
  if (!(tol > 0.0)) throw std::invalid_argument("spectral_norm: tolerance must be > 0");
  if (X.cwiseAbs().maxCoeff() == 0.0) return 0.0;

  // iterate on the smaller Gram matrix
  const bool wide = X.rows() < X.cols();
  const Eigen::Index dim = wide ? X.rows() : X.cols();
  std::mt19937_64 rng(0x5eed);
  std::normal_distribution<double> normal;
  Eigen::VectorXd v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) v[i] = normal(rng);
  v.normalize();

  double estimate = 0.0;
  const double stop = tol * 1e-3;
  for (int it = 0; it < 100000; ++it) {
    Eigen::VectorXd w = wide ? Eigen::VectorXd(X * (X.transpose() * v)) : Eigen::VectorXd(X.transpose() * (X * v));
    const double next = v.dot(w);
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    v = w / norm;
    if (it > 0 && std::abs(next - estimate) <= stop * next) {
      estimate = next;
      break;
    }
    estimate = next;
  }
  return std::sqrt(std::max(estimate, 0.0));
}

ScaledProblem scale_problem_unchecked(const Problem& problem, double rho) {
  if (!(rho > 0.0) || !std::isfinite(rho)) throw ConfigError(fmt::format("rho must be a positive number (got {})", rho));
  return ScaledProblem{problem.X() / rho, problem.y(), rho};
}

ScaledProblem scale_problem(const Problem& problem, double rho) {
  const double x_norm = spectral_norm(problem.X());
  if (rho < x_norm * (1.0 - 1e-6)) {
    throw ConfigError(fmt::format("rho = {} is below ||X||_2 = {}; the descent property requires rho >= ||X||_2",
                                  format_number(rho), format_number(x_norm)));
  }
  return scale_problem_unchecked(problem, rho);
}

LambdaSchedule LambdaSchedule::constant(double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("schedule threshold must be finite and >= 0");
  LambdaSchedule s;
  s.mode_ = Mode::constant;
  s.lambda0_ = lambda;
  s.floor_ = lambda;
  return s;
}

LambdaSchedule LambdaSchedule::geometric(double lambda0, double factor, double floor) {
  if (!(floor >= 0.0) || !(lambda0 >= floor) || !std::isfinite(lambda0)) {
    throw ConfigError("geometric schedule needs lambda0 >= floor >= 0");
  }
  if (!(factor > 0.0 && factor < 1.0)) throw ConfigError("geometric schedule factor must lie in (0, 1)");
  LambdaSchedule s;
  s.mode_ = Mode::geometric;
  s.lambda0_ = lambda0;
  s.factor_ = factor;
  s.floor_ = floor;
  return s;
}

LambdaSchedule LambdaSchedule::explicit_list(std::vector<double> values) {
  if (values.empty()) throw ConfigError("explicit schedule needs at least one threshold");
  for (double v : values) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("schedule thresholds must be finite and >= 0");
  }
  LambdaSchedule s;
  s.mode_ = Mode::explicit_list;
  s.values_ = std::move(values);
  return s;
}

namespace {

std::vector<double> parse_numbers(std::string_view text) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    auto item = text.substr(start, comma == std::string_view::npos ? text.npos : comma - start);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || ec != std::errc() || ptr != item.data() + item.size()) {
      throw ConfigError(fmt::format("invalid number '{}' in schedule", item));
    }
    out.push_back(v);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

} // namespace

LambdaSchedule LambdaSchedule::parse(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) {
    throw ConfigError(fmt::format("malformed schedule '{}': expected constant:, geometric: or explicit:", text));
  }
  const auto mode = text.substr(0, colon);
  const auto values = parse_numbers(text.substr(colon + 1));
  if (mode == "constant") {
    if (values.size() != 1) throw ConfigError("constant schedule takes one value");
    return constant(values[0]);
  }
  if (mode == "geometric") {
    if (values.size() != 3) throw ConfigError("geometric schedule takes lambda0,factor,floor");
    return geometric(values[0], values[1], values[2]);
  }
  if (mode == "explicit") return explicit_list(values);
  throw ConfigError(fmt::format("unknown schedule mode '{}'", mode));
}

double LambdaSchedule::at(std::size_t t) const {
  switch (mode_) {
  case Mode::constant: return lambda0_;
  case Mode::geometric: return std::max(lambda0_ * std::pow(factor_, static_cast<double>(t)), floor_);
  case Mode::explicit_list: return values_[std::min(t, values_.size() - 1)];
  }
  return lambda0_;
}

bool LambdaSchedule::settled(std::size_t t) const {
  switch (mode_) {
  case Mode::constant: return true;
  case Mode::geometric: return at(t) == floor_;
  case Mode::explicit_list:
    return std::all_of(values_.begin() + static_cast<std::ptrdiff_t>(std::min(t, values_.size() - 1)), values_.end(),
                       [this](double v) { return v == values_.back(); });
  }
  return true;
}

double LambdaSchedule::final_value() const {
  switch (mode_) {
  case Mode::constant: return lambda0_;
  case Mode::geometric: return floor_;
  case Mode::explicit_list: return values_.back();
  }
  return lambda0_;
}

std::string LambdaSchedule::describe() const {
  switch (mode_) {
  case Mode::constant: return "constant:" + format_number(lambda0_);
  case Mode::geometric:
    return fmt::format("geometric:{},{},{}", format_number(lambda0_), format_number(factor_), format_number(floor_));
  case Mode::explicit_list: {
    std::string out = "explicit:";
    for (std::size_t i = 0; i < values_.size(); ++i) out += (i ? "," : "") + format_number(values_[i]);
    return out;
  }
  }
  return {};
}

double RhoPolicy::resolve(double x_norm) const {
  if (fixed) return *fixed;
  if (!(epsilon > 0.0)) throw ConfigError("automatic rho needs epsilon > 0");
  if (x_norm == 0.0) return 1.0;
  return (1.0 + epsilon) * x_norm;
}

namespace {

void write_optional(std::ostream& out, const std::optional<double>& v) {
  if (v) out << format_number(*v);
}

} // namespace

void IterateTrace::write_csv(std::ostream& out) const {
  out << "iter,objective,fp_residual,support,pred_err,est_err,weighted_err\n";
  for (const auto& row : rows) {
    out << row.iter << ',' << format_number(row.objective) << ',' << format_number(row.fp_residual) << ','
        << row.support << ',';
    write_optional(out, row.pred_err);
    out << ',';
    write_optional(out, row.est_err);
    out << ',';
    write_optional(out, row.weighted_err);
    out << '\n';
  }
}

void IterateTrace::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(fmt::format("cannot open '{}' for writing", path));
  write_csv(out);
  if (!out) throw std::runtime_error(fmt::format("failed writing '{}'", path));
}

std::string_view to_string(Termination t) { return t == Termination::converged ? "converged" : "max_iter"; }

Eigen::VectorXd tisp_step(const Eigen::VectorXd& beta, const ScaledProblem& scaled, const ThresholdRule& rule,
                          double alpha) {
  if (beta.size() != scaled.X.cols()) {
    throw std::invalid_argument(
        fmt::format("iterate has {} entries but the design has {} columns", beta.size(), scaled.X.cols()));
  }
  const Eigen::VectorXd z = beta + alpha * (scaled.X.transpose() * (scaled.y - scaled.X * beta));
  return apply_vec(rule.for_stepsize(alpha), z);
}

Eigen::VectorXd tisp_step(const Eigen::VectorXd& beta, const ScaledProblem& scaled, const ThresholdRule& rule,
                          double lambda_t, double alpha) {
  return tisp_step(beta, scaled, rule.with_threshold(lambda_t), alpha);
}

double scaled_objective(const PenaltySpec& spec, const ScaledProblem& scaled, const Eigen::VectorXd& beta_tilde) {
  return 0.5 * (scaled.X * beta_tilde - scaled.y).squaredNorm() + penalty_sum(spec, beta_tilde);
}

namespace {

bool near_jump(const Eigen::VectorXd& z, const std::vector<double>& jumps, double tol) {
  if (jumps.empty()) return false;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double a = std::abs(z[i]);
    for (double j : jumps) {
      if (std::abs(a - j) <= tol) return true;
    }
  }
  return false;
}

std::size_t support_size(const Eigen::VectorXd& b) {
  return static_cast<std::size_t>((b.array() != 0.0).count());
}

} // namespace

SolveResult solve(const Problem& problem, const SolverConfig& config) {
  if (!(config.tol > 0.0)) throw ConfigError("tol must be > 0");
  if (config.max_iter < 1) throw ConfigError("max_iter must be >= 1");
  if (config.record_every < 1) throw ConfigError("record_every must be >= 1");
  if (!(config.alpha > 0.0 && config.alpha <= 1.0)) throw ConfigError("alpha must lie in (0, 1]");
  if (config.alpha < 1.0 && !config.rule.supports_stepsize()) {
    throw ConfigError(fmt::format("rule '{}' has no closed-form stepsize threshold; use alpha = 1",
                                  to_string(config.rule.kind())));
  }
  if (config.start && config.start->size() != problem.p()) {
    throw ConfigError(fmt::format("start has {} entries but the design has {} columns", config.start->size(),
                                  problem.p()));
  }

  const double x_norm = spectral_norm(problem.X());
  const double rho = config.rho.resolve(x_norm);
  const ScaledProblem scaled = scale_problem(problem, rho);
  const ThresholdRule nominal_rule =
      config.schedule ? config.rule.with_threshold(config.schedule->final_value()) : config.rule;
  const PenaltySpec nominal(nominal_rule, config.augmentation);

  const auto& beta_star = problem.beta_star();
  const Eigen::VectorXd star_tilde = beta_star ? Eigen::VectorXd(rho * *beta_star) : Eigen::VectorXd();

  SolveResult result;
  result.rho = rho;
  Eigen::VectorXd b = config.start ? scaled.scale(*config.start) : Eigen::VectorXd::Zero(problem.p());
  Eigen::VectorXd best = b;
  double best_objective = std::numeric_limits<double>::infinity();

  for (std::size_t t = 0;; ++t) {
    const ThresholdRule rule_t = config.schedule ? config.rule.with_threshold(config.schedule->at(t)) : config.rule;
    const ThresholdRule step_rule = rule_t.for_stepsize(config.alpha);
    const Eigen::VectorXd residual = scaled.y - scaled.X * b;
    const Eigen::VectorXd z = b + config.alpha * (scaled.X.transpose() * residual);
    const Eigen::VectorXd next = apply_vec(step_rule, z);
    if (!next.allFinite()) {
      throw NumericalError(fmt::format("non-finite iterate at iteration {} (rule {}, rho {})", t + 1,
                                       step_rule.to_spec(), format_number(rho)));
    }
    if (near_jump(z, step_rule.discontinuities(), 1e-12)) result.trace.discontinuity_hits.push_back(t);

    const double fp_residual = (next - b).lpNorm<Eigen::Infinity>();
    const double objective = 0.5 * residual.squaredNorm() + penalty_sum(nominal, b);
    if (objective < best_objective) {
      best_objective = objective;
      best = b;
    }
    const bool converged = fp_residual <= config.tol && (!config.schedule || config.schedule->settled(t));
    const bool last = t + 1 == config.max_iter;

    if (t % config.record_every == 0 || converged || last) {
      TraceRow row;
      row.iter = t;
      row.objective = objective;
      row.fp_residual = fp_residual;
      row.support = support_size(b);
      if (beta_star) {
        const Eigen::VectorXd delta_tilde = b - star_tilde;
        const double pred = (scaled.X * delta_tilde).squaredNorm();
        const double est = delta_tilde.squaredNorm() / (rho * rho);
        row.pred_err = pred;
        row.est_err = est;
        row.weighted_err = rho * rho * est - pred;
      }
      result.trace.rows.push_back(row);
      if (config.keep_iterates) result.trace.iterates.push_back(b);
    }

    if (converged) {
      result.termination = Termination::converged;
      result.iterations = t;
      result.beta_tilde = b;
      result.objective = objective;
      break;
    }
    if (last) {
      result.termination = Termination::max_iter;
      result.iterations = config.max_iter;
      result.beta_tilde = best;
      result.objective = best_objective;
      break;
    }
    b = next;
  }
  result.beta = scaled.unscale(result.beta_tilde);
  return result;
}

std::vector<Eigen::VectorXd> multistart_points(const Problem& problem, std::size_t count, std::uint64_t seed,
                                               double spread) {
  std::vector<Eigen::VectorXd> points;
  if (count == 0) return points;
  const Eigen::MatrixXd& X = problem.X();
  const double x_norm = spectral_norm(X);
  const double mu = std::max(1e-2 * x_norm * x_norm, 1e-12);
  const Eigen::MatrixXd gram = X.transpose() * X + mu * Eigen::MatrixXd::Identity(problem.p(), problem.p());
  const Eigen::VectorXd pilot = gram.ldlt().solve(X.transpose() * problem.y());
  points.push_back(pilot);

  const double scale = spread * std::max(pilot.norm() / std::sqrt(static_cast<double>(problem.p())), 1e-3);
  std::seed_seq seq{seed, std::uint64_t{0x6d756c74}};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> normal(0.0, scale);
  for (std::size_t k = 1; k < count; ++k) {
    Eigen::VectorXd start = pilot;
    for (Eigen::Index j = 0; j < start.size(); ++j) start[j] += normal(rng);
    points.push_back(std::move(start));
  }
  return points;
}

SolveResult solve_multistart(const Problem& problem, const SolverConfig& config, std::size_t count,
                             std::uint64_t seed) {
  if (count == 0) throw ConfigError("multistart needs at least one start");
  std::optional<SolveResult> best;
  for (const auto& start : multistart_points(problem, count, seed)) {
    SolverConfig cfg = config;
    cfg.start = start;
    SolveResult r = solve(problem, cfg);
    if (!best || r.objective < best->objective) best = std::move(r);
  }
  return std::move(*best);
}

std::size_t t_max_estimate(double rho, double beta0_error, double sigma, double lambda, double J_star,
                           double kappa, std::size_t max_iter, double K) {
  for (double v : {rho, beta0_error, sigma, lambda, J_star, K}) {
    if (!(v > 0.0) || !std::isfinite(v)) throw std::domain_error("t_max_estimate: arguments must be finite and > 0");
  }
  if (!(kappa > 0.0 && kappa < 1.0)) throw std::domain_error("t_max_estimate: kappa must lie in (0, 1)");
  if (max_iter < 1) throw std::domain_error("t_max_estimate: max_iter must be >= 1");
  const double ratio = rho * rho * beta0_error / (K * sigma * sigma * lambda * lambda * J_star);
  const double steps = std::log(ratio) / -std::log(kappa);
  // absorb rounding in exact powers of 1/kappa
  const double t = std::ceil(steps - 1e-9);
  if (!(t >= 1.0)) return 1;
  if (t >= static_cast<double>(max_iter)) return max_iter;
  return static_cast<std::size_t>(t);
}

double triangle_inequality_slack(const Eigen::VectorXd& beta_t, const Eigen::VectorXd& beta_t1,
                                 const Eigen::VectorXd& probe, const ScaledProblem& scaled, const PenaltySpec& spec) {
  const auto surrogate_norm = [&scaled](const Eigen::VectorXd& v) {
    return v.squaredNorm() - (scaled.X * v).squaredNorm();
  };
  const double L = spec.rule().contraction();
  const double lhs = 0.5 * (1.0 - L) * (beta_t1 - probe).squaredNorm() + 0.5 * surrogate_norm(beta_t1 - beta_t);
  const double rhs = 0.5 * surrogate_norm(beta_t - probe) + scaled_objective(spec, scaled, probe) -
                     scaled_objective(spec, scaled, beta_t1);
  return rhs - lhs;
}

double theory_lambda(double A, double sigma, std::size_t p) {
  if (!(A >= 0.0) || !(sigma >= 0.0) || p < 1) throw std::invalid_argument("theory_lambda: need A, sigma >= 0, p >= 1");
  return A * sigma * std::sqrt(std::log(std::exp(1.0) * static_cast<double>(p)));
}

} // namespace tisp
