#include "tisp/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include <fmt/format.h>

namespace tisp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double l0_objective(const ScaledProblem& scaled, const Eigen::VectorXd& b, double lambda) {
  const auto nnz = static_cast<double>((b.array() != 0.0).count());
  return 0.5 * (scaled.y - scaled.X * b).squaredNorm() + 0.5 * lambda * lambda * nnz;
}

bool has_gap(const Eigen::VectorXd& b, double lambda) {
  for (Eigen::Index j = 0; j < b.size(); ++j) {
    if (b[j] != 0.0 && std::abs(b[j]) < lambda - 1e-10) return false;
  }
  return true;
}

} // namespace

L0Result l0_global_min(const Problem& problem, double lambda, double rho) {
  const Eigen::Index p = problem.p();
  if (p > 14) {
    throw std::invalid_argument(fmt::format("l0_global_min enumerates 2^p supports and refuses p = {} > 14", p));
  }
  if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be >= 0");
  const ScaledProblem scaled = scale_problem(problem, rho);

  Eigen::VectorXd best = Eigen::VectorXd::Zero(p);
  double best_objective = 0.5 * scaled.y.squaredNorm();
  const std::uint32_t masks = 1u << p;
  for (std::uint32_t mask = 1; mask < masks; ++mask) {
    std::vector<Eigen::Index> cols;
    for (Eigen::Index j = 0; j < p; ++j) {
      if (mask & (1u << j)) cols.push_back(j);
    }
    const auto k = static_cast<Eigen::Index>(cols.size());
    Eigen::MatrixXd Xs(scaled.X.rows(), k);
    for (Eigen::Index i = 0; i < k; ++i) Xs.col(i) = scaled.X.col(cols[i]);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(Xs, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(1e-10);
    const Eigen::VectorXd bs = svd.solve(scaled.y);
    const double objective =
        0.5 * (scaled.y - Xs * bs).squaredNorm() + 0.5 * lambda * lambda * static_cast<double>(k);
    if (objective < best_objective) {
      best_objective = objective;
      best.setZero();
      for (Eigen::Index i = 0; i < k; ++i) best[cols[i]] = bs[i];
    }
  }

  L0Result result;
  // a minimizer lacking the gap is mapped through one hard step, which cannot raise the objective
  const ThresholdRule hard = ThresholdRule::hard(lambda);
  for (int repair = 0; repair < 10 && !has_gap(best, lambda); ++repair) {
    best = tisp_step(best, scaled, hard);
    result.gap_repaired = true;
  }
  result.beta_tilde = best;
  result.beta = scaled.unscale(best);
  result.objective = l0_objective(scaled, best, lambda);
  return result;
}

namespace {

std::vector<QuadraticPiece> total_pieces(const PenaltySpec& spec) {
  const ThresholdRule& rule = spec.rule();
  const double lam = rule.lambda();
  switch (spec.augmentation()) {
  case Augmentation::none: return *rule.penalty_pieces();
  case Augmentation::capped_l1: return {{0.0, 0.5 * lam, 0.0, lam, 0.0}, {0.5 * lam, kInf, 0.0, 0.0, 0.5 * lam * lam}};
  case Augmentation::l0: return {{0.0, kInf, 0.0, 0.0, 0.5 * lam * lam}};
  case Augmentation::l0_l2: {
    const double eta = rule.eta();
    return {{0.0, kInf, 0.5 * eta, 0.0, 0.5 * lam * lam / (1.0 + eta)}};
  }
  }
  return {};
}

// b >= 0 minimizing c/2 (b - a)^2 + P_lr(b) for a >= 0
double scalar_minimize_lr(const ThresholdRule& rule, double c, double a) {
  const double zeta = rule.zeta();
  const double r = rule.r();
  if (zeta == 0.0) return a;
  const double tau = rule.effective_threshold();
  const double jump = std::pow(2.0 * zeta * (1.0 - r), 1.0 / (2.0 - r));

  std::vector<double> candidates{0.0};
  if (jump <= a) candidates.push_back(jump);
  // below the jump the penalty is tau b - b^2/2
  if (c != 1.0) {
    const double b = (c * a - tau) / (c - 1.0);
    if (b > 0.0 && b < jump && b <= a) candidates.push_back(b);
  }
  // beyond it the stationarity condition is c b + zeta r b^(r-1) = c a, increasing past b_m
  const auto g = [&](double b) { return c * b + zeta * r * std::pow(b, r - 1.0); };
  double lo = std::max(std::pow(zeta * r * (1.0 - r) / c, 1.0 / (2.0 - r)), jump);
  double hi = a;
  if (lo < hi && g(lo) <= c * a) {
    for (int it = 0; it < 200 && hi - lo > 1e-14 * std::max(1.0, hi); ++it) {
      const double mid = 0.5 * (lo + hi);
      (g(mid) <= c * a ? lo : hi) = mid;
    }
    candidates.push_back(0.5 * (lo + hi));
  }

  double best = 0.0;
  double best_value = kInf;
  for (double b : candidates) {
    const double value = 0.5 * c * (b - a) * (b - a) + penalty_theta(rule, b);
    if (value < best_value) {
      best_value = value;
      best = b;
    }
  }
  return best;
}

} // namespace

double scalar_minimize(const PenaltySpec& spec, double c, double w) {
  if (!(c > 0.0)) throw std::invalid_argument("scalar_minimize needs curvature c > 0");
  if (!std::isfinite(w)) throw std::domain_error("scalar_minimize needs a finite target");
  const double a = std::abs(w);
  const double sign = w < 0.0 ? -1.0 : 1.0;
  if (spec.rule().kind() == RuleKind::lr) return sign * scalar_minimize_lr(spec.rule(), c, a);

  double best = 0.0;
  double best_value = 0.5 * c * a * a;
  const auto consider = [&](double b, const QuadraticPiece& piece) {
    if (!(b > 0.0) || !std::isfinite(b)) return;
    const double value = 0.5 * c * (b - a) * (b - a) + (piece.A * b + piece.B) * b + piece.C;
    if (value < best_value) {
      best_value = value;
      best = b;
    }
  };
  for (const auto& piece : total_pieces(spec)) {
    const double curvature = c + 2.0 * piece.A;
    if (curvature > 0.0) {
      consider(std::clamp((c * a - piece.B) / curvature, piece.lo, piece.hi), piece);
    } else {
      consider(piece.lo, piece);
      consider(piece.hi, piece);
    }
  }
  return sign * best;
}

CoordinateDescentResult coordinate_descent_local_min(const Problem& problem, const PenaltySpec& spec, double rho,
                                                     const std::optional<Eigen::VectorXd>& start,
                                                     std::size_t max_sweeps) {
  const ScaledProblem scaled = scale_problem(problem, rho);
  if (start && start->size() != problem.p()) throw std::invalid_argument("start has the wrong dimension");
  Eigen::VectorXd b = start ? scaled.scale(*start) : Eigen::VectorXd::Zero(problem.p());
  Eigen::VectorXd r = scaled.y - scaled.X * b;
  const Eigen::VectorXd col_sq = scaled.X.colwise().squaredNorm().transpose();

  CoordinateDescentResult result;
  for (std::size_t sweep = 1; sweep <= max_sweeps; ++sweep) {
    double change = 0.0;
    for (Eigen::Index j = 0; j < b.size(); ++j) {
      const double c = col_sq[j];
      const double old = b[j];
      const double updated = c > 0.0 ? scalar_minimize(spec, c, old + scaled.X.col(j).dot(r) / c) : 0.0;
      if (updated != old) {
        r -= scaled.X.col(j) * (updated - old);
        b[j] = updated;
        change = std::max(change, std::abs(updated - old));
      }
    }
    result.sweeps = sweep;
    if (change <= 1e-10) {
      result.converged = true;
      break;
    }
  }
  result.beta_tilde = b;
  result.beta = scaled.unscale(b);
  return result;
}

ThetaEquationReport check_theta_equation(const Eigen::VectorXd& beta, const Problem& problem,
                                         const ThresholdRule& rule, double rho) {
  if (beta.size() != problem.p()) throw std::invalid_argument("beta has the wrong dimension");
  const ScaledProblem scaled = scale_problem_unchecked(problem, rho);
  const Eigen::VectorXd b = scaled.scale(beta);
  const Eigen::VectorXd z = b + scaled.X.transpose() * (scaled.y - scaled.X * b);
  ThetaEquationReport report;
  report.residual = (b - apply_vec(rule, z)).lpNorm<Eigen::Infinity>();
  for (double jump : rule.discontinuities()) {
    for (Eigen::Index j = 0; j < z.size(); ++j) {
      if (std::abs(std::abs(z[j]) - jump) <= 1e-9) report.near_discontinuity = true;
    }
  }
  return report;
}

std::string_view to_string(Assumption a) {
  switch (a) {
  case Assumption::R0: return "R0";
  case Assumption::R1: return "R1";
  case Assumption::S0: return "S0";
  case Assumption::S1: return "S1";
  }
  return "?";
}

Assumption assumption_from_string(std::string_view name) {
  for (auto a : {Assumption::R0, Assumption::R1, Assumption::S0, Assumption::S1}) {
    if (to_string(a) == name) return a;
  }
  throw std::invalid_argument(fmt::format("unknown assumption '{}'", name));
}

double regularity_slack(const RegularityProbeConfig& config, const ScaledProblem& scaled, const ThresholdRule& rule,
                        const Eigen::VectorXd& beta, const Eigen::VectorXd& beta_prime) {
  const double lam = config.lambda.value_or(rule.effective_threshold());
  const double L = rule.contraction();
  const Eigen::VectorXd delta = beta_prime - beta;
  const double ph = penalty_hard(delta, lam);
  const double fit = (scaled.X * delta).squaredNorm();
  const double sq = delta.squaredNorm();
  const PenaltySpec spec(rule);
  const double p_prime = penalty_sum(spec, beta_prime);
  const double p_beta = penalty_sum(spec, beta);
  const double J = static_cast<double>((beta.array() != 0.0).count());
  const double th = config.vartheta;
  const double d = config.delta;
  const double K = config.K;

  switch (config.assumption) {
  case Assumption::R0: return (2.0 - d) / 2.0 * fit + p_prime + K * p_beta - (th * ph + L / 2.0 * sq);
  case Assumption::R1: return (2.0 - d) / 2.0 * fit + p_prime + K * lam * lam * J - (th * ph + L / 2.0 * sq + p_beta);
  case Assumption::S0: return fit + p_prime + K * p_beta - (th * ph + (L + d) / 2.0 * sq);
  case Assumption::S1:
    return fit + p_prime + (K + 1.0) * lam * lam * J - (th * ph + (L + d) / 2.0 * sq + p_beta);
  }
  return 0.0;
}

ProbeResult probe_regularity(const RegularityProbeConfig& config, const Problem& problem, const ThresholdRule& rule,
                             double rho) {
  if (config.num_samples < 1) throw std::invalid_argument("probe_regularity needs num_samples >= 1");
  if (!(config.delta > 0.0) || !(config.vartheta > 0.0) || !(config.K >= 0.0)) {
    throw std::invalid_argument("probe_regularity needs delta > 0, vartheta > 0, K >= 0");
  }
  const ScaledProblem scaled = scale_problem_unchecked(problem, rho);
  const Eigen::Index p = problem.p();
  const Eigen::VectorXd beta = config.reference_beta.value_or(Eigen::VectorXd::Zero(p));
  if (beta.size() != p) throw std::invalid_argument("reference beta has the wrong dimension");

  ProbeResult result;
  result.min_slack = kInf;
  const auto evaluate = [&](const Eigen::VectorXd& d) {
    const Eigen::VectorXd beta_prime = beta + d;
    const double slack = regularity_slack(config, scaled, rule, beta, beta_prime);
    ++result.samples;
    if (slack < result.min_slack) {
      result.min_slack = slack;
      result.violating_beta = beta_prime;
    }
  };

  evaluate(Eigen::VectorXd::Zero(p));
  for (Eigen::Index j = 0; j < p; ++j) {
    for (double s : {1.0, -1.0}) {
      Eigen::VectorXd d = Eigen::VectorXd::Zero(p);
      d[j] = s * config.sample_radius;
      evaluate(d);
    }
  }

  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> log_scale(-2.0, 2.0);
  std::uniform_int_distribution<Eigen::Index> index(0, p - 1);
  for (std::size_t k = 0; k < config.num_samples; ++k) {
    Eigen::VectorXd d = Eigen::VectorXd::Zero(p);
    switch (k % 3) {
    case 0:
      for (Eigen::Index j = 0; j < p; ++j) d[j] = normal(rng);
      break;
    case 1:
      for (int m = 0; m < 3; ++m) d[index(rng)] = normal(rng);
      break;
    default: d[index(rng)] = normal(rng) < 0.0 ? -1.0 : 1.0; break;
    }
    const double norm = d.norm();
    if (norm == 0.0) continue;
    evaluate(d * (config.sample_radius * std::pow(10.0, log_scale(rng)) / norm));
  }

  if (result.min_slack >= 0.0) result.violating_beta.reset();
  return result;
}

double minimax_reference(std::size_t J, std::size_t p, double sigma) {
  if (J < 1 || J > p) throw std::invalid_argument(fmt::format("minimax_reference needs 1 <= J <= p (J = {}, p = {})", J, p));
  if (!(sigma >= 0.0)) throw std::invalid_argument("sigma must be >= 0");
  const double j = static_cast<double>(J);
  return sigma * sigma * (j + j * std::log(std::exp(1.0) * static_cast<double>(p) / j));
}

} // namespace tisp
