#include "tisp/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <numeric>
#include <set>
#include <thread>

#include <fmt/format.h>

namespace tisp {

std::string_view to_string(Ensemble e) {
  switch (e) {
  case Ensemble::gaussian_iid: return "gaussian-iid";
  case Ensemble::gaussian_ar1: return "gaussian-ar1";
  case Ensemble::orthonormal: return "orthonormal";
  }
  return "?";
}

Ensemble ensemble_from_string(std::string_view name) {
  for (auto e : {Ensemble::gaussian_iid, Ensemble::gaussian_ar1, Ensemble::orthonormal}) {
    if (to_string(e) == name) return e;
  }
  throw std::invalid_argument(fmt::format("unknown ensemble '{}'", name));
}

std::string_view to_string(NoiseKind k) {
  switch (k) {
  case NoiseKind::gaussian: return "gaussian";
  case NoiseKind::rademacher_scaled: return "rademacher-scaled";
  case NoiseKind::uniform_bounded: return "uniform-bounded";
  }
  return "?";
}

NoiseKind noise_kind_from_string(std::string_view name) {
  for (auto k : {NoiseKind::gaussian, NoiseKind::rademacher_scaled, NoiseKind::uniform_bounded}) {
    if (to_string(k) == name) return k;
  }
  throw std::invalid_argument(fmt::format("unknown noise kind '{}'", name));
}

double LambdaPolicy::resolve(double sigma, std::size_t p) const {
  return mode == Mode::theory ? theory_lambda(value, sigma, p) : value;
}

std::vector<std::string> ExperimentSpec::issues() const {
  std::vector<std::string> problems;
  if (n < 1) problems.push_back("n must be >= 1");
  if (p < 1) problems.push_back("p must be >= 1");
  if (J_star > std::min(n, p)) problems.push_back("J_star must not exceed min(n, p)");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) problems.push_back("sigma must be finite and >= 0");
  if (!(rho_corr > -1.0 && rho_corr < 1.0)) problems.push_back("rho_corr must lie in (-1, 1)");
  if (ensemble == Ensemble::orthonormal && n < p) problems.push_back("orthonormal ensemble needs n >= p");
  if (signal_magnitude && !(*signal_magnitude > 0.0)) problems.push_back("signal_magnitude must be > 0");
  if (seeds.empty()) problems.push_back("seeds must not be empty");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
    problems.push_back("seeds must be distinct");
  }
  if (rules.empty()) problems.push_back("rules must not be empty");
  for (const auto& r : rules) {
    try {
      experiment_rule(r, 1.0);
    } catch (const std::exception& e) {
      problems.push_back(fmt::format("rules: {}", e.what()));
    }
  }
  if (!(lambda_policy.value >= 0.0) || !std::isfinite(lambda_policy.value)) {
    problems.push_back("lambda_policy value must be finite and >= 0");
  }
  if (!(rho_epsilon > 0.0)) problems.push_back("rho_epsilon must be > 0");
  if (!(tol > 0.0)) problems.push_back("tol must be > 0");
  if (max_iter < 1) problems.push_back("max_iter must be >= 1");
  if (!(n_factor > 0.0)) problems.push_back("n_factor must be > 0");
  return problems;
}

void ExperimentSpec::validate() const {
  const auto problems = issues();
  if (!problems.empty()) {
    std::string msg = "invalid experiment spec:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw std::invalid_argument(msg);
  }
}

double ExperimentSpec::resolved_signal_magnitude() const {
  if (signal_magnitude) return *signal_magnitude;
  const double reference = sigma > 0.0 ? sigma : 1.0;
  return 5.0 * theory_lambda(1.0, reference, p);
}

std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

Eigen::MatrixXd gen_design(const ExperimentSpec& spec, std::uint64_t seed) {
  const auto n = static_cast<Eigen::Index>(spec.n);
  const auto p = static_cast<Eigen::Index>(spec.p);
  auto rng = make_stream(seed, 1);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd X(n, p);

  switch (spec.ensemble) {
  case Ensemble::gaussian_iid: {
    const double sd = 1.0 / std::sqrt(static_cast<double>(n));
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < p; ++j) X(i, j) = sd * normal(rng);
    break;
  }
  case Ensemble::gaussian_ar1: {
    const double sd = 1.0 / std::sqrt(static_cast<double>(n));
    const double c = spec.rho_corr;
    const double innovation = std::sqrt(1.0 - c * c);
    for (Eigen::Index i = 0; i < n; ++i) {
      double prev = normal(rng);
      X(i, 0) = sd * prev;
      for (Eigen::Index j = 1; j < p; ++j) {
        prev = c * prev + innovation * normal(rng);
        X(i, j) = sd * prev;
      }
    }
    break;
  }
  case Ensemble::orthonormal: {
    if (n < p) throw std::invalid_argument("orthonormal ensemble needs n >= p");
    Eigen::MatrixXd G(n, p);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < p; ++j) G(i, j) = normal(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
    X = qr.householderQ() * Eigen::MatrixXd::Identity(n, p);
    break;
  }
  }
  return X;
}

Eigen::VectorXd gen_beta_star(const ExperimentSpec& spec, std::uint64_t seed) {
  auto rng = make_stream(seed, 2);
  std::vector<Eigen::Index> positions(spec.p);
  std::iota(positions.begin(), positions.end(), Eigen::Index{0});
  // partial Fisher-Yates
  for (std::size_t i = 0; i < spec.J_star; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, spec.p - 1);
    std::swap(positions[i], positions[pick(rng)]);
  }
  std::bernoulli_distribution coin(0.5);
  const double magnitude = spec.resolved_signal_magnitude();
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(spec.p));
  for (std::size_t i = 0; i < spec.J_star; ++i) beta[positions[i]] = coin(rng) ? magnitude : -magnitude;
  return beta;
}

Eigen::VectorXd gen_response(const Eigen::MatrixXd& X, const Eigen::VectorXd& beta_star, double sigma,
                             NoiseKind noise_kind, std::uint64_t seed) {
  if (beta_star.size() != X.cols()) throw std::invalid_argument("beta* does not match the design");
  if (!(sigma >= 0.0)) throw std::invalid_argument("sigma must be >= 0");
  Eigen::VectorXd y = X * beta_star;
  if (sigma == 0.0) return y;
  auto rng = make_stream(seed, 3);
  std::normal_distribution<double> normal(0.0, sigma);
  std::bernoulli_distribution coin(0.5);
  const double half_width = sigma * std::sqrt(3.0);
  std::uniform_real_distribution<double> uniform(-half_width, half_width);
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    switch (noise_kind) {
    case NoiseKind::gaussian: y[i] += normal(rng); break;
    case NoiseKind::rademacher_scaled: y[i] += coin(rng) ? sigma : -sigma; break;
    case NoiseKind::uniform_bounded: y[i] += uniform(rng); break;
    }
  }
  return y;
}

Problem gen_problem(const ExperimentSpec& spec, std::uint64_t seed) {
  Eigen::MatrixXd X = gen_design(spec, seed);
  Eigen::VectorXd beta = gen_beta_star(spec, seed);
  Eigen::VectorXd y = gen_response(X, beta, spec.sigma, spec.noise_kind, seed);
  return Problem(std::move(X), std::move(y), std::move(beta), spec.sigma);
}

ErrorMetrics error_metrics(const Eigen::VectorXd& beta, const Problem& problem, double rho) {
  if (!problem.beta_star()) throw std::invalid_argument("error metrics need beta*");
  if (beta.size() != problem.p()) throw std::invalid_argument("beta has the wrong dimension");
  const Eigen::VectorXd delta = beta - *problem.beta_star();
  ErrorMetrics m;
  m.pred = (problem.X() * delta).squaredNorm();
  m.est = delta.squaredNorm();
  m.weighted = rho * rho * m.est - m.pred;
  return m;
}

ThresholdRule experiment_rule(std::string_view entry, double lambda) {
  if (entry.find('(') != std::string_view::npos) return parse_rule(entry).with_threshold(lambda);
  const RuleKind kind = rule_kind_from_string(entry);
  for (const auto& rule : standard_rule_catalog(lambda)) {
    if (rule.kind() == kind) return rule;
  }
  throw std::invalid_argument(fmt::format("unknown rule '{}'", entry));
}

namespace {

template <class F>
void parallel_for(std::size_t count, unsigned jobs, F&& body) {
  const unsigned workers = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(count)));
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        body(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

struct Task {
  std::size_t rule_index;
  std::uint64_t seed;
  ExperimentSpec spec; // n, p, J_star set for this task
};

RunResult run_one(const Task& task) {
  const ExperimentSpec& spec = task.spec;
  const Problem problem = gen_problem(spec, task.seed);
  const double lambda = spec.lambda_policy.resolve(spec.sigma, spec.p);
  const ThresholdRule rule = experiment_rule(spec.rules[task.rule_index], lambda);

  SolverConfig config;
  config.rule = rule;
  config.rho = RhoPolicy::automatic(spec.rho_epsilon);
  config.schedule = spec.schedule;
  config.tol = spec.tol;
  config.max_iter = spec.max_iter;
  const SolveResult solved = solve(problem, config);

  RunResult run;
  run.seed = task.seed;
  run.rule = rule.to_spec();
  run.n = spec.n;
  run.p = spec.p;
  run.J_star = spec.J_star;
  run.sigma = spec.sigma;
  run.lambda = lambda;
  run.rho = solved.rho;
  run.iters = solved.iterations;
  run.converged = solved.termination == Termination::converged;
  const ErrorMetrics m = error_metrics(solved.beta, problem, solved.rho);
  run.pred_err = m.pred;
  run.est_err = m.est;
  run.weighted_err = m.weighted;
  run.weighted_sequence.reserve(solved.trace.rows.size());
  for (const auto& row : solved.trace.rows) run.weighted_sequence.push_back(*row.weighted_err);
  const DecayFit fit = fit_decay(run.weighted_sequence);
  run.kappa_hat = fit.kappa_hat;
  run.plateau = fit.plateau;
  if (lambda > 0.0 && spec.J_star > 0) {
    run.plateau_ratio = fit.plateau / (lambda * lambda * static_cast<double>(spec.J_star));
  }
  return run;
}

std::vector<RunResult> run_tasks(const std::vector<Task>& tasks, unsigned jobs) {
  std::vector<RunResult> results(tasks.size());
  parallel_for(tasks.size(), jobs, [&](std::size_t i) { results[i] = run_one(tasks[i]); });
  return results;
}

} // namespace

DecayFit fit_decay(const std::vector<double>& e) {
  DecayFit fit;
  if (e.empty()) return fit;
  const std::size_t tail = std::min<std::size_t>(10, e.size());
  fit.plateau = median(std::vector<double>(e.end() - static_cast<std::ptrdiff_t>(tail), e.end()));
  if (e.size() < 5) return fit;

  std::size_t len = 0;
  while (len < e.size() && e[len] > 4.0 * fit.plateau) ++len;
  if (len < 3) return fit;
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t t = 0; t < len; ++t) {
    const double x = static_cast<double>(t);
    const double y = std::log(e[t]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double k = static_cast<double>(len);
  const double slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
  fit.kappa_hat = std::exp(slope);
  return fit;
}

DecayBound fit_decay_bound(const std::vector<RunResult>& runs) {
  DecayBound bound;
  bool any = false;
  for (const auto& run : runs) {
    if (run.kappa_hat && run.lambda > 0.0) {
      bound.kappa = any ? std::max(bound.kappa, *run.kappa_hat) : *run.kappa_hat;
      any = true;
    }
  }
  if (!any) return bound;
  for (const auto& run : runs) {
    // every step of every converged run, fitted or not
    if (!run.converged || !(run.lambda > 0.0) || run.J_star == 0) continue;
    const double floor = run.lambda * run.lambda * static_cast<double>(run.J_star);
    const auto& e = run.weighted_sequence;
    for (std::size_t t = 0; t + 1 < e.size(); ++t) {
      bound.K_prime = std::max(bound.K_prime, (e[t + 1] - bound.kappa * e[t]) / floor);
    }
  }
  bound.passed = bound.kappa < 1.0 && bound.K_prime <= 20.0;
  return bound;
}

std::vector<RunResult> run_decay_experiment(const ExperimentSpec& spec, unsigned jobs) {
  spec.validate();
  std::vector<Task> tasks;
  for (std::size_t r = 0; r < spec.rules.size(); ++r) {
    for (auto seed : spec.seeds) tasks.push_back({r, seed, spec});
  }
  // task order is already (rule, seed); the pool writes results by index
  return run_tasks(tasks, jobs);
}

RateReport run_rate_experiment(const ExperimentSpec& spec, unsigned jobs) {
  spec.validate();
  if (spec.p_grid.empty() || spec.J_star_grid.empty()) throw std::invalid_argument("rate study needs p_grid and J_star_grid");
  if (spec.p_grid.size() * spec.J_star_grid.size() < 4) throw std::invalid_argument("rate study needs >= 4 grid points");
  if (spec.seeds.size() < 10) throw std::invalid_argument("rate study needs >= 10 seeds per grid point");
  if (!(spec.sigma > 0.0)) throw std::invalid_argument("rate study needs sigma > 0");

  std::vector<Task> tasks;
  RateReport report;
  for (std::size_t r = 0; r < spec.rules.size(); ++r) {
    for (auto p : spec.p_grid) {
      for (auto J : spec.J_star_grid) {
        ExperimentSpec point = spec;
        point.p = p;
        point.J_star = J;
        point.n = static_cast<std::size_t>(std::ceil(spec.n_factor * static_cast<double>(J) * std::log(static_cast<double>(p))));
        point.validate();
        RatePoint rp;
        rp.p = p;
        rp.J_star = J;
        rp.n = point.n;
        rp.rule = experiment_rule(spec.rules[r], 1.0).to_spec();
        rp.rate = spec.sigma * spec.sigma * static_cast<double>(J) * std::log(std::exp(1.0) * static_cast<double>(p));
        report.points.push_back(rp);
        for (auto seed : spec.seeds) tasks.push_back({r, seed, point});
      }
    }
  }
  report.runs = run_tasks(tasks, jobs);

  const std::size_t per_point = spec.seeds.size();
  std::vector<double> xs, ys;
  for (std::size_t k = 0; k < report.points.size(); ++k) {
    std::vector<double> preds;
    for (std::size_t s = 0; s < per_point; ++s) preds.push_back(report.runs[k * per_point + s].pred_err);
    auto& point = report.points[k];
    point.rule = report.runs[k * per_point].rule;
    point.median_pred_err = median(preds);
    if (!(point.median_pred_err > 0.0)) throw std::runtime_error("rate study: zero median prediction error");
    xs.push_back(std::log(point.rate));
    ys.push_back(std::log(point.median_pred_err));
  }

  const double m = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / m;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / m;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("rate study: degenerate grid (all rates equal)");
  report.slope = sxy / sxx;
  report.intercept = my - report.slope * mx;
  report.r_squared = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
  return report;
}

} // namespace tisp
