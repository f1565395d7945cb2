#include "tisp/cli.hpp"

#include "tisp/csv.hpp"
#include "tisp/experiment_io.hpp"
#include "tisp/penalty.hpp"
#include "tisp/simulate.hpp"
#include "tisp/solver.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <filesystem>
#include <fstream>
#include <ostream>

namespace tisp {

namespace {

namespace fs = std::filesystem;

struct SolveOptions {
  std::string design;
  std::string response;
  std::string rule;
  std::string rho = "auto";
  double rho_epsilon = 0.01;
  double alpha = 1.0;
  std::string schedule;
  std::string augmentation = "none";
  double tol = 1e-8;
  std::size_t max_iter = 10000;
  std::size_t record_every = 1;
  std::string trace;
  std::string beta_star;
  std::string out;
  std::optional<double> sigma;
  double A = 1.0;
  std::size_t multistart = 0;
  std::uint64_t seed = 1;
};

struct ExperimentOptions {
  std::string config;
  std::string out;
  unsigned jobs = 1;
};

struct SimulateOptions {
  std::string config;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
};

struct VerifyOptions {
  std::string suite;
  std::uint64_t seed = 1;
};

void write_file(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(fmt::format("cannot open '{}' for writing", path.string()));
  body(out);
  if (!out) throw std::runtime_error(fmt::format("failed writing '{}'", path.string()));
}

int cmd_solve(const SolveOptions& o, std::ostream& out) {
  Eigen::MatrixXd X = read_matrix_csv(o.design);
  Eigen::VectorXd y = read_vector_csv(o.response);
  std::optional<Eigen::VectorXd> beta_star;
  if (!o.beta_star.empty()) beta_star = read_vector_csv(o.beta_star);
  const auto p = static_cast<std::size_t>(X.cols());
  const Problem problem(std::move(X), std::move(y), std::move(beta_star), o.sigma);

  SolverConfig config;
  if (o.rule.find('(') == std::string::npos) {
    // a bare rule name takes its threshold from sigma
    if (!o.sigma) throw std::invalid_argument(fmt::format("rule '{}' has no parameters; pass --sigma or a full rule spec", o.rule));
    config.rule = experiment_rule(o.rule, theory_lambda(o.A, *o.sigma, p));
  } else {
    config.rule = parse_rule(o.rule);
  }
  config.augmentation = augmentation_from_string(o.augmentation);
  if (o.rho == "auto") {
    config.rho = RhoPolicy::automatic(o.rho_epsilon);
  } else {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(o.rho, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != o.rho.size()) throw std::invalid_argument(fmt::format("--rho expects 'auto' or a number (got '{}')", o.rho));
    config.rho = RhoPolicy::fixed_value(v);
  }
  config.alpha = o.alpha;
  if (!o.schedule.empty()) config.schedule = LambdaSchedule::parse(o.schedule);
  config.tol = o.tol;
  config.max_iter = o.max_iter;
  config.record_every = o.record_every;

  const SolveResult result =
      o.multistart > 0 ? solve_multistart(problem, config, o.multistart, o.seed) : solve(problem, config);
  if (!o.trace.empty()) result.trace.write_csv(o.trace);
  if (o.out.empty()) {
    write_vector_csv(out, result.beta);
  } else {
    write_file(o.out, [&](std::ostream& f) { write_vector_csv(f, result.beta); });
  }
  return result.termination == Termination::converged ? 0 : 2;
}

int cmd_simulate(const SimulateOptions& o, std::ostream& out) {
  const ExperimentSpec spec = load_experiment_spec(o.config, ExperimentKind::decay);
  const std::uint64_t seed = o.seed.value_or(spec.seeds.front());
  const Problem problem = gen_problem(spec, seed);
  const fs::path dir(o.out);
  fs::create_directories(dir);
  write_file(dir / "X.csv", [&](std::ostream& f) { write_matrix_csv(f, problem.X()); });
  write_file(dir / "y.csv", [&](std::ostream& f) { write_vector_csv(f, problem.y()); });
  write_file(dir / "beta_star.csv", [&](std::ostream& f) { write_vector_csv(f, *problem.beta_star()); });
  out << nlohmann::json{{"seed", seed},
                        {"n", spec.n},
                        {"p", spec.p},
                        {"J_star", spec.J_star},
                        {"sigma", spec.sigma},
                        {"lambda", spec.lambda_policy.resolve(spec.sigma, spec.p)}}
             .dump()
      << '\n';
  return 0;
}

int emit_experiment(const ExperimentOptions& o, const std::vector<RunResult>& runs, const nlohmann::json& summary,
                    std::ostream& out) {
  if (o.out.empty()) {
    write_results_csv(out, runs);
    return 0;
  }
  const fs::path dir(o.out);
  fs::create_directories(dir);
  write_file(dir / "results.csv", [&](std::ostream& f) { write_results_csv(f, runs); });
  write_file(dir / "summary.json", [&](std::ostream& f) { f << summary.dump(2) << '\n'; });
  out << summary.dump(2) << '\n';
  return 0;
}

int cmd_decay(const ExperimentOptions& o, std::ostream& out) {
  const ExperimentSpec spec = load_experiment_spec(o.config, ExperimentKind::decay);
  const auto runs = run_decay_experiment(spec, o.jobs);
  return emit_experiment(o, runs, decay_summary(runs), out);
}

int cmd_rate(const ExperimentOptions& o, std::ostream& out) {
  const ExperimentSpec spec = load_experiment_spec(o.config, ExperimentKind::rate);
  const RateReport report = run_rate_experiment(spec, o.jobs);
  return emit_experiment(o, report.runs, rate_summary(report), out);
}

int cmd_verify(const VerifyOptions& o, std::ostream& out) {
  const auto checks = run_verify_suite(o.suite, o.seed);
  bool ok = true;
  for (const auto& c : checks) {
    const char* status = c.finding ? "FINDING" : (c.passed ? "PASS" : "FAIL");
    out << fmt::format("{:<7} {}  worst={}", status, c.name, format_number(c.worst));
    if (!c.detail.empty()) out << "  (" << c.detail << ')';
    out << '\n';
    ok = ok && c.passed;
  }
  return ok ? 0 : 1;
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Iterative thresholding solver for sparse linear regression"};
  app.require_subcommand(1);

  SolveOptions solve_opts;
  auto* solve_cmd = app.add_subcommand("solve", "Solve one problem from CSV inputs");
  solve_cmd->add_option("--design", solve_opts.design, "Design matrix X (headerless CSV)")->required();
  solve_cmd->add_option("--response", solve_opts.response, "Response y (CSV)")->required();
  solve_cmd->add_option("--rule", solve_opts.rule, "Rule spec, e.g. soft(lambda=0.5), or a bare name with --sigma")
      ->required();
  solve_cmd->add_option("--rho", solve_opts.rho, "Scaling: auto or a number >= ||X||_2");
  solve_cmd->add_option("--rho-epsilon", solve_opts.rho_epsilon, "auto rho = (1 + eps) ||X||_2");
  solve_cmd->add_option("--alpha", solve_opts.alpha, "Stepsize in (0, 1]");
  solve_cmd->add_option("--lambda-schedule", solve_opts.schedule, "constant:l | geometric:l0,factor,floor | explicit:l1,l2,...");
  solve_cmd->add_option("--augmentation", solve_opts.augmentation, "none | capped-l1 | l0 | l0+l2");
  solve_cmd->add_option("--tol", solve_opts.tol, "Fixed-point residual tolerance");
  solve_cmd->add_option("--max-iter", solve_opts.max_iter, "Iteration cap");
  solve_cmd->add_option("--record-every", solve_opts.record_every, "Trace stride");
  solve_cmd->add_option("--trace", solve_opts.trace, "Write the iterate trace CSV here");
  solve_cmd->add_option("--beta-star", solve_opts.beta_star, "Ground truth for the error columns of the trace");
  solve_cmd->add_option("--out", solve_opts.out, "Write beta here instead of stdout");
  solve_cmd->add_option("--sigma", solve_opts.sigma, "Noise level; sets lambda = A sigma sqrt(log(e p)) for bare rule names");
  solve_cmd->add_option("--A", solve_opts.A, "Constant A of the theory threshold");
  solve_cmd->add_option("--multistart", solve_opts.multistart, "Number of starts around a ridge pilot (0 = start at zero)");
  solve_cmd->add_option("--seed", solve_opts.seed, "Seed for multistart perturbations");

  SimulateOptions sim_opts;
  auto* sim_cmd = app.add_subcommand("simulate", "Write one synthetic problem (X.csv, y.csv, beta_star.csv)");
  sim_cmd->add_option("--config", sim_opts.config, "Experiment config JSON")->required();
  sim_cmd->add_option("--out", sim_opts.out, "Output directory");
  sim_cmd->add_option("--seed", sim_opts.seed, "Seed (default: first config seed)");

  ExperimentOptions decay_opts;
  auto* decay_cmd = app.add_subcommand("decay", "Run the error-decay experiment");
  decay_cmd->add_option("--config", decay_opts.config, "Experiment config JSON")->required();
  decay_cmd->add_option("--out", decay_opts.out, "Output directory for results.csv and summary.json");
  decay_cmd->add_option("--jobs", decay_opts.jobs, "Worker threads")->check(CLI::PositiveNumber);

  ExperimentOptions rate_opts;
  auto* rate_cmd = app.add_subcommand("rate", "Run the prediction-error rate experiment");
  rate_cmd->add_option("--config", rate_opts.config, "Experiment config JSON")->required();
  rate_cmd->add_option("--out", rate_opts.out, "Output directory for results.csv and summary.json");
  rate_cmd->add_option("--jobs", rate_opts.jobs, "Worker threads")->check(CLI::PositiveNumber);

  VerifyOptions verify_opts;
  auto* verify_cmd = app.add_subcommand("verify", "Run a property suite");
  verify_cmd->add_option("--suite", verify_opts.suite, "Suite name")
      ->required()
      ->check(CLI::IsMember(verify_suite_names()));
  verify_cmd->add_option("--seed", verify_opts.seed, "Seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }

  try {
    if (*solve_cmd) return cmd_solve(solve_opts, out);
    if (*sim_cmd) return cmd_simulate(sim_opts, out);
    if (*decay_cmd) return cmd_decay(decay_opts, out);
    if (*rate_cmd) return cmd_rate(rate_opts, out);
    if (*verify_cmd) return cmd_verify(verify_opts, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

} // namespace tisp
