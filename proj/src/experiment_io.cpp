#include "tisp/experiment_io.hpp"

#include "tisp/csv.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

#include <fmt/format.h>

namespace tisp {

namespace {

std::string join_issues(const std::vector<std::string>& issues) {
  std::string msg = "invalid experiment config:";
  for (const auto& i : issues) msg += "\n  " + i;
  return msg;
}

using nlohmann::json;

class FieldReader {
public:
  FieldReader(const json& doc, std::vector<std::string>& issues) : doc_(doc), issues_(issues) {}

  bool has(const char* key) const { return doc_.contains(key) && !doc_.at(key).is_null(); }

  void require(const char* key) {
    if (!has(key)) issues_.push_back(fmt::format("{}: missing", key));
  }

  template <class T>
  void number(const char* key, T& out) {
    if (!has(key)) return;
    const json& v = doc_.at(key);
    if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer() || (v.is_number_integer() && v.get<long long>() < 0)) {
        issues_.push_back(fmt::format("{}: expected a non-negative integer", key));
        return;
      }
    } else if (!v.is_number()) {
      issues_.push_back(fmt::format("{}: expected a number", key));
      return;
    }
    out = v.get<T>();
  }

  template <class T>
  void number_list(const char* key, std::vector<T>& out) {
    if (!has(key)) return;
    const json& v = doc_.at(key);
    if (!v.is_array()) {
      issues_.push_back(fmt::format("{}: expected an array", key));
      return;
    }
    out.clear();
    for (const auto& item : v) {
      if (!item.is_number_integer() || item.get<long long>() < 0) {
        issues_.push_back(fmt::format("{}: expected non-negative integers", key));
        return;
      }
      out.push_back(item.get<T>());
    }
  }

  template <class F>
  void text(const char* key, F&& assign) {
    if (!has(key)) return;
    const json& v = doc_.at(key);
    if (!v.is_string()) {
      issues_.push_back(fmt::format("{}: expected a string", key));
      return;
    }
    try {
      assign(v.get<std::string>());
    } catch (const std::exception& e) {
      issues_.push_back(fmt::format("{}: {}", key, e.what()));
    }
  }

private:
  const json& doc_;
  std::vector<std::string>& issues_;
};

const std::set<std::string> kKnownFields{
    "ensemble", "rho_corr", "n",           "p",        "J_star",   "signal_magnitude", "sigma",
    "noise_kind", "seeds",  "rules",       "lambda_policy", "schedule", "rho_epsilon",  "tol",
    "max_iter", "p_grid",   "J_star_grid", "n_factor"};

} // namespace

SchemaError::SchemaError(std::vector<std::string> issues)
    : std::invalid_argument(join_issues(issues)), issues_(std::move(issues)) {}

ExperimentSpec parse_experiment_spec(const json& doc, ExperimentKind kind) {
  std::vector<std::string> issues;
  if (!doc.is_object()) throw SchemaError({"config must be a JSON object"});
  for (const auto& [key, value] : doc.items()) {
    if (!kKnownFields.contains(key)) issues.push_back(fmt::format("{}: unknown field", key));
  }

  ExperimentSpec spec;
  FieldReader f(doc, issues);
  f.require("sigma");
  f.require("seeds");
  f.require("rules");
  if (kind == ExperimentKind::decay) {
    f.require("n");
    f.require("p");
    f.require("J_star");
  } else {
    f.require("p_grid");
    f.require("J_star_grid");
  }

  f.text("ensemble", [&](const std::string& s) { spec.ensemble = ensemble_from_string(s); });
  f.number("rho_corr", spec.rho_corr);
  f.number("n", spec.n);
  f.number("p", spec.p);
  f.number("J_star", spec.J_star);
  if (f.has("signal_magnitude")) {
    double v = 0.0;
    f.number("signal_magnitude", v);
    spec.signal_magnitude = v;
  }
  f.number("sigma", spec.sigma);
  f.text("noise_kind", [&](const std::string& s) { spec.noise_kind = noise_kind_from_string(s); });
  f.number_list("seeds", spec.seeds);
  if (f.has("rules")) {
    const json& rules = doc.at("rules");
    if (!rules.is_array() || !std::all_of(rules.begin(), rules.end(), [](const json& r) { return r.is_string(); })) {
      issues.push_back("rules: expected an array of strings");
    } else {
      for (const auto& r : rules) spec.rules.push_back(r.get<std::string>());
    }
  }
  if (f.has("lambda_policy")) {
    const json& lp = doc.at("lambda_policy");
    if (lp.is_object() && lp.size() == 1 && lp.contains("theory") && lp.at("theory").is_number()) {
      spec.lambda_policy = {LambdaPolicy::Mode::theory, lp.at("theory").get<double>()};
    } else if (lp.is_object() && lp.size() == 1 && lp.contains("explicit") && lp.at("explicit").is_number()) {
      spec.lambda_policy = {LambdaPolicy::Mode::explicit_value, lp.at("explicit").get<double>()};
    } else {
      issues.push_back("lambda_policy: expected {\"theory\": A} or {\"explicit\": lambda}");
    }
  }
  f.text("schedule", [&](const std::string& s) { spec.schedule = LambdaSchedule::parse(s); });
  f.number("rho_epsilon", spec.rho_epsilon);
  f.number("tol", spec.tol);
  f.number("max_iter", spec.max_iter);
  f.number_list("p_grid", spec.p_grid);
  f.number_list("J_star_grid", spec.J_star_grid);
  f.number("n_factor", spec.n_factor);

  if (kind == ExperimentKind::rate && issues.empty() && !spec.p_grid.empty() && !spec.J_star_grid.empty()) {
    // validate() checks n, p, J_star; give it the largest grid point
    spec.p = *std::max_element(spec.p_grid.begin(), spec.p_grid.end());
    spec.J_star = *std::min_element(spec.J_star_grid.begin(), spec.J_star_grid.end());
    spec.n = std::max(spec.n, spec.p);
  }
  if (issues.empty()) issues = spec.issues();
  if (!issues.empty()) throw SchemaError(std::move(issues));
  return spec;
}

ExperimentSpec load_experiment_spec(const std::filesystem::path& path, ExperimentKind kind) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(fmt::format("cannot open config '{}'", path.string()));
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError({fmt::format("{}: not valid JSON ({})", path.string(), e.what())});
  }
  return parse_experiment_spec(doc, kind);
}

namespace {

std::string opt(const std::optional<double>& v) { return v ? format_number(*v) : std::string(); }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

json distribution(std::vector<double> v) {
  if (v.empty()) return json{{"count", 0}};
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  const double median = v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
  return json{{"count", v.size()}, {"min", v.front()}, {"median", median}, {"max", v.back()}};
}

} // namespace

void write_results_csv(std::ostream& out, const std::vector<RunResult>& runs) {
  out << "seed,rule,n,p,J_star,sigma,lambda,rho,iters,pred_err,est_err,weighted_err,kappa_hat,plateau,plateau_ratio\n";
  for (const auto& r : runs) {
    out << r.seed << ',' << csv_field(r.rule) << ',' << r.n << ',' << r.p << ',' << r.J_star << ','
        << format_number(r.sigma) << ',' << format_number(r.lambda) << ',' << format_number(r.rho) << ','
        << r.iters << ',' << format_number(r.pred_err) << ',' << format_number(r.est_err) << ','
        << format_number(r.weighted_err) << ',' << opt(r.kappa_hat) << ',' << format_number(r.plateau) << ','
        << opt(r.plateau_ratio) << '\n';
  }
}

json decay_summary(const std::vector<RunResult>& runs) {
  std::map<std::string, std::vector<RunResult>> by_rule;
  std::vector<std::string> order;
  for (const auto& r : runs) {
    if (!by_rule.contains(r.rule)) order.push_back(r.rule);
    by_rule[r.rule].push_back(r);
  }
  json rules = json::array();
  for (const auto& name : order) {
    const auto& group = by_rule[name];
    std::vector<double> kappas, ratios, plateaus;
    std::size_t converged = 0;
    for (const auto& r : group) {
      if (r.kappa_hat) kappas.push_back(*r.kappa_hat);
      if (r.plateau_ratio) ratios.push_back(*r.plateau_ratio);
      plateaus.push_back(r.plateau);
      converged += r.converged ? 1 : 0;
    }
    const DecayBound bound = fit_decay_bound(group);
    rules.push_back({{"rule", name},
                     {"runs", group.size()},
                     {"converged", converged},
                     {"kappa_hat", distribution(kappas)},
                     {"plateau", distribution(plateaus)},
                     {"plateau_ratio", distribution(ratios)},
                     {"decay_bound", {{"kappa", bound.kappa}, {"K_prime", bound.K_prime}, {"passed", bound.passed}}}});
  }
  const DecayBound all = fit_decay_bound(runs);
  return json{{"rows", runs.size()},
              {"rules", rules},
              {"decay_bound", {{"kappa", all.kappa}, {"K_prime", all.K_prime}, {"passed", all.passed}}}};
}

json rate_summary(const RateReport& report) {
  json points = json::array();
  for (const auto& p : report.points) {
    points.push_back({{"p", p.p},
                      {"J_star", p.J_star},
                      {"n", p.n},
                      {"rule", p.rule},
                      {"rate", p.rate},
                      {"median_pred_err", p.median_pred_err}});
  }
  return json{{"rows", report.runs.size()},
              {"slope", report.slope},
              {"intercept", report.intercept},
              {"r_squared", report.r_squared},
              {"points", points}};
}

} // namespace tisp
