#include "tisp/thresholding.hpp"

#include "tisp/csv.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace tisp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require(bool ok, std::string_view rule, std::string_view what, double value) {
  if (!ok) {
    throw std::invalid_argument(fmt::format("{}: {} (got {})", rule, what, value));
  }
}

void check_lambda(std::string_view rule, double lambda) {
  require(std::isfinite(lambda) && lambda >= 0.0, rule, "lambda must be finite and >= 0", lambda);
}

void check_eta(std::string_view rule, double eta) {
  require(std::isfinite(eta) && eta >= 0.0, rule, "eta must be finite and >= 0", eta);
}

double sign_of(double t) { return t < 0.0 ? -1.0 : 1.0; }

// (2 - r) (2 - 2r)^((r - 1) / (2 - r)): the l_r threshold for zeta = 1.
double lr_threshold_constant(double r) {
  return (2.0 - r) * std::pow(2.0 - 2.0 * r, (r - 1.0) / (2.0 - r));
}

} // namespace

std::string_view to_string(RuleKind kind) {
  switch (kind) {
  case RuleKind::soft: return "soft";
  case RuleKind::hard: return "hard";
  case RuleKind::ridge: return "ridge";
  case RuleKind::elastic_net: return "elastic-net";
  case RuleKind::berhu: return "berhu";
  case RuleKind::hard_ridge: return "hard-ridge";
  case RuleKind::scad: return "scad";
  case RuleKind::mcp: return "mcp";
  case RuleKind::lr: return "lr";
  }
  return "unknown";
}

RuleKind rule_kind_from_string(std::string_view name) {
  for (auto kind : {RuleKind::soft, RuleKind::hard, RuleKind::ridge, RuleKind::elastic_net,
                    RuleKind::berhu, RuleKind::hard_ridge, RuleKind::scad, RuleKind::mcp,
                    RuleKind::lr}) {
    if (to_string(kind) == name) return kind;
  }
  throw std::invalid_argument(fmt::format("unknown rule '{}'", name));
}

ThresholdRule ThresholdRule::soft(double lambda) {
  check_lambda("soft", lambda);
  ThresholdRule rule(RuleKind::soft);
  rule.lambda_ = lambda;
  return rule;
}

ThresholdRule ThresholdRule::hard(double lambda) {
  check_lambda("hard", lambda);
  ThresholdRule rule(RuleKind::hard);
  rule.lambda_ = lambda;
  return rule;
}

ThresholdRule ThresholdRule::ridge(double eta) {
  check_eta("ridge", eta);
  ThresholdRule rule(RuleKind::ridge);
  rule.eta_ = eta;
  return rule;
}

ThresholdRule ThresholdRule::elastic_net(double lambda, double eta) {
  check_lambda("elastic-net", lambda);
  check_eta("elastic-net", eta);
  ThresholdRule rule(RuleKind::elastic_net);
  rule.lambda_ = lambda;
  rule.eta_ = eta;
  return rule;
}

ThresholdRule ThresholdRule::berhu(double lambda, double eta) {
  check_lambda("berhu", lambda);
  check_eta("berhu", eta);
  ThresholdRule rule(RuleKind::berhu);
  rule.lambda_ = lambda;
  rule.eta_ = eta;
  return rule;
}

ThresholdRule ThresholdRule::hard_ridge(double lambda, double eta) {
  check_lambda("hard-ridge", lambda);
  check_eta("hard-ridge", eta);
  ThresholdRule rule(RuleKind::hard_ridge);
  rule.lambda_ = lambda;
  rule.eta_ = eta;
  return rule;
}

ThresholdRule ThresholdRule::scad(double lambda, double a) {
  check_lambda("scad", lambda);
  require(std::isfinite(a) && a > 2.0, "scad", "a must be finite and > 2", a);
  ThresholdRule rule(RuleKind::scad);
  rule.lambda_ = lambda;
  rule.a_ = a;
  return rule;
}

ThresholdRule ThresholdRule::mcp(double lambda, double gamma) {
  check_lambda("mcp", lambda);
  require(std::isfinite(gamma) && gamma > 1.0, "mcp", "gamma must be finite and > 1", gamma);
  ThresholdRule rule(RuleKind::mcp);
  rule.lambda_ = lambda;
  rule.gamma_ = gamma;
  return rule;
}

ThresholdRule ThresholdRule::lr(double zeta, double r) {
  require(std::isfinite(zeta) && zeta >= 0.0, "lr", "zeta must be finite and >= 0", zeta);
  require(r > 0.0 && r < 1.0, "lr", "r must lie in (0, 1)", r);
  ThresholdRule rule(RuleKind::lr);
  rule.zeta_ = zeta;
  rule.r_ = r;
  return rule;
}

ThresholdRule ThresholdRule::lr_with_threshold(double threshold, double r) {
  check_lambda("lr", threshold);
  require(r > 0.0 && r < 1.0, "lr", "r must lie in (0, 1)", r);
  return lr(std::pow(threshold / lr_threshold_constant(r), 2.0 - r), r);
}

double ThresholdRule::contraction() const {
  switch (kind_) {
  case RuleKind::soft: return 0.0;
  case RuleKind::hard: return 1.0;
  case RuleKind::ridge: return -eta_;
  case RuleKind::elastic_net: return -eta_;
  case RuleKind::berhu: return 0.0;
  case RuleKind::hard_ridge: return 1.0;
  case RuleKind::scad: return 1.0 / (a_ - 1.0);
  case RuleKind::mcp: return 1.0 / gamma_;
  case RuleKind::lr: return 1.0;
  }
  return 1.0;
}

double ThresholdRule::effective_threshold() const {
  switch (kind_) {
  case RuleKind::ridge: return 0.0;
  case RuleKind::lr: return std::pow(zeta_, 1.0 / (2.0 - r_)) * lr_threshold_constant(r_);
  default: return lambda_;
  }
}

bool ThresholdRule::continuous() const { return discontinuities().empty(); }

std::vector<double> ThresholdRule::discontinuities() const {
  switch (kind_) {
  case RuleKind::hard:
  case RuleKind::hard_ridge:
    if (lambda_ > 0.0) return {lambda_};
    return {};
  case RuleKind::lr:
    if (zeta_ > 0.0) return {effective_threshold()};
    return {};
  default: return {};
  }
}

std::vector<double> ThresholdRule::inverse_kinks() const {
  std::vector<double> kinks;
  switch (kind_) {
  case RuleKind::hard: kinks = {lambda_}; break;
  case RuleKind::hard_ridge: kinks = {lambda_ / (1.0 + eta_)}; break;
  case RuleKind::berhu:
    if (eta_ > 0.0) kinks = {lambda_ / eta_};
    break;
  case RuleKind::scad: kinks = {lambda_, a_ * lambda_}; break;
  case RuleKind::mcp: kinks = {gamma_ * lambda_}; break;
  case RuleKind::lr:
    if (zeta_ > 0.0) kinks = {lr_jump_value()};
    break;
  default: break;
  }
  std::erase_if(kinks, [](double k) { return !(k > 0.0) || !std::isfinite(k); });
  return kinks;
}

ThresholdRule ThresholdRule::with_threshold(double lambda) const {
  check_lambda(to_string(kind_), lambda);
  if (kind_ == RuleKind::ridge) return *this;
  if (kind_ == RuleKind::lr) return lr_with_threshold(lambda, r_);
  ThresholdRule copy = *this;
  copy.lambda_ = lambda;
  return copy;
}

ThresholdRule ThresholdRule::for_stepsize(double alpha) const {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw std::invalid_argument(fmt::format("stepsize alpha must lie in (0, 1] (got {})", alpha));
  }
  if (alpha == 1.0) return *this;
  switch (kind_) {
  case RuleKind::soft: return soft(alpha * lambda_);
  // alpha * P_0(t; lambda) = P_0(t; sqrt(alpha) lambda)
  case RuleKind::hard: return hard(std::sqrt(alpha) * lambda_);
  case RuleKind::ridge: return ridge(alpha * eta_);
  case RuleKind::elastic_net: return elastic_net(alpha * lambda_, alpha * eta_);
  case RuleKind::berhu: return berhu(alpha * lambda_, alpha * eta_);
  case RuleKind::hard_ridge: {
    // l0 + l2 form: lambda^2 / (2 (1 + eta)) 1{t != 0} + eta t^2 / 2
    const double eta = alpha * eta_;
    return hard_ridge(lambda_ * std::sqrt(alpha * (1.0 + eta) / (1.0 + eta_)), eta);
  }
  case RuleKind::mcp: return mcp(alpha * lambda_, gamma_ / alpha);
  case RuleKind::lr: return lr(alpha * zeta_, r_);
  case RuleKind::scad:
    throw std::invalid_argument("scad has no closed-form stepsize threshold; use alpha = 1");
  }
  return *this;
}

std::optional<std::vector<QuadraticPiece>> ThresholdRule::penalty_pieces() const {
  const double lam = lambda_;
  switch (kind_) {
  case RuleKind::soft: return std::vector<QuadraticPiece>{{0.0, kInf, 0.0, lam, 0.0}};
  case RuleKind::hard:
    return std::vector<QuadraticPiece>{{0.0, lam, -0.5, lam, 0.0}, {lam, kInf, 0.0, 0.0, 0.5 * lam * lam}};
  case RuleKind::ridge: return std::vector<QuadraticPiece>{{0.0, kInf, 0.5 * eta_, 0.0, 0.0}};
  case RuleKind::elastic_net: return std::vector<QuadraticPiece>{{0.0, kInf, 0.5 * eta_, lam, 0.0}};
  case RuleKind::berhu: {
    if (eta_ == 0.0) return std::vector<QuadraticPiece>{{0.0, kInf, 0.0, lam, 0.0}};
    const double knee = lam / eta_;
    return std::vector<QuadraticPiece>{{0.0, knee, 0.0, lam, 0.0},
                                       {knee, kInf, 0.5 * eta_, 0.0, lam * lam / (2.0 * eta_)}};
  }
  case RuleKind::hard_ridge: {
    const double knee = lam / (1.0 + eta_);
    return std::vector<QuadraticPiece>{{0.0, knee, -0.5, lam, 0.0},
                                       {knee, kInf, 0.5 * eta_, 0.0, 0.5 * lam * lam / (1.0 + eta_)}};
  }
  case RuleKind::scad: {
    const double am1 = a_ - 1.0;
    return std::vector<QuadraticPiece>{
        {0.0, lam, 0.0, lam, 0.0},
        {lam, a_ * lam, -0.5 / am1, a_ * lam / am1, -0.5 * lam * lam / am1},
        {a_ * lam, kInf, 0.0, 0.0, 0.5 * (a_ + 1.0) * lam * lam}};
  }
  case RuleKind::mcp:
    return std::vector<QuadraticPiece>{{0.0, gamma_ * lam, -0.5 / gamma_, lam, 0.0},
                                       {gamma_ * lam, kInf, 0.0, 0.0, 0.5 * gamma_ * lam * lam}};
  case RuleKind::lr: return std::nullopt;
  }
  return std::nullopt;
}

std::string ThresholdRule::to_spec() const {
  const auto num = [](double v) { return format_number(v); };
  switch (kind_) {
  case RuleKind::soft:
  case RuleKind::hard: return fmt::format("{}(lambda={})", to_string(kind_), num(lambda_));
  case RuleKind::ridge: return fmt::format("ridge(eta={})", num(eta_));
  case RuleKind::elastic_net:
  case RuleKind::berhu:
  case RuleKind::hard_ridge:
    return fmt::format("{}(lambda={},eta={})", to_string(kind_), num(lambda_), num(eta_));
  case RuleKind::scad: return fmt::format("scad(lambda={},a={})", num(lambda_), num(a_));
  case RuleKind::mcp: return fmt::format("mcp(lambda={},gamma={})", num(lambda_), num(gamma_));
  case RuleKind::lr: return fmt::format("lr(zeta={},r={})", num(zeta_), num(r_));
  }
  return {};
}

double ThresholdRule::lr_jump_value() const {
  return std::pow(2.0 * zeta_ * (1.0 - r_), 1.0 / (2.0 - r_));
}

// Larger root of theta + zeta r theta^(r-1) = |t| on [(zeta r (1-r))^(1/(2-r)), |t|].
double ThresholdRule::apply_lr(double abs_t) const {
  const double zr = zeta_ * r_;
  const auto g = [&](double x) { return x + zr * std::pow(x, r_ - 1.0) - abs_t; };
  const auto dg = [&](double x) { return 1.0 - zr * (1.0 - r_) * std::pow(x, r_ - 2.0); };

  double lo = std::pow(zr * (1.0 - r_), 1.0 / (2.0 - r_));
  double hi = abs_t;
  assert(g(lo) <= 0.0 && g(hi) >= 0.0);
  double x = hi;
  for (int iter = 0; iter < 200; ++iter) {
    const double gx = g(x);
    if (gx == 0.0) return x;
    if (gx > 0.0) hi = x; else lo = x;
    const double slope = dg(x);
    double next = slope > 0.0 ? x - gx / slope : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const double step = std::abs(next - x);
    x = next;
    if (step <= 1e-12 || hi - lo <= 1e-12) return x;
  }
  assert(false && "lr root-finding did not converge");
  return x;
}

double ThresholdRule::operator()(double t) const {
  if (!std::isfinite(t)) {
    throw std::domain_error(fmt::format("thresholding input must be finite (got {})", t));
  }
  const double abs_t = std::abs(t);
  const double s = sign_of(t);
  const double lam = lambda_;
  switch (kind_) {
  case RuleKind::soft: return abs_t > lam ? s * (abs_t - lam) : 0.0;
  case RuleKind::hard: return abs_t > lam ? t : 0.0;
  case RuleKind::ridge: return t / (1.0 + eta_);
  case RuleKind::elastic_net: return abs_t > lam ? s * (abs_t - lam) / (1.0 + eta_) : 0.0;
  case RuleKind::berhu:
    if (abs_t <= lam) return 0.0;
    if (eta_ > 0.0 && abs_t > lam + lam / eta_) return t / (1.0 + eta_);
    return s * (abs_t - lam);
  case RuleKind::hard_ridge: return abs_t > lam ? t / (1.0 + eta_) : 0.0;
  case RuleKind::scad:
    if (abs_t <= lam) return 0.0;
    if (abs_t <= 2.0 * lam) return s * (abs_t - lam);
    if (abs_t <= a_ * lam) {
      // clamp guards rounding near the knee a*lambda, where the value meets |t|
      return s * std::clamp(((a_ - 1.0) * abs_t - a_ * lam) / (a_ - 2.0), 0.0, abs_t);
    }
    return t;
  case RuleKind::mcp:
    if (abs_t <= lam) return 0.0;
    if (abs_t < gamma_ * lam) {
      return s * std::clamp((abs_t - lam) / (1.0 - 1.0 / gamma_), 0.0, abs_t);
    }
    return t;
  case RuleKind::lr:
    if (zeta_ == 0.0) return t;
    if (abs_t <= effective_threshold()) return 0.0;
    return s * apply_lr(abs_t);
  }
  return 0.0;
}

double ThresholdRule::inverse(double u) const {
  if (!(u >= 0.0) || !std::isfinite(u)) {
    throw std::domain_error(fmt::format("inverse requires finite u >= 0 (got {})", u));
  }
  const double lam = lambda_;
  switch (kind_) {
  case RuleKind::soft: return u + lam;
  case RuleKind::hard: return std::max(u, lam);
  case RuleKind::ridge: return (1.0 + eta_) * u;
  case RuleKind::elastic_net: return lam + (1.0 + eta_) * u;
  case RuleKind::berhu: return std::max(u + lam, (1.0 + eta_) * u);
  case RuleKind::hard_ridge: return std::max(lam, (1.0 + eta_) * u);
  case RuleKind::scad:
    if (u <= lam) return u + lam;
    if (u <= a_ * lam) return ((a_ - 2.0) * u + a_ * lam) / (a_ - 1.0);
    return u;
  case RuleKind::mcp:
    if (u < gamma_ * lam) return lam + u * (1.0 - 1.0 / gamma_);
    return u;
  case RuleKind::lr:
    if (zeta_ == 0.0) return u;
    if (u < lr_jump_value()) return effective_threshold();
    return u + zeta_ * r_ * std::pow(u, r_ - 1.0);
  }
  return u;
}

double apply(const ThresholdRule& rule, double t) { return rule(t); }

Eigen::VectorXd apply_vec(const ThresholdRule& rule, const Eigen::Ref<const Eigen::VectorXd>& v,
                          std::optional<double> lambda_override) {
  const ThresholdRule effective = lambda_override ? rule.with_threshold(*lambda_override) : rule;
  Eigen::VectorXd out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = effective(v[i]);
  return out;
}

double inverse(const ThresholdRule& rule, double u) { return rule.inverse(u); }

double inverse_by_bisection(const ThresholdRule& rule, double u, double tol) {
  if (!(u >= 0.0) || !std::isfinite(u)) {
    throw std::domain_error(fmt::format("inverse requires finite u >= 0 (got {})", u));
  }
  double lo = 0.0;
  double hi = std::max(1.0, 2.0 * u);
  while (rule(hi) <= u) {
    lo = hi;
    hi *= 2.0;
  }
  for (int iter = 0; iter < 400 && hi - lo > tol; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (rule(mid) <= u) lo = mid; else hi = mid;
  }
  return lo;
}

double estimate_contraction(const ThresholdRule& rule, std::span<const double> grid) {
  if (grid.size() < 100) {
    throw std::domain_error(fmt::format("contraction grid needs at least 100 points (got {})", grid.size()));
  }
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!std::isfinite(grid[i]) || grid[i] <= 0.0 || (i > 0 && grid[i] <= grid[i - 1])) {
      throw std::domain_error("contraction grid must be finite, positive and strictly increasing");
    }
  }
  double min_slope = kInf;
  double prev = rule.inverse(grid[0]);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double cur = rule.inverse(grid[i]);
    min_slope = std::min(min_slope, (cur - prev) / (grid[i] - grid[i - 1]));
    prev = cur;
  }
  return 1.0 - min_slope;
}

std::vector<double> contraction_grid(const ThresholdRule& rule, std::size_t points) {
  double scale = rule.effective_threshold();
  if (!(scale > 0.0)) scale = rule.lambda() > 0.0 ? rule.lambda() : 1.0;
  std::vector<double> grid(points);
  for (std::size_t i = 0; i < points; ++i) {
    grid[i] = 10.0 * scale * static_cast<double>(i + 1) / static_cast<double>(points);
  }
  return grid;
}

AxiomReport verify_axioms(const ThresholdFamily& theta, std::span<const double> t_grid,
                          std::span<const double> lambda_grid) {
  AxiomReport report;
  const auto record = [](AxiomCheck& check, double violation, bool ok) {
    if (!std::isfinite(violation)) violation = kInf;
    check.worst_violation = std::max(check.worst_violation, violation);
    if (!ok) check.passed = false;
  };

  std::vector<double> sorted(t_grid.begin(), t_grid.end());
  std::sort(sorted.begin(), sorted.end());

  for (double lam : lambda_grid) {
    std::vector<double> values(sorted.size());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      const double t = sorted[i];
      const double v = theta(t, lam);
      values[i] = v;

      const double odd = std::abs(v + theta(-t, lam));
      record(report.oddness, odd, odd <= 1e-12);

      if (t >= 0.0) {
        const double below = -v;
        const double above = v - t;
        const double worst = std::max({below, above, 0.0});
        record(report.shrinkage, std::isnan(v) ? kInf : worst, !std::isnan(v) && worst == 0.0);
      }
    }
    for (std::size_t i = 1; i < values.size(); ++i) {
      const double drop = values[i - 1] - values[i];
      const bool ok = !std::isnan(drop) && drop <= 0.0;
      record(report.monotonicity, ok ? 0.0 : (std::isnan(drop) ? kInf : drop), ok);
    }
    const double far = theta(lam + 1e6, lam);
    const bool unbounded = far >= 1e5;
    record(report.unboundedness, unbounded ? 0.0 : (std::isnan(far) ? kInf : 1e5 - far), unbounded);
  }
  return report;
}

AxiomReport verify_axioms(const ThresholdRule& rule, std::span<const double> t_grid,
                          std::span<const double> lambda_grid) {
  return verify_axioms(
      [&rule](double t, double lam) { return rule.with_threshold(lam)(t); }, t_grid, lambda_grid);
}

std::vector<ThresholdRule> standard_rule_catalog(double lambda) {
  return {
      ThresholdRule::soft(lambda),
      ThresholdRule::hard(lambda),
      ThresholdRule::ridge(0.5),
      ThresholdRule::elastic_net(lambda, 0.5),
      ThresholdRule::berhu(lambda, 0.5),
      ThresholdRule::hard_ridge(lambda, 0.5),
      ThresholdRule::scad(lambda, 3.7),
      ThresholdRule::mcp(lambda, 2.0),
      ThresholdRule::lr_with_threshold(lambda, 0.5),
  };
}

} // namespace tisp
