#include "tisp/penalty.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include <fmt/format.h>

namespace tisp {

std::string_view to_string(Augmentation aug) {
  switch (aug) {
  case Augmentation::none: return "none";
  case Augmentation::capped_l1: return "capped-l1";
  case Augmentation::l0: return "l0";
  case Augmentation::l0_l2: return "l0+l2";
  }
  return "unknown";
}

Augmentation augmentation_from_string(std::string_view name) {
  for (auto aug : {Augmentation::none, Augmentation::capped_l1, Augmentation::l0, Augmentation::l0_l2}) {
    if (to_string(aug) == name) return aug;
  }
  throw std::invalid_argument(fmt::format("unknown augmentation '{}'", name));
}

PenaltySpec::PenaltySpec(ThresholdRule rule, Augmentation augmentation)
    : rule_(rule), augmentation_(augmentation) {
  const RuleKind kind = rule_.kind();
  const bool ok = augmentation_ == Augmentation::none ||
                  ((augmentation_ == Augmentation::capped_l1 || augmentation_ == Augmentation::l0) &&
                   kind == RuleKind::hard) ||
                  (augmentation_ == Augmentation::l0_l2 && kind == RuleKind::hard_ridge);
  if (!ok) {
    throw std::invalid_argument(fmt::format("augmentation '{}' is not defined for rule '{}'",
                                            to_string(augmentation_), to_string(kind)));
  }
}

namespace {

double eval_pieces(const std::vector<QuadraticPiece>& pieces, double x) {
  for (const auto& piece : pieces) {
    if (x < piece.hi) return (piece.A * x + piece.B) * x + piece.C;
  }
  const auto& last = pieces.back();
  return (last.A * x + last.B) * x + last.C;
}

double simpson(double a, double b, double fa, double fm, double fb) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

template <class F>
double adaptive_simpson(F&& f, double a, double b, double fa, double fm, double fb, double whole, double tol,
                        int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = simpson(a, m, fa, flm, fm);
  const double right = simpson(m, b, fm, frm, fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

} // namespace

double penalty_theta_quadrature(const ThresholdRule& rule, double t, double abs_tol) {
  if (!std::isfinite(t)) throw std::domain_error("penalty argument must be finite");
  const double upper = std::abs(t);
  if (upper == 0.0) return 0.0;

  std::vector<double> cuts{0.0};
  for (double k : rule.inverse_kinks()) {
    if (k < upper) cuts.push_back(k);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.push_back(upper);

  const auto integrand = [&rule](double u) { return rule.inverse(u) - u; };
  const double segment_tol = abs_tol / static_cast<double>(cuts.size() - 1);
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double a = cuts[i];
    const double b = cuts[i + 1];
    if (b <= a) continue;
    // one-sided limits at the segment ends keep jumps in the integrand off the nodes
    const double width = b - a;
    const double fa = integrand(a + 1e-15 * width);
    const double fb = integrand(b - 1e-15 * width);
    const double fm = integrand(0.5 * (a + b));
    total += adaptive_simpson(integrand, a, b, fa, fm, fb, simpson(a, b, fa, fm, fb), segment_tol, 50);
  }
  return total;
}

double penalty_theta(const ThresholdRule& rule, double t) {
  if (!std::isfinite(t)) throw std::domain_error("penalty argument must be finite");
  if (const auto pieces = rule.penalty_pieces()) return eval_pieces(*pieces, std::abs(t));
  return penalty_theta_quadrature(rule, t);
}

double augmentation_term(const PenaltySpec& spec, double t) {
  const ThresholdRule& rule = spec.rule();
  const double lam = rule.lambda();
  switch (spec.augmentation()) {
  case Augmentation::none: return 0.0;
  case Augmentation::capped_l1: return std::min(lam * std::abs(t), 0.5 * lam * lam) - penalty_hard(t, lam);
  case Augmentation::l0: return penalty_l0(t, lam) - penalty_hard(t, lam);
  case Augmentation::l0_l2: {
    const double eta = rule.eta();
    const double p = (t != 0.0 ? 0.5 * lam * lam / (1.0 + eta) : 0.0) + 0.5 * eta * t * t;
    return std::max(0.0, p - penalty_theta(rule, t));
  }
  }
  return 0.0;
}

double penalty_theta(const PenaltySpec& spec, double t) {
  return penalty_theta(spec.rule(), t) + augmentation_term(spec, t);
}

double penalty_hard(double t, double lambda) {
  const double a = std::abs(t);
  return a < lambda ? -0.5 * t * t + lambda * a : 0.5 * lambda * lambda;
}

double penalty_l0(double t, double lambda) { return t != 0.0 ? 0.5 * lambda * lambda : 0.0; }

double penalty_l1(double t, double lambda) { return lambda * std::abs(t); }

double penalty_hard(const Eigen::Ref<const Eigen::VectorXd>& v, double lambda) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) total += penalty_hard(v[i], lambda);
  return total;
}

double penalty_sum(const PenaltySpec& spec, const Eigen::Ref<const Eigen::VectorXd>& v, double scale) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (v[i] != 0.0) total += penalty_theta(spec, scale * std::abs(v[i]));
  }
  return total;
}

double energy(const PenaltySpec& spec, const Problem& problem, const Eigen::Ref<const Eigen::VectorXd>& beta,
              double rho) {
  if (beta.size() != problem.p()) {
    throw std::invalid_argument(
        fmt::format("beta has {} entries but the design has {} columns", beta.size(), problem.p()));
  }
  if (!(rho > 0.0)) throw std::invalid_argument("rho must be > 0");
  return 0.5 * (problem.X() * beta - problem.y()).squaredNorm() + penalty_sum(spec, beta, rho);
}

} // namespace tisp
