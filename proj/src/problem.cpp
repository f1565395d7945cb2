#include "tisp/problem.hpp"

#include <stdexcept>

#include <fmt/format.h>

namespace tisp {

Problem::Problem(Eigen::MatrixXd X, Eigen::VectorXd y, std::optional<Eigen::VectorXd> beta_star,
                 std::optional<double> sigma)
    : X_(std::move(X)), y_(std::move(y)), beta_star_(std::move(beta_star)), sigma_(sigma) {
  if (X_.rows() < 1 || X_.cols() < 1) throw std::invalid_argument("design matrix must be at least 1x1");
  if (y_.size() != X_.rows()) {
    throw std::invalid_argument(
        fmt::format("response has {} entries but the design has {} rows", y_.size(), X_.rows()));
  }
  if (!X_.allFinite() || !y_.allFinite()) throw std::invalid_argument("design and response must be finite");
  if (beta_star_) {
    if (beta_star_->size() != X_.cols()) {
      throw std::invalid_argument(
          fmt::format("beta* has {} entries but the design has {} columns", beta_star_->size(), X_.cols()));
    }
    if (!beta_star_->allFinite()) throw std::invalid_argument("beta* must be finite");
  }
  if (sigma_ && !(*sigma_ >= 0.0)) throw std::invalid_argument("sigma must be >= 0");
}

} // namespace tisp
