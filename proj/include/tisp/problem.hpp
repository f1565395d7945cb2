#pragma once

#include <Eigen/Dense>

#include <optional>

namespace tisp {

/// Linear model data y = X beta* + eps. Immutable once built; share by const reference.
class Problem {
public:
  /// Throws std::invalid_argument on empty or non-finite data and on dimension mismatch.
  Problem(Eigen::MatrixXd X, Eigen::VectorXd y, std::optional<Eigen::VectorXd> beta_star = std::nullopt,
          std::optional<double> sigma = std::nullopt);

  const Eigen::MatrixXd& X() const { return X_; }
  const Eigen::VectorXd& y() const { return y_; }
  const std::optional<Eigen::VectorXd>& beta_star() const { return beta_star_; }
  const std::optional<double>& sigma() const { return sigma_; }
  Eigen::Index n() const { return X_.rows(); }
  Eigen::Index p() const { return X_.cols(); }

private:
  Eigen::MatrixXd X_;
  Eigen::VectorXd y_;
  std::optional<Eigen::VectorXd> beta_star_;
  std::optional<double> sigma_;
};

} // namespace tisp
