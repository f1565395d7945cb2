#pragma once

#include "tisp/simulate.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace tisp {

/// Experiment config does not match the schema. what() lists every offending field.
class SchemaError : public std::invalid_argument {
public:
  explicit SchemaError(std::vector<std::string> issues);
  const std::vector<std::string>& issues() const { return issues_; }

private:
  std::vector<std::string> issues_;
};

enum class ExperimentKind { decay, rate };

/// JSON object whose keys are the ExperimentSpec field names. "lambda_policy" is
/// {"theory": A} or {"explicit": lambda}; "schedule" uses the LambdaSchedule text form.
ExperimentSpec parse_experiment_spec(const nlohmann::json& doc, ExperimentKind kind);
ExperimentSpec load_experiment_spec(const std::filesystem::path& path, ExperimentKind kind);

/// seed,rule,n,p,J_star,sigma,lambda,rho,iters,pred_err,est_err,weighted_err,kappa_hat,plateau,plateau_ratio
void write_results_csv(std::ostream& out, const std::vector<RunResult>& runs);

nlohmann::json decay_summary(const std::vector<RunResult>& runs);
nlohmann::json rate_summary(const RateReport& report);

} // namespace tisp
