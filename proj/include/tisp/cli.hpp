#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace tisp {

/// Runs the command line. stdout gets data only, stderr diagnostics.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

struct SuiteCheck {
  std::string name;
  bool passed = true;
  /// Smallest slack (or largest error, per check) observed.
  double worst = 0.0;
  /// A reported violation that does not fail the suite (regularity probes).
  bool finding = false;
  std::string detail;
};

/// axioms, penalty, descent, theorem1, lemma5, lemma7, regularity or all.
/// Throws std::invalid_argument for an unknown suite.
std::vector<SuiteCheck> run_verify_suite(std::string_view suite, std::uint64_t seed);
const std::vector<std::string>& verify_suite_names();

} // namespace tisp
