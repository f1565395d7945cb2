#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>

namespace tisp {

/// Malformed or unreadable CSV input. what() carries the path and 1-based line number.
class CsvError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Shortest round-trip decimal form; integral values keep a trailing ".0".
std::string format_number(double value);

/// Headerless, comma separated, row-major numeric matrix.
Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path);
Eigen::MatrixXd parse_matrix_csv(std::istream& in, const std::string& source = "<input>");

/// A vector stored either as one column or as one row.
Eigen::VectorXd read_vector_csv(const std::filesystem::path& path);

void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& m);
void write_vector_csv(std::ostream& out, const Eigen::VectorXd& v);

} // namespace tisp
