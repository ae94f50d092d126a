#pragma once

// Locale-independent CSV and minimal SVG output for the command-line tool.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace srlvm::cli {

/// Shortest decimal that reads back to the same double; dot separator
/// regardless of the global locale.
std::string format_number(double v);

/// Writes M with an optional header row; LF line endings.
void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& M,
                      const std::vector<std::string>& header = {});

/// Column names prefix1..prefixN.
std::vector<std::string> numbered_header(std::string_view prefix, Eigen::Index count);

/// Reads a rectangular numeric CSV. A first row that does not parse as
/// numbers is taken as a header and returned through `header`.
Eigen::MatrixXd parse_matrix_csv(std::string_view text,
                                 std::vector<std::string>* header = nullptr);
Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path,
                                std::vector<std::string>* header = nullptr);

struct Series {
  std::string label;
  Eigen::VectorXd x;
  Eigen::VectorXd y;
};

/// One stacked line chart per series, drawn as polylines.
std::string render_svg(const std::vector<Series>& series, std::string_view x_label,
                       std::string_view y_label);

}  // namespace srlvm::cli
