#include "srlvm_cli/table_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <srlvm/error.hpp>

namespace srlvm::cli {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    cells.push_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

bool parse_number(std::string_view cell, double& out) {
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), out);
  return ec == std::errc() && ptr == cell.data() + cell.size() && !cell.empty();
}

}  // namespace

std::string format_number(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw Error("number formatting failed");
  return std::string(buf, ptr);
}

void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& M,
                      const std::vector<std::string>& header) {
  if (!header.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
    out << '\n';
  }
  std::string line;
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    line.clear();
    for (Eigen::Index c = 0; c < M.cols(); ++c) {
      if (c) line += ',';
      line += format_number(M(r, c));
    }
    line += '\n';
    out << line;
  }
}

std::vector<std::string> numbered_header(std::string_view prefix, Eigen::Index count) {
  std::vector<std::string> names;
  for (Eigen::Index i = 1; i <= count; ++i) names.push_back(std::string(prefix) + std::to_string(i));
  return names;
}

Eigen::MatrixXd parse_matrix_csv(std::string_view text, std::vector<std::string>* header) {
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool first = true;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::string_view line = trim(text.substr(pos, nl == text.npos ? text.npos : nl - pos));
    pos = nl == text.npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split(line);
    std::vector<double> values(cells.size());
    bool numeric = true;
    for (std::size_t i = 0; i < cells.size() && numeric; ++i) numeric = parse_number(cells[i], values[i]);
    if (!numeric) {
      if (first) {
        if (header) {
          header->clear();
          for (auto c : cells) header->emplace_back(c);
        }
        first = false;
        continue;
      }
      throw IoError("line " + std::to_string(line_no) + ": not a number row");
    }
    first = false;
    for (double v : values) {
      if (!std::isfinite(v)) throw IoError("line " + std::to_string(line_no) + ": non-finite value");
    }
    if (!rows.empty() && values.size() != rows.front().size()) {
      throw IoError("line " + std::to_string(line_no) + ": expected " +
                    std::to_string(rows.front().size()) + " columns, found " +
                    std::to_string(values.size()));
    }
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw IoError("empty input");
  Eigen::MatrixXd M(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      M(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  return M;
}

Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path, std::vector<std::string>* header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_matrix_csv(buf.str(), header);
  } catch (const IoError& ex) {
    throw IoError(path.string() + ": " + ex.what());
  }
}

std::string render_svg(const std::vector<Series>& series, std::string_view x_label,
                       std::string_view y_label) {
  constexpr double width = 720.0;
  constexpr double panel = 180.0;
  constexpr double left = 70.0;
  constexpr double right = 20.0;
  constexpr double top = 20.0;
  constexpr double bottom = 40.0;
  const double height = static_cast<double>(series.size()) * panel;

  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" viewBox=\"0 0 " << width << ' ' << height << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  for (std::size_t i = 0; i < series.size(); ++i) {
    const Series& s = series[i];
    const double y0 = static_cast<double>(i) * panel;
    const double pw = width - left - right;
    const double ph = panel - top - bottom;
    const double xmin = s.x.size() ? s.x.minCoeff() : 0.0;
    const double xmax = s.x.size() ? s.x.maxCoeff() : 1.0;
    const double ymin = s.y.size() ? std::min(0.0, s.y.minCoeff()) : 0.0;
    const double ymax = s.y.size() ? s.y.maxCoeff() : 1.0;
    const double xs = xmax > xmin ? pw / (xmax - xmin) : 0.0;
    const double ys = ymax > ymin ? ph / (ymax - ymin) : 0.0;

    os << "<g transform=\"translate(" << left << ',' << y0 + top << ")\">\n";
    os << "<rect width=\"" << pw << "\" height=\"" << ph << "\" fill=\"none\" stroke=\"#999\"/>\n";
    os << "<text x=\"4\" y=\"12\">" << s.label << "</text>\n";
    os << "<text x=\"" << pw / 2 << "\" y=\"" << ph + 28 << "\" text-anchor=\"middle\">" << x_label
       << "</text>\n";
    os << "<text x=\"-8\" y=\"" << ph << "\" text-anchor=\"end\">" << ymin << "</text>\n";
    os << "<text x=\"-8\" y=\"10\" text-anchor=\"end\">" << ymax << "</text>\n";
    os << "<text x=\"0\" y=\"" << ph + 14 << "\">" << xmin << "</text>\n";
    os << "<text x=\"" << pw << "\" y=\"" << ph + 14 << "\" text-anchor=\"end\">" << xmax << "</text>\n";
    os << "<text transform=\"rotate(-90)\" x=\"" << -ph / 2 << "\" y=\"-50\" text-anchor=\"middle\">"
       << y_label << "</text>\n";
    os << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1\" points=\"";
    for (Eigen::Index k = 0; k < s.x.size(); ++k) {
      os << (k ? " " : "") << (s.x(k) - xmin) * xs << ',' << ph - (s.y(k) - ymin) * ys;
    }
    os << "\"/>\n</g>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace srlvm::cli
