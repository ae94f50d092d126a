#include "srlvm/signal_io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "srlvm/error.hpp"

namespace srlvm {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

void require_finite(std::span<const double> samples) {
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!std::isfinite(samples[i])) {
      throw IoError("non-finite sample at index " + std::to_string(i));
    }
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failure on '" + path.string() + "'");
  return bytes;
}

template <typename Float>
std::vector<double> decode_little_endian(const std::string& bytes) {
  static_assert(sizeof(Float) == 4 || sizeof(Float) == 8);
  using Bits = std::conditional_t<sizeof(Float) == 4, std::uint32_t, std::uint64_t>;
  if (bytes.size() % sizeof(Float) != 0) {
    throw IoError("binary input size " + std::to_string(bytes.size()) +
                  " is not a multiple of " + std::to_string(sizeof(Float)) + " bytes");
  }
  std::vector<double> out(bytes.size() / sizeof(Float));
  for (std::size_t i = 0; i < out.size(); ++i) {
    Bits raw = 0;
    for (std::size_t b = 0; b < sizeof(Float); ++b) {
      raw |= static_cast<Bits>(static_cast<unsigned char>(bytes[i * sizeof(Float) + b])) << (8 * b);
    }
    out[i] = static_cast<double>(std::bit_cast<Float>(raw));
  }
  return out;
}

}  // namespace

Signal::Signal(std::vector<double> samples, std::optional<double> sample_rate_hz)
    : samples_(std::move(samples)), sample_rate_hz_(sample_rate_hz) {
  if (samples_.empty()) throw InvalidArgument("empty input");
  require_finite(samples_);
  if (sample_rate_hz_ && !(*sample_rate_hz_ > 0.0 && std::isfinite(*sample_rate_hz_))) {
    throw InvalidArgument("sample rate must be a positive finite number");
  }
}

SignalFormat parse_signal_format(std::string_view name) {
  if (name == "csv") return SignalFormat::csv;
  if (name == "f32" || name == "f32-binary") return SignalFormat::f32;
  if (name == "f64" || name == "f64-binary") return SignalFormat::f64;
  throw InvalidArgument("unknown signal format '" + std::string(name) + "'");
}

std::string_view to_string(SignalFormat format) {
  switch (format) {
    case SignalFormat::csv: return "csv";
    case SignalFormat::f32: return "f32";
    case SignalFormat::f64: return "f64";
  }
  return "?";
}

std::vector<double> parse_csv_samples(std::string_view text) {
  std::vector<double> out;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);

    line = trim(line);
    if (line.empty()) continue;
    while (!line.empty()) {
      const auto comma = line.find(',');
      std::string_view field = trim(line.substr(0, comma));
      line = comma == std::string_view::npos ? std::string_view{} : line.substr(comma + 1);
      if (field.empty()) {
        // tolerate a single trailing comma
        if (line.empty() && comma != std::string_view::npos) break;
        throw IoError("parse failure on line " + std::to_string(line_no) + ": empty field");
      }
      if (field.front() == '+') field.remove_prefix(1);
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
      if (ec != std::errc{} || ptr != field.data() + field.size()) {
        throw IoError("parse failure on line " + std::to_string(line_no) + ": '" +
                      std::string(field) + "' is not a number");
      }
      if (!std::isfinite(v)) {
        throw IoError("non-finite sample at index " + std::to_string(out.size()) +
                      " (line " + std::to_string(line_no) + ")");
      }
      out.push_back(v);
    }
  }
  if (out.empty()) throw IoError("empty input");
  return out;
}

Signal load_signal(const std::filesystem::path& path, SignalFormat format,
                   std::optional<double> sample_rate_hz) {
  const std::string bytes = read_file(path);
  std::vector<double> samples;
  switch (format) {
    case SignalFormat::csv: samples = parse_csv_samples(bytes); break;
    case SignalFormat::f32: samples = decode_little_endian<float>(bytes); break;
    case SignalFormat::f64: samples = decode_little_endian<double>(bytes); break;
  }
  if (samples.empty()) throw IoError("empty input");
  require_finite(samples);
  return Signal(std::move(samples), sample_rate_hz);
}

void HankelConfig::validate(std::size_t signal_length) const {
  if (window_length < 1) throw InvalidArgument("window length must be >= 1");
  if (shift < 1) throw InvalidArgument("shift must be >= 1");
  if (window_length > signal_length) {
    throw InvalidArgument("window length " + std::to_string(window_length) +
                          " exceeds signal length " + std::to_string(signal_length));
  }
}

std::size_t HankelConfig::row_count(std::size_t signal_length) const {
  validate(signal_length);
  return (signal_length - window_length) / shift + 1;
}

DataMatrix hankelise(const Signal& signal, const HankelConfig& config) {
  const std::size_t rows = config.row_count(signal.size());
  const auto cols = static_cast<Eigen::Index>(config.window_length);
  const auto x = signal.samples();

  DataMatrix out;
  out.values.resize(static_cast<Eigen::Index>(rows), cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t start = r * config.shift;
    for (Eigen::Index c = 0; c < cols; ++c) {
      out.values(static_cast<Eigen::Index>(r), c) = x[start + static_cast<std::size_t>(c)];
    }
  }
  out.mean = Eigen::VectorXd::Zero(cols);
  return out;
}

DataMatrix center(const DataMatrix& X, bool scale) {
  const Eigen::Index n = X.rows();
  if (n < 1) throw InvalidArgument("cannot center an empty matrix");
  if (scale && n < 2) throw InvalidArgument("scaling needs at least two rows");

  DataMatrix out;
  const Eigen::RowVectorXd mu = X.values.colwise().mean();
  out.values = X.values.rowwise() - mu;

  // mean_total = mean_prev + scale_prev * mu, so that
  // (x - mean_total) / scale_total reproduces out.values.
  const Eigen::VectorXd prev_scale =
      X.scale ? *X.scale : Eigen::VectorXd::Ones(X.cols());
  out.mean = X.mean + prev_scale.cwiseProduct(mu.transpose());
  out.zero_variance_columns = X.zero_variance_columns;

  if (scale) {
    Eigen::VectorXd sd(X.cols());
    for (Eigen::Index c = 0; c < X.cols(); ++c) {
      const double var = out.values.col(c).squaredNorm() / static_cast<double>(n - 1);
      const double magnitude = std::max(mu(c) * mu(c), 1.0);
      if (var <= 1e-28 * magnitude) {
        sd(c) = 1.0;
        if (std::find(out.zero_variance_columns.begin(), out.zero_variance_columns.end(),
                      static_cast<std::size_t>(c)) == out.zero_variance_columns.end()) {
          out.zero_variance_columns.push_back(static_cast<std::size_t>(c));
        }
      } else {
        sd(c) = std::sqrt(var);
        out.values.col(c) /= sd(c);
      }
    }
    out.scale = prev_scale.cwiseProduct(sd);
  } else {
    out.scale = X.scale;
  }
  return out;
}

Eigen::MatrixXd whitening_matrix(const Eigen::MatrixXd& centered, double floor) {
  if (centered.rows() < 2) throw InvalidArgument("whitening needs at least two rows");
  const Eigen::MatrixXd cov =
      (centered.transpose() * centered) / static_cast<double>(centered.rows());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) throw NumericalError("covariance eigendecomposition failed");
  const Eigen::VectorXd& lambda = eig.eigenvalues();
  const double cutoff = std::max(lambda.maxCoeff() * floor, std::numeric_limits<double>::min());
  const Eigen::VectorXd inv_sqrt =
      lambda.unaryExpr([cutoff](double l) { return 1.0 / std::sqrt(std::max(l, cutoff)); });
  return eig.eigenvectors() * inv_sqrt.asDiagonal() * eig.eigenvectors().transpose();
}

std::vector<double> diagonal_average(const Eigen::MatrixXd& X, std::size_t shift) {
  if (X.rows() < 1 || X.cols() < 1) throw InvalidArgument("cannot collapse an empty matrix");
  if (shift < 1) throw InvalidArgument("shift must be >= 1");
  const auto window = static_cast<std::size_t>(X.cols());
  if (shift > window) {
    throw InvalidArgument("diagonal averaging needs shift <= window length");
  }
  const auto rows = static_cast<std::size_t>(X.rows());
  const std::size_t length = (rows - 1) * shift + window;
  std::vector<double> sum(length, 0.0);
  std::vector<std::size_t> count(length, 0);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < window; ++c) {
      sum[r * shift + c] += X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
      ++count[r * shift + c];
    }
  }
  for (std::size_t i = 0; i < length; ++i) sum[i] /= static_cast<double>(count[i]);
  return sum;
}

}  // namespace srlvm
