#pragma once

// Single-channel signal ingestion and Hankel embedding.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace srlvm {

/// A real-valued time series. Construction validates that it is non-empty,
/// finite, and that the sample rate (if any) is positive.
class Signal {
 public:
  explicit Signal(std::vector<double> samples,
                  std::optional<double> sample_rate_hz = std::nullopt);

  std::size_t size() const noexcept { return samples_.size(); }
  std::span<const double> samples() const noexcept { return samples_; }
  std::optional<double> sample_rate_hz() const noexcept { return sample_rate_hz_; }

 private:
  std::vector<double> samples_;
  std::optional<double> sample_rate_hz_;
};

enum class SignalFormat { csv, f32, f64 };

SignalFormat parse_signal_format(std::string_view name);
std::string_view to_string(SignalFormat format);

/// Reads a signal from disk. CSV takes one value per line or a single
/// comma-separated row; binary formats are headerless little-endian.
Signal load_signal(const std::filesystem::path& path, SignalFormat format,
                   std::optional<double> sample_rate_hz = std::nullopt);

/// Parses CSV text directly (used by load_signal and by tests).
std::vector<double> parse_csv_samples(std::string_view text);

struct HankelConfig {
  std::size_t window_length = 1;
  std::size_t shift = 1;

  /// Throws InvalidArgument unless 1 <= window_length <= signal_length and
  /// shift >= 1.
  void validate(std::size_t signal_length) const;

  /// floor((L - L_w) / L_sft) + 1
  std::size_t row_count(std::size_t signal_length) const;
};

/// Observation matrix with the preprocessing that produced it. `mean` and
/// `scale` are what transform/inverse_transform replay later.
struct DataMatrix {
  Eigen::MatrixXd values;
  Eigen::VectorXd mean;
  std::optional<Eigen::VectorXd> scale;
  /// Columns left unscaled because their sample variance was zero.
  std::vector<std::size_t> zero_variance_columns;

  Eigen::Index rows() const noexcept { return values.rows(); }
  Eigen::Index cols() const noexcept { return values.cols(); }
};

/// Row r holds samples [r*shift, r*shift + window) (0-based). The result is
/// uncentered: mean is a zero vector and scale is empty.
DataMatrix hankelise(const Signal& signal, const HankelConfig& config);

/// Subtracts per-column means and optionally divides by per-column sample
/// standard deviations. Zero-variance columns are flagged, not scaled.
/// The stored mean/scale compose with any previously stored ones so that
/// the recorded preprocessing always maps the original data to `values`.
DataMatrix center(const DataMatrix& X, bool scale);

/// Symmetric (ZCA) whitening matrix K of centered data: X*K has identity
/// sample covariance. Eigenvalues below `floor` times the largest are clamped.
Eigen::MatrixXd whitening_matrix(const Eigen::MatrixXd& centered, double floor = 1e-12);

/// Averages overlapping entries of a Hankel-layout matrix back into a
/// signal of length (rows-1)*shift + cols. Requires shift <= cols so that
/// every output sample is covered.
std::vector<double> diagonal_average(const Eigen::MatrixXd& X, std::size_t shift);

}  // namespace srlvm
