#pragma once

// Fitted linear latent variable model: preprocessing, encoding z = W x,
// reconstruction x = A z, and JSON persistence.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "srlvm/error.hpp"
#include "srlvm/objectives.hpp"
#include "srlvm/optimiser.hpp"
#include "srlvm/signal_io.hpp"
#include "srlvm/spectral_reg.hpp"

namespace srlvm {

inline constexpr int kModelSchemaVersion = 1;

struct Preprocessing {
  bool scale = false;
  bool whiten = false;
};

/// Result of power-spectrum analysis of the latent source signals. The
/// frequency axis is present only when the signal carried a sample rate.
struct SourceSpectra {
  std::vector<Spectrum> power;
  std::optional<Eigen::VectorXd> frequency_hz;  // one entry per bin k <= L_H / 2
};

class FittedModel {
 public:
  /// hankelise -> center (-> scale) (-> whiten) -> fit_all, then A = pinv(W).
  /// Throws FitError if any component fails.
  static FittedModel fit(const Signal& signal, const HankelConfig& hankel,
                         const ObjectivePtr& objective, std::size_t d, const OptimConfig& optim,
                         Preprocessing preprocessing = {});

  /// Z = ((X - mean) / scale) K W^T, one row per observation.
  Eigen::MatrixXd transform(const Eigen::MatrixXd& X) const;
  Eigen::MatrixXd transform(const Signal& signal) const;

  /// Undoes transform up to the discarded directions: Z A^T K^-1 * scale + mean.
  Eigen::MatrixXd inverse_transform(const Eigen::MatrixXd& Z) const;

  SourceSpectra source_spectra(const Signal& signal) const;

  void save(const std::filesystem::path& path) const;
  static FittedModel load(const std::filesystem::path& path);

  std::string to_json() const;
  static FittedModel from_json(const std::string& text);

  const Eigen::MatrixXd& W() const noexcept { return W_; }
  const Eigen::MatrixXd& A() const noexcept { return A_; }
  const Eigen::VectorXd& mean() const noexcept { return mean_; }
  const std::optional<Eigen::VectorXd>& scale() const noexcept { return scale_; }
  const std::optional<Eigen::MatrixXd>& whitening() const noexcept { return whitening_; }
  const HankelConfig& hankel() const noexcept { return hankel_; }
  const std::vector<Spectrum>& spectra() const noexcept { return spectra_; }
  const FitDiagnostics& diagnostics() const noexcept { return diagnostics_; }
  const OptimConfig& optim_config() const noexcept { return optim_; }
  const std::string& objective_name() const noexcept { return objective_name_; }
  std::size_t components() const noexcept { return static_cast<std::size_t>(W_.rows()); }
  std::size_t window_length() const noexcept { return hankel_.window_length; }

  /// Assembles a model from parts, recomputing A and the spectra. Used by
  /// tests and by fit.
  static FittedModel from_parts(Eigen::MatrixXd W, HankelConfig hankel, Eigen::VectorXd mean,
                                std::optional<Eigen::VectorXd> scale = std::nullopt,
                                std::optional<Eigen::MatrixXd> whitening = std::nullopt);

 private:
  Eigen::MatrixXd preprocess(const Eigen::MatrixXd& X) const;

  Eigen::MatrixXd W_;
  Eigen::MatrixXd A_;
  Eigen::VectorXd mean_;
  std::optional<Eigen::VectorXd> scale_;
  std::optional<Eigen::MatrixXd> whitening_;
  Eigen::MatrixXd dewhitening_;  // inverse of whitening_, derived
  HankelConfig hankel_;
  std::vector<Spectrum> spectra_;
  FitDiagnostics diagnostics_;
  OptimConfig optim_;
  std::string objective_name_;
};

/// Moore-Penrose pseudoinverse via SVD.
Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& M);

/// Thrown by FittedModel::fit when a component fails; carries the rows that
/// were solved before the failure.
class FitError : public Error {
 public:
  FitError(const std::string& what, FitResult partial)
      : Error(what), partial_(std::move(partial)) {}
  const FitResult& partial() const noexcept { return partial_; }

 private:
  FitResult partial_;
};

}  // namespace srlvm
