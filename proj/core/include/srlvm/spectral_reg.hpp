#pragma once

// Spectral regulariser: penalises overlap between the power spectrum of the
// current direction and the spectra of directions already extracted.
//
//   b(w)_k  = |sum_n w_n exp(-2 pi i k n / N)|^2        (unnormalised DFT)
//   L_sr(w) = alpha * sum_j b(w)^T b(w_j)
//
// Since b(w)_k = w^T M_k w with M_k = Re(f_k f_k^H), the penalty is the
// quadratic form alpha * w^T B w with B = sum_k c_k M_k, c = sum_j b(w_j).
// B is a symmetric circulant matrix: B(m, n) = sum_k c_k cos(2 pi k (m - n) / N).

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace srlvm {

/// Full-length (two-sided) power spectrum, one bin per DFT frequency.
struct Spectrum {
  Eigen::VectorXd bins;

  Eigen::Index size() const noexcept { return bins.size(); }
};

Spectrum power_spectrum(const Eigen::VectorXd& w);

/// Normalised overlap b(u)^T b(v) / (|b(u)| |b(v)|); 0 when either is zero.
double spectral_overlap(const Spectrum& u, const Spectrum& v);

class SpectralState {
 public:
  explicit SpectralState(Eigen::Index length, double alpha = 0.0);

  Eigen::Index length() const noexcept { return weights_.size(); }
  double alpha() const noexcept { return alpha_; }
  const std::vector<Spectrum>& priors() const noexcept { return priors_; }
  bool empty() const noexcept { return priors_.empty(); }

  /// c = sum_j b(w_j); the per-bin weight of the quadratic form.
  const Eigen::VectorXd& weights() const noexcept { return weights_; }

  void set_alpha(double alpha);
  void append(Spectrum spectrum);

 private:
  std::vector<Spectrum> priors_;
  Eigen::VectorXd weights_;
  double alpha_;
};

double penalty(const Eigen::VectorXd& w, const SpectralState& state);

/// 2 alpha B w, applied matrix-free through the DFT.
Eigen::VectorXd penalty_gradient(const Eigen::VectorXd& w, const SpectralState& state);

/// 2 alpha B, materialised densely. Exact; the penalty is quadratic.
Eigen::MatrixXd penalty_hessian(const Eigen::VectorXd& w, const SpectralState& state);

/// Dense B for bin weights c (cosine sums, no FFT involved).
Eigen::MatrixXd spectral_operator(const Eigen::VectorXd& weights);

/// B w computed as N * Re(IDFT(c .* DFT(w))).
Eigen::VectorXd apply_spectral_operator(const Eigen::VectorXd& weights, const Eigen::VectorXd& w);

}  // namespace srlvm
