#include "srlvm/spectral_reg.hpp"

#include <cmath>
#include <complex>
#include <numbers>

#include <unsupported/Eigen/FFT>

#include "srlvm/error.hpp"

namespace srlvm {

namespace {

void require_finite(const Eigen::VectorXd& w) {
  if (!w.allFinite()) throw NumericalError("power spectrum of a non-finite vector");
}

void require_length(const Eigen::VectorXd& w, const SpectralState& state) {
  if (w.size() != state.length()) {
    throw InvalidArgument("length mismatch: w has " + std::to_string(w.size()) +
                          " entries, stored spectra have " + std::to_string(state.length()));
  }
}

std::vector<std::complex<double>> forward_dft(const Eigen::VectorXd& w) {
  // Eigen's FFT does not handle a single point
  if (w.size() == 1) return {w(0)};
  Eigen::FFT<double> fft;  // full spectrum unless HalfSpectrum is set
  std::vector<double> in(w.data(), w.data() + w.size());
  std::vector<std::complex<double>> out;
  fft.fwd(out, in);
  return out;
}

}  // namespace

Spectrum power_spectrum(const Eigen::VectorXd& w) {
  if (w.size() < 1) throw InvalidArgument("power spectrum of an empty vector");
  require_finite(w);
  const auto coeffs = forward_dft(w);
  Spectrum s;
  s.bins.resize(w.size());
  for (Eigen::Index k = 0; k < w.size(); ++k) s.bins(k) = std::norm(coeffs[static_cast<std::size_t>(k)]);
  return s;
}

double spectral_overlap(const Spectrum& u, const Spectrum& v) {
  if (u.size() != v.size()) throw InvalidArgument("spectra have different lengths");
  const double nu = u.bins.norm();
  const double nv = v.bins.norm();
  if (nu == 0.0 || nv == 0.0) return 0.0;
  return u.bins.dot(v.bins) / (nu * nv);
}

SpectralState::SpectralState(Eigen::Index length, double alpha)
    : weights_(Eigen::VectorXd::Zero(length)), alpha_(0.0) {
  if (length < 1) throw InvalidArgument("spectral state length must be >= 1");
  set_alpha(alpha);
}

void SpectralState::set_alpha(double alpha) {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    throw InvalidArgument("penalty weight alpha must be finite and >= 0");
  }
  alpha_ = alpha;
}

void SpectralState::append(Spectrum spectrum) {
  if (spectrum.size() != length()) {
    throw InvalidArgument("spectrum length " + std::to_string(spectrum.size()) +
                          " does not match state length " + std::to_string(length()));
  }
  weights_ += spectrum.bins;
  priors_.push_back(std::move(spectrum));
}

double penalty(const Eigen::VectorXd& w, const SpectralState& state) {
  require_length(w, state);
  if (state.empty()) return 0.0;
  return state.alpha() * power_spectrum(w).bins.dot(state.weights());
}

Eigen::VectorXd penalty_gradient(const Eigen::VectorXd& w, const SpectralState& state) {
  require_length(w, state);
  if (state.empty() || state.alpha() == 0.0) return Eigen::VectorXd::Zero(w.size());
  return 2.0 * state.alpha() * apply_spectral_operator(state.weights(), w);
}

Eigen::MatrixXd penalty_hessian(const Eigen::VectorXd& w, const SpectralState& state) {
  require_length(w, state);
  if (state.empty() || state.alpha() == 0.0) return Eigen::MatrixXd::Zero(w.size(), w.size());
  return 2.0 * state.alpha() * spectral_operator(state.weights());
}

Eigen::MatrixXd spectral_operator(const Eigen::VectorXd& weights) {
  const Eigen::Index n = weights.size();
  // B is circulant; one cosine sum per lag.
  Eigen::VectorXd by_lag(n);
  for (Eigen::Index lag = 0; lag < n; ++lag) {
    double acc = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
      const auto phase = static_cast<double>((k * lag) % n);
      acc += weights(k) * std::cos(2.0 * std::numbers::pi * phase / static_cast<double>(n));
    }
    by_lag(lag) = acc;
  }
  Eigen::MatrixXd B(n, n);
  for (Eigen::Index m = 0; m < n; ++m) {
    for (Eigen::Index j = 0; j < n; ++j) B(m, j) = by_lag((m - j + n) % n);
  }
  return B;
}

Eigen::VectorXd apply_spectral_operator(const Eigen::VectorXd& weights, const Eigen::VectorXd& w) {
  if (weights.size() != w.size()) throw InvalidArgument("spectral operator length mismatch");
  if (w.size() == 1) return weights(0) * w;
  Eigen::FFT<double> fft;
  std::vector<double> in(w.data(), w.data() + w.size());
  std::vector<std::complex<double>> spec;
  fft.fwd(spec, in);
  for (Eigen::Index k = 0; k < w.size(); ++k) spec[static_cast<std::size_t>(k)] *= weights(k);
  std::vector<std::complex<double>> back;
  fft.inv(back, spec);  // Eigen's inverse includes the 1/N factor
  Eigen::VectorXd out(w.size());
  const double n = static_cast<double>(w.size());
  for (Eigen::Index i = 0; i < w.size(); ++i) out(i) = n * back[static_cast<std::size_t>(i)].real();
  return out;
}

}  // namespace srlvm
