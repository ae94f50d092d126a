#pragma once

// Deflation-based estimation of W: components are solved one at a time on the
// unit sphere, each penalised against the spectra of its predecessors, with
// the penalty weight escalated over a sequence of unconstrained subproblems
// (SUMT).

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "srlvm/objectives.hpp"
#include "srlvm/spectral_reg.hpp"

namespace srlvm {

enum class Strategy { steepest_descent, newton, bfgs };

Strategy parse_strategy(std::string_view name);
std::string_view to_string(Strategy s);

struct OptimConfig {
  Strategy strategy = Strategy::newton;
  double learning_rate = 1e-2;
  double tol = 1e-6;
  int max_inner_iters = 500;
  double sumt_alpha0 = 1.0;
  double sumt_scale = 10.0;
  int sumt_iters = 5;
  std::uint64_t seed = 0;
  std::optional<std::size_t> batch_size;
  bool gram_schmidt = false;
  double hessian_damping = 1e-6;
  /// false forces alpha = 0 throughout (ablation without the regulariser).
  bool regularise = true;

  void validate() const;

  /// Penalty weight per SUMT stage: alpha0 * scale^s, or a single 0 stage
  /// when regularisation is off.
  std::vector<double> alpha_schedule() const;
};

struct ComponentDiagnostics {
  int iterations = 0;
  double objective = 0.0;
  double penalty = 0.0;
  double gradient_norm = 0.0;
  bool converged = false;
  std::vector<int> stage_iterations;
};

struct FitDiagnostics {
  std::vector<ComponentDiagnostics> components;
  std::vector<double> alpha_trace;

  bool all_converged() const;
};

struct ComponentResult {
  Eigen::VectorXd w;
  ComponentDiagnostics diagnostics;
};

/// Solves one component. `state` carries the spectra of earlier components;
/// its alpha is overwritten stage by stage. `previous` is the orthonormal
/// basis used when config.gram_schmidt is set. The initial direction is drawn
/// from an RNG seeded by (config.seed, number of stored spectra).
ComponentResult fit_component(const Eigen::MatrixXd& X, const Objective& objective,
                              SpectralState& state, const OptimConfig& config,
                              const std::vector<Eigen::VectorXd>& previous);

struct FitResult {
  /// d x L_w, one unit-norm row per solved component in extraction order.
  /// Holds only the rows solved before a failure, if one occurred.
  Eigen::MatrixXd W;
  std::vector<Spectrum> spectra;
  FitDiagnostics diagnostics;
  std::optional<std::string> error;
};

FitResult fit_all(const Eigen::MatrixXd& X, const Objective& objective, std::size_t d,
                  const OptimConfig& config);

/// Normalised residual of w against an orthonormal basis. Throws
/// NumericalError when w lies in the span (residual norm < 1e-12).
Eigen::VectorXd gram_schmidt_step(const Eigen::VectorXd& w,
                                  const std::vector<Eigen::VectorXd>& basis);

/// batch_size distinct indices from [0, rows), uniformly without replacement.
std::vector<Eigen::Index> sample_batch(Eigen::Index rows, Eigen::Index batch_size,
                                       std::mt19937_64& rng);

/// Solves (|H| + mu I) step = -grad where |H| flips negative eigenvalues.
/// Throws NumericalError if the damped system is singular.
Eigen::VectorXd newton_step(const Eigen::VectorXd& grad, const Eigen::MatrixXd& hess, double mu);

/// Inverse-Hessian BFGS update; returned unchanged when s^T y <= 1e-10.
Eigen::MatrixXd bfgs_update(const Eigen::MatrixXd& inverse_hessian, const Eigen::VectorXd& s,
                            const Eigen::VectorXd& y);

}  // namespace srlvm
