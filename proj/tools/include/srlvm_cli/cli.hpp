#pragma once

// Command-line front end: run configuration, subcommands and the
// gradient-check report. `run` is what main() calls; the pieces are exposed
// so tests can drive them in-process.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include <srlvm/model.hpp>
#include <srlvm/objectives.hpp>
#include <srlvm/optimiser.hpp>

namespace srlvm::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitNotConverged = 2;

/// One field per flag. Unset fields fall back to the config file, then to
/// built-in defaults.
struct RunConfig {
  std::optional<std::filesystem::path> input;
  std::optional<std::string> format;
  std::optional<double> sample_rate;
  std::optional<std::size_t> window;
  std::optional<std::size_t> shift;
  std::optional<std::size_t> components;
  std::optional<std::string> objective;
  std::optional<std::string> gfunc;
  std::optional<double> ga;
  std::optional<double> alpha0;
  std::optional<double> alpha_scale;
  std::optional<int> sumt_iters;
  std::optional<bool> no_regularisation;
  std::optional<std::string> optimiser;
  std::optional<double> lr;
  std::optional<double> tol;
  std::optional<int> max_iter;
  std::optional<std::size_t> batch_size;
  std::optional<bool> gram_schmidt;
  std::optional<bool> whiten;
  std::optional<bool> scale;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
  std::optional<std::filesystem::path> svg;
  std::optional<std::string> collapse;
  std::optional<std::filesystem::path> model;
  std::optional<std::size_t> points;
};

/// Parses a TOML config whose keys are the flag names with dashes turned
/// into underscores. Unknown keys and mistyped values are errors.
RunConfig parse_config(const std::string& toml_text, const std::string& source = "config");
RunConfig load_config(const std::filesystem::path& path);

/// Field-wise: the value from `flags` if set, otherwise from `file`.
RunConfig merge(const RunConfig& file, const RunConfig& flags);

/// Builds and validates the optimiser settings (defaults for unset fields).
OptimConfig optim_config(const RunConfig& config);

/// Builds the objective named by the config (default negentropy/logcosh).
ObjectivePtr objective_from(const RunConfig& config);

struct GradCheckResult {
  std::string target;
  double gradient_error = 0.0;  // max relative L2 error over the points
  double hessian_error = 0.0;
};

inline constexpr double kGradientTolerance = 1e-5;
inline constexpr double kHessianTolerance = 1e-3;

/// ||a - b|| / max(||a||, ||b||); zero when both vanish.
double relative_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// Analytic vs central-difference derivatives of `objective` on data X at
/// `points` seeded random unit vectors.
GradCheckResult check_objective(const Objective& objective, const Eigen::MatrixXd& X,
                                std::size_t points, std::uint64_t seed);

/// Same for the spectral penalty with `priors` seeded random prior spectra.
GradCheckResult check_penalty(Eigen::Index length, std::size_t priors, std::size_t points,
                              std::uint64_t seed);

bool passes(const GradCheckResult& r);

/// Subcommands. Each returns an exit code for a completed run and throws
/// srlvm::Error (message prefixed with the failing stage) otherwise; run()
/// maps exceptions to exit code 1.
int cmd_fit(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_transform(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_reconstruct(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_spectra(const RunConfig& config, std::ostream& out, std::ostream& err);
/// `objective_override` replaces the configured objective (used to feed a
/// deliberately broken objective through the full report path).
int cmd_check_grad(const RunConfig& config, std::ostream& out, std::ostream& err,
                   ObjectivePtr objective_override = nullptr);

/// Parses argv (subcommand first), merges --config, dispatches.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace srlvm::cli
