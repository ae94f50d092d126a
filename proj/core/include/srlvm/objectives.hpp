#pragma once

// Model objectives L_model(w) over a centered data matrix, plus central
// finite-difference derivatives for objectives that only supply a value.

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace srlvm {

/// Value, gradient and (optionally) Hessian at one point.
struct Evaluation {
  double value = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;  // empty unless requested
};

/// Objective contract. `X` holds one observation per row; `w` is a direction
/// of length X.cols(). Implementations must be reentrant.
class Objective {
 public:
  virtual ~Objective() = default;

  virtual std::string name() const = 0;

  virtual double value(const Eigen::VectorXd& w, const Eigen::MatrixXd& X) const = 0;
  virtual Eigen::VectorXd gradient(const Eigen::VectorXd& w, const Eigen::MatrixXd& X) const = 0;
  virtual Eigen::MatrixXd hessian(const Eigen::VectorXd& w, const Eigen::MatrixXd& X) const = 0;

  /// Combined evaluation. The default calls the three methods separately;
  /// built-in objectives override it to share the projection X*w.
  virtual Evaluation evaluate(const Eigen::VectorXd& w, const Eigen::MatrixXd& X,
                              bool with_hessian) const;
};

using ObjectivePtr = std::shared_ptr<const Objective>;

/// -(1/N) sum_j (w^T x_j)^2, i.e. -w^T C w with C = X^T X / N.
class PcaObjective final : public Objective {
 public:
  std::string name() const override { return "pca"; }
  double value(const Eigen::VectorXd& w, const Eigen::MatrixXd& X) const override;
  Eigen::VectorXd gradient(const Eigen::VectorXd& w, const Eigen::MatrixXd& X) const override;
  Eigen::MatrixXd hessian(const Eigen::VectorXd& w, const Eigen::MatrixXd& X) const override;
  Evaluation evaluate(const Eigen::VectorXd& w, const Eigen::MatrixXd& X,
                      bool with_hessian) const override;
};

enum class GFunction { logcosh, exp, quartic };

GFunction parse_gfunction(std::string_view name);
std::string_view to_string(GFunction g);

/// Non-quadratic contrast G and its first two derivatives.
///   logcosh: G(u) = log(cosh(a u)) / a
///   exp:     G(u) = -exp(-u^2 / 2)
///   quartic: G(u) = u^4 / 4
struct Contrast {
  GFunction kind = GFunction::logcosh;
  double a = 1.0;

  double G(double u) const;
  double g(double u) const;
  double dg(double u) const;
};

/// E[G(nu)] for nu ~ N(0, 1). Closed form for exp and quartic, composite
/// Gauss-Legendre quadrature over [-12, 12] for logcosh.
double gaussian_reference(const Contrast& contrast);

/// Overflow-safe log(cosh(u)) = |u| + log1p(exp(-2|u|)) - log(2).
double log_cosh(double u);

struct NegentropyConfig {
  GFunction g_function = GFunction::logcosh;
  double a = 1.0;
  /// Filled by make(); stored so fits never resample it.
  double gaussian_reference = 0.0;

  /// Validates `a` (must lie in [1, 2] for logcosh) and precomputes the
  /// Gaussian reference.
  static NegentropyConfig make(GFunction g, double a = 1.0);
};

/// With m = mean_j G(w^T x_j) - E[G(nu)]: value = -m^2.
class NegentropyObjective final : public Objective {
 public:
  explicit NegentropyObjective(NegentropyConfig config);

  const NegentropyConfig& config() const noexcept { return config_; }

  std::string name() const override;
  double value(const Eigen::VectorXd& w, const Eigen::MatrixXd& X) const override;
  Eigen::VectorXd gradient(const Eigen::VectorXd& w, const Eigen::MatrixXd& X) const override;
  Eigen::MatrixXd hessian(const Eigen::VectorXd& w, const Eigen::MatrixXd& X) const override;
  Evaluation evaluate(const Eigen::VectorXd& w, const Eigen::MatrixXd& X,
                      bool with_hessian) const override;

 private:
  NegentropyConfig config_;
  Contrast contrast_;
};

using ScalarFunction = std::function<double(const Eigen::VectorXd&)>;

inline constexpr double kDefaultGradientStep = 1e-6;
inline constexpr double kDefaultHessianStep = 1e-4;

/// Central differences (f(w + h e_k) - f(w - h e_k)) / 2h.
Eigen::VectorXd finite_difference_gradient(const ScalarFunction& f, const Eigen::VectorXd& w,
                                           double h = kDefaultGradientStep);

/// Second-order central stencil on values, symmetrised as (H + H^T) / 2.
Eigen::MatrixXd finite_difference_hessian(const ScalarFunction& f, const Eigen::VectorXd& w,
                                          double h = kDefaultHessianStep);

using ValueFunction = std::function<double(const Eigen::VectorXd&, const Eigen::MatrixXd&)>;

/// Wraps a value-only objective; derivatives come from finite differences.
class FiniteDifferenceObjective final : public Objective {
 public:
  FiniteDifferenceObjective(std::string name, ValueFunction value,
                            double gradient_step = kDefaultGradientStep,
                            double hessian_step = kDefaultHessianStep);

  std::string name() const override { return name_; }
  double value(const Eigen::VectorXd& w, const Eigen::MatrixXd& X) const override;
  Eigen::VectorXd gradient(const Eigen::VectorXd& w, const Eigen::MatrixXd& X) const override;
  Eigen::MatrixXd hessian(const Eigen::VectorXd& w, const Eigen::MatrixXd& X) const override;

 private:
  std::string name_;
  ValueFunction value_;
  double gradient_step_;
  double hessian_step_;
};

/// Builds a built-in objective from its identifier ("pca", "negentropy").
ObjectivePtr make_objective(std::string_view name,
                            std::optional<NegentropyConfig> negentropy = std::nullopt);

}  // namespace srlvm
