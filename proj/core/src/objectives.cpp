#include "srlvm/objectives.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <sstream>

#include "srlvm/error.hpp"

namespace srlvm {

namespace {

void check_dims(const Eigen::VectorXd& w, const Eigen::MatrixXd& X) {
  if (w.size() != X.cols()) {
    throw InvalidArgument("dimension mismatch: w has " + std::to_string(w.size()) +
                          " entries but X has " + std::to_string(X.cols()) + " columns");
  }
  if (X.rows() < 1) throw InvalidArgument("objective needs at least one observation");
}

// Gauss-Legendre nodes/weights on [-1, 1] via Newton iteration on P_n.
struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;

  explicit GaussLegendre(int n) : nodes(n), weights(n) {
    for (int i = 0; i < n; ++i) {
      double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
      double dp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
          const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        const double dx = p1 / dp;
        x -= dx;
        if (std::abs(dx) < 1e-16) break;
      }
      nodes[i] = x;
      weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
  }
};

}  // namespace

Evaluation Objective::evaluate(const Eigen::VectorXd& w, const Eigen::MatrixXd& X,
                               bool with_hessian) const {
  Evaluation e;
  e.value = value(w, X);
  e.gradient = gradient(w, X);
  if (with_hessian) e.hessian = hessian(w, X);
  return e;
}

// ---- PCA -------------------------------------------------------------------

double PcaObjective::value(const Eigen::VectorXd& w, const Eigen::MatrixXd& X) const {
  check_dims(w, X);
  return -(X * w).squaredNorm() / static_cast<double>(X.rows());
}

Eigen::VectorXd PcaObjective::gradient(const Eigen::VectorXd& w, const Eigen::MatrixXd& X) const {
  check_dims(w, X);
  return -2.0 * (X.transpose() * (X * w)) / static_cast<double>(X.rows());
}

Eigen::MatrixXd PcaObjective::hessian(const Eigen::VectorXd& w, const Eigen::MatrixXd& X) const {
  check_dims(w, X);
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(X.cols(), X.cols());
  H.selfadjointView<Eigen::Lower>().rankUpdate(X.transpose(), -2.0 / static_cast<double>(X.rows()));
  return H.selfadjointView<Eigen::Lower>();
}

Evaluation PcaObjective::evaluate(const Eigen::VectorXd& w, const Eigen::MatrixXd& X,
                                  bool with_hessian) const {
  check_dims(w, X);
  const double n = static_cast<double>(X.rows());
  const Eigen::VectorXd z = X * w;
  Evaluation e;
  e.value = -z.squaredNorm() / n;
  e.gradient = -2.0 * (X.transpose() * z) / n;
  if (with_hessian) e.hessian = hessian(w, X);
  return e;
}

// ---- Negentropy ------------------------------------------------------------

GFunction parse_gfunction(std::string_view name) {
  if (name == "logcosh") return GFunction::logcosh;
  if (name == "exp") return GFunction::exp;
  if (name == "quartic") return GFunction::quartic;
  throw InvalidArgument("unknown G function '" + std::string(name) + "'");
}

std::string_view to_string(GFunction g) {
  switch (g) {
    case GFunction::logcosh: return "logcosh";
    case GFunction::exp: return "exp";
    case GFunction::quartic: return "quartic";
  }
  return "?";
}

double log_cosh(double u) {
  const double a = std::abs(u);
  return a + std::log1p(std::exp(-2.0 * a)) - std::numbers::ln2;
}

double Contrast::G(double u) const {
  switch (kind) {
    case GFunction::logcosh: return log_cosh(a * u) / a;
    case GFunction::exp: return -std::exp(-0.5 * u * u);
    case GFunction::quartic: return 0.25 * u * u * u * u;
  }
  return 0.0;
}

double Contrast::g(double u) const {
  switch (kind) {
    case GFunction::logcosh: return std::tanh(a * u);
    case GFunction::exp: return u * std::exp(-0.5 * u * u);
    case GFunction::quartic: return u * u * u;
  }
  return 0.0;
}

double Contrast::dg(double u) const {
  switch (kind) {
    case GFunction::logcosh: {
      const double t = std::tanh(a * u);
      return a * (1.0 - t * t);
    }
    case GFunction::exp: return (1.0 - u * u) * std::exp(-0.5 * u * u);
    case GFunction::quartic: return 3.0 * u * u;
  }
  return 0.0;
}

double gaussian_reference(const Contrast& contrast) {
  switch (contrast.kind) {
    case GFunction::exp: return -1.0 / std::numbers::sqrt2;
    case GFunction::quartic: return 0.75;
    case GFunction::logcosh: break;
  }
  static const GaussLegendre rule(16);
  constexpr double lo = -12.0;
  constexpr double hi = 12.0;
  constexpr int panels = 96;
  const double width = (hi - lo) / panels;
  const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  double sum = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double mid = lo + (p + 0.5) * width;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      const double u = mid + 0.5 * width * rule.nodes[i];
      sum += 0.5 * width * rule.weights[i] * contrast.G(u) * norm * std::exp(-0.5 * u * u);
    }
  }
  return sum;
}

NegentropyConfig NegentropyConfig::make(GFunction g, double a) {
  if (g == GFunction::logcosh && !(a >= 1.0 && a <= 2.0)) {
    throw InvalidArgument("logcosh parameter a must lie in [1, 2]");
  }
  NegentropyConfig c;
  c.g_function = g;
  c.a = g == GFunction::logcosh ? a : 1.0;
  c.gaussian_reference = srlvm::gaussian_reference(Contrast{g, c.a});
  return c;
}

NegentropyObjective::NegentropyObjective(NegentropyConfig config)
    : config_(config), contrast_{config.g_function, config.a} {}

std::string NegentropyObjective::name() const {
  std::ostringstream os;
  os << "negentropy(" << to_string(config_.g_function);
  if (config_.g_function == GFunction::logcosh) os << ",a=" << config_.a;
  os << ")";
  return os.str();
}

double NegentropyObjective::value(const Eigen::VectorXd& w, const Eigen::MatrixXd& X) const {
  check_dims(w, X);
  const Eigen::VectorXd z = X * w;
  double mean_G = 0.0;
  if (contrast_.kind == GFunction::logcosh) {
    const Eigen::ArrayXd r = (contrast_.a * z.array()).abs();
    mean_G = (r + (1.0 + (-2.0 * r).exp()).log()).sum() / contrast_.a -
             static_cast<double>(z.size()) * std::numbers::ln2 / contrast_.a;
  } else {
    for (Eigen::Index j = 0; j < z.size(); ++j) mean_G += contrast_.G(z(j));
  }
  const double m = mean_G / static_cast<double>(X.rows()) - config_.gaussian_reference;
  return -m * m;
}

Eigen::VectorXd NegentropyObjective::gradient(const Eigen::VectorXd& w,
                                              const Eigen::MatrixXd& X) const {
  return evaluate(w, X, false).gradient;
}

Eigen::MatrixXd NegentropyObjective::hessian(const Eigen::VectorXd& w,
                                             const Eigen::MatrixXd& X) const {
  return evaluate(w, X, true).hessian;
}

Evaluation NegentropyObjective::evaluate(const Eigen::VectorXd& w, const Eigen::MatrixXd& X,
                                         bool with_hessian) const {
  check_dims(w, X);
  const double n = static_cast<double>(X.rows());
  const Eigen::VectorXd z = X * w;

  double mean_G = 0.0;
  Eigen::VectorXd gz(z.size());
  if (contrast_.kind == GFunction::logcosh) {
    // log cosh and tanh share one exponential
    const double a = contrast_.a;
    const Eigen::ArrayXd au = a * z.array();
    const Eigen::ArrayXd r = au.abs();
    const Eigen::ArrayXd e = (-2.0 * r).exp();
    const Eigen::ArrayXd one_plus = 1.0 + e;
    mean_G = (r + one_plus.log()).sum() / a - static_cast<double>(z.size()) * std::numbers::ln2 / a;
    gz = (au.sign() * (1.0 - e) / one_plus).matrix();
  } else {
    for (Eigen::Index j = 0; j < z.size(); ++j) {
      mean_G += contrast_.G(z(j));
      gz(j) = contrast_.g(z(j));
    }
  }
  const double m = mean_G / n - config_.gaussian_reference;
  const Eigen::VectorXd dm = (X.transpose() * gz) / n;

  Evaluation e;
  e.value = -m * m;
  e.gradient = -2.0 * m * dm;
  if (with_hessian) {
    Eigen::VectorXd dgz(z.size());
    for (Eigen::Index j = 0; j < z.size(); ++j) dgz(j) = contrast_.dg(z(j));
    // -2 [dm dm^T + m * (1/N) sum_j g'(z_j) x_j x_j^T]
    Eigen::MatrixXd curvature = X.transpose() * dgz.asDiagonal() * X;
    curvature *= m / n;
    curvature.noalias() += dm * dm.transpose();
    e.hessian = -2.0 * curvature;
    e.hessian = 0.5 * (e.hessian + e.hessian.transpose()).eval();
  }
  return e;
}

// ---- Finite differences ----------------------------------------------------

namespace {

double checked(const ScalarFunction& f, const Eigen::VectorXd& w, Eigen::Index coord) {
  const double v = f(w);
  if (!std::isfinite(v)) {
    throw NumericalError("non-finite objective value while differencing coordinate " +
                         std::to_string(coord));
  }
  return v;
}

}  // namespace

Eigen::VectorXd finite_difference_gradient(const ScalarFunction& f, const Eigen::VectorXd& w,
                                           double h) {
  if (!(h > 0.0)) throw InvalidArgument("finite-difference step must be positive");
  Eigen::VectorXd grad(w.size());
  Eigen::VectorXd probe = w;
  for (Eigen::Index k = 0; k < w.size(); ++k) {
    probe(k) = w(k) + h;
    const double up = checked(f, probe, k);
    probe(k) = w(k) - h;
    const double down = checked(f, probe, k);
    probe(k) = w(k);
    grad(k) = (up - down) / (2.0 * h);
  }
  return grad;
}

Eigen::MatrixXd finite_difference_hessian(const ScalarFunction& f, const Eigen::VectorXd& w,
                                          double h) {
  if (!(h > 0.0)) throw InvalidArgument("finite-difference step must be positive");
  const Eigen::Index n = w.size();
  Eigen::MatrixXd H(n, n);
  Eigen::VectorXd probe = w;
  const double f0 = checked(f, w, 0);
  const double h2 = h * h;
  for (Eigen::Index i = 0; i < n; ++i) {
    probe(i) = w(i) + h;
    const double up = checked(f, probe, i);
    probe(i) = w(i) - h;
    const double down = checked(f, probe, i);
    probe(i) = w(i);
    H(i, i) = (up - 2.0 * f0 + down) / h2;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      probe(i) = w(i) + h;
      probe(j) = w(j) + h;
      const double pp = checked(f, probe, j);
      probe(j) = w(j) - h;
      const double pm = checked(f, probe, j);
      probe(i) = w(i) - h;
      const double mm = checked(f, probe, j);
      probe(j) = w(j) + h;
      const double mp = checked(f, probe, j);
      probe(i) = w(i);
      probe(j) = w(j);
      H(i, j) = (pp - pm - mp + mm) / (4.0 * h2);
      H(j, i) = H(i, j);
    }
  }
  return 0.5 * (H + H.transpose());
}

FiniteDifferenceObjective::FiniteDifferenceObjective(std::string name, ValueFunction value,
                                                     double gradient_step, double hessian_step)
    : name_(std::move(name)),
      value_(std::move(value)),
      gradient_step_(gradient_step),
      hessian_step_(hessian_step) {
  if (!value_) throw InvalidArgument("finite-difference objective needs a value function");
  if (!(gradient_step_ > 0.0) || !(hessian_step_ > 0.0)) {
    throw InvalidArgument("finite-difference steps must be positive");
  }
}

double FiniteDifferenceObjective::value(const Eigen::VectorXd& w, const Eigen::MatrixXd& X) const {
  check_dims(w, X);
  return value_(w, X);
}

Eigen::VectorXd FiniteDifferenceObjective::gradient(const Eigen::VectorXd& w,
                                                    const Eigen::MatrixXd& X) const {
  check_dims(w, X);
  return finite_difference_gradient([&](const Eigen::VectorXd& v) { return value_(v, X); }, w,
                                    gradient_step_);
}

Eigen::MatrixXd FiniteDifferenceObjective::hessian(const Eigen::VectorXd& w,
                                                   const Eigen::MatrixXd& X) const {
  check_dims(w, X);
  return finite_difference_hessian([&](const Eigen::VectorXd& v) { return value_(v, X); }, w,
                                   hessian_step_);
}

ObjectivePtr make_objective(std::string_view name, std::optional<NegentropyConfig> negentropy) {
  if (name == "pca") return std::make_shared<PcaObjective>();
  if (name == "negentropy") {
    return std::make_shared<NegentropyObjective>(
        negentropy ? *negentropy : NegentropyConfig::make(GFunction::logcosh));
  }
  throw InvalidArgument("unknown objective '" + std::string(name) + "'");
}

}  // namespace srlvm
