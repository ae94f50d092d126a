#include "srlvm/optimiser.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "srlvm/error.hpp"

namespace srlvm {

namespace {

constexpr double kArmijo = 1e-4;
constexpr int kMaxBacktracks = 60;
constexpr double kMaxStepNorm = 1.0;
constexpr double kCurvatureGuard = 1e-10;

// Rows of X selected by `idx`.
Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& X, const std::vector<Eigen::Index>& idx) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), X.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = X.row(idx[i]);
  return out;
}

// Projector onto the feasible tangent space at w: orthogonal to w and, under
// Gram-Schmidt, to every previous direction.
Eigen::MatrixXd tangent_projector(const Eigen::VectorXd& w, const std::vector<Eigen::VectorXd>& basis) {
  const Eigen::Index n = w.size();
  Eigen::MatrixXd P = Eigen::MatrixXd::Identity(n, n);
  P.noalias() -= w * w.transpose();
  for (const auto& b : basis) P.noalias() -= b * b.transpose();
  return P;
}

// Penalised objective L_model + L_sr restricted to one data block.
class Penalised {
 public:
  Penalised(const Objective& objective, const SpectralState& state, std::size_t component)
      : objective_(objective), state_(state), component_(component) {}

  Evaluation evaluate(const Eigen::VectorXd& w, const Eigen::MatrixXd& X, bool with_hessian,
                      int iteration) const {
    Evaluation e;
    try {
      e = objective_.evaluate(w, X, with_hessian);
    } catch (const std::exception& ex) {
      throw NumericalError(context(iteration) + "objective evaluation failed: " + ex.what());
    }
    if (!std::isfinite(e.value) || !e.gradient.allFinite()) {
      throw NumericalError(context(iteration) + "objective returned a non-finite value or gradient");
    }
    if (!state_.empty() && state_.alpha() > 0.0) {
      e.value += penalty(w, state_);
      e.gradient += penalty_gradient(w, state_);
      if (with_hessian) e.hessian += penalty_hessian(w, state_);
    }
    return e;
  }

  double value(const Eigen::VectorXd& w, const Eigen::MatrixXd& X, int iteration) const {
    double v = 0.0;
    try {
      v = objective_.value(w, X);
    } catch (const std::exception& ex) {
      throw NumericalError(context(iteration) + "objective evaluation failed: " + ex.what());
    }
    if (!state_.empty() && state_.alpha() > 0.0) v += penalty(w, state_);
    return v;
  }

  std::string context(int iteration) const {
    std::ostringstream os;
    os << "component " << component_ + 1 << ", iteration " << iteration << ": ";
    return os.str();
  }

 private:
  const Objective& objective_;
  const SpectralState& state_;
  std::size_t component_;
};

Eigen::VectorXd initial_direction(Eigen::Index dim, const OptimConfig& config,
                                  std::size_t component, const std::vector<Eigen::VectorXd>& basis) {
  std::seed_seq seq{static_cast<std::uint32_t>(config.seed & 0xffffffffu),
                    static_cast<std::uint32_t>(config.seed >> 32),
                    static_cast<std::uint32_t>(component)};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd w(dim);
  for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = normal(rng);
  const double norm = w.norm();
  if (!(norm > 0.0)) throw NumericalError("degenerate initial direction");
  w /= norm;
  if (!basis.empty()) w = gram_schmidt_step(w, basis);
  return w;
}

}  // namespace

Strategy parse_strategy(std::string_view name) {
  if (name == "sd" || name == "steepest_descent") return Strategy::steepest_descent;
  if (name == "newton") return Strategy::newton;
  if (name == "bfgs") return Strategy::bfgs;
  throw InvalidArgument("unknown optimiser '" + std::string(name) + "'");
}

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::steepest_descent: return "sd";
    case Strategy::newton: return "newton";
    case Strategy::bfgs: return "bfgs";
  }
  return "?";
}

void OptimConfig::validate() const {
  auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
  if (!positive(learning_rate)) throw InvalidArgument("learning rate must be > 0");
  if (!positive(tol)) throw InvalidArgument("tolerance must be > 0");
  if (max_inner_iters < 1) throw InvalidArgument("max iterations must be >= 1");
  if (!positive(sumt_alpha0)) throw InvalidArgument("alpha0 must be > 0");
  if (!(sumt_scale > 1.0) || !std::isfinite(sumt_scale)) throw InvalidArgument("alpha scale must be > 1");
  if (sumt_iters < 1) throw InvalidArgument("SUMT iterations must be >= 1");
  if (batch_size && *batch_size < 1) throw InvalidArgument("batch size must be >= 1");
  if (!(hessian_damping >= 0.0) || !std::isfinite(hessian_damping)) {
    throw InvalidArgument("Hessian damping must be >= 0");
  }
}

std::vector<double> OptimConfig::alpha_schedule() const {
  if (!regularise) return {0.0};
  std::vector<double> alphas(static_cast<std::size_t>(sumt_iters));
  double a = sumt_alpha0;
  for (auto& v : alphas) {
    v = a;
    a *= sumt_scale;
  }
  return alphas;
}

bool FitDiagnostics::all_converged() const {
  return std::all_of(components.begin(), components.end(),
                     [](const ComponentDiagnostics& c) { return c.converged; });
}

Eigen::VectorXd gram_schmidt_step(const Eigen::VectorXd& w,
                                  const std::vector<Eigen::VectorXd>& basis) {
  Eigen::VectorXd r = w;
  for (const auto& b : basis) {
    if (b.size() != w.size()) throw InvalidArgument("Gram-Schmidt basis vector has the wrong length");
    r -= b.dot(w) * b;
  }
  // second pass for numerical orthogonality
  for (const auto& b : basis) r -= b.dot(r) * b;
  const double norm = r.norm();
  if (!(norm >= 1e-12)) {
    throw NumericalError("Gram-Schmidt residual vanished: w lies in the span of the basis");
  }
  return r / norm;
}

std::vector<Eigen::Index> sample_batch(Eigen::Index rows, Eigen::Index batch_size,
                                       std::mt19937_64& rng) {
  if (batch_size < 1 || batch_size > rows) {
    throw InvalidArgument("batch size " + std::to_string(batch_size) + " outside [1, " +
                          std::to_string(rows) + "]");
  }
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(rows));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  // partial Fisher-Yates
  for (Eigen::Index i = 0; i < batch_size; ++i) {
    std::uniform_int_distribution<Eigen::Index> pick(i, rows - 1);
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(pick(rng))]);
  }
  idx.resize(static_cast<std::size_t>(batch_size));
  return idx;
}

Eigen::VectorXd newton_step(const Eigen::VectorXd& grad, const Eigen::MatrixXd& hess, double mu) {
  if (hess.rows() != grad.size() || hess.cols() != grad.size()) {
    throw InvalidArgument("Newton step: gradient and Hessian dimensions disagree");
  }
  if (!(mu >= 0.0)) throw InvalidArgument("Newton damping must be >= 0");
  const Eigen::MatrixXd sym = 0.5 * (hess + hess.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  if (eig.info() != Eigen::Success) throw NumericalError("Newton step: eigendecomposition failed");
  const Eigen::VectorXd flipped = eig.eigenvalues().cwiseAbs().array() + mu;
  const double largest = flipped.maxCoeff();
  const double smallest = flipped.minCoeff();
  if (!(smallest > largest * std::numeric_limits<double>::epsilon()) || !(smallest > 0.0)) {
    std::ostringstream os;
    os << "Newton step: singular system after damping (condition estimate "
       << (smallest > 0.0 ? largest / smallest : std::numeric_limits<double>::infinity()) << ")";
    throw NumericalError(os.str());
  }
  const Eigen::MatrixXd& V = eig.eigenvectors();
  return -(V * ((V.transpose() * grad).array() / flipped.array()).matrix());
}

Eigen::MatrixXd bfgs_update(const Eigen::MatrixXd& inverse_hessian, const Eigen::VectorXd& s,
                            const Eigen::VectorXd& y) {
  const double sy = s.dot(y);
  if (!(sy > kCurvatureGuard)) return inverse_hessian;
  const double rho = 1.0 / sy;
  const Eigen::Index n = s.size();
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd left = I - rho * s * y.transpose();
  return left * inverse_hessian * left.transpose() + rho * s * s.transpose();
}

ComponentResult fit_component(const Eigen::MatrixXd& X, const Objective& objective,
                              SpectralState& state, const OptimConfig& config,
                              const std::vector<Eigen::VectorXd>& previous) {
  config.validate();
  const Eigen::Index dim = X.cols();
  if (state.length() != dim) {
    throw InvalidArgument("stored spectra have length " + std::to_string(state.length()) +
                          " but the data has " + std::to_string(dim) + " columns");
  }
  if (config.batch_size && static_cast<Eigen::Index>(*config.batch_size) > X.rows()) {
    throw InvalidArgument("batch size exceeds the number of rows");
  }
  const std::vector<Eigen::VectorXd> empty_basis;
  const auto& basis = config.gram_schmidt ? previous : empty_basis;
  if (config.gram_schmidt && static_cast<Eigen::Index>(basis.size()) >= dim) {
    throw InvalidArgument("Gram-Schmidt leaves no free direction");
  }

  const std::size_t component = state.priors().size();
  const Penalised f(objective, state, component);
  const bool use_batches = config.batch_size && static_cast<Eigen::Index>(*config.batch_size) < X.rows();
  std::mt19937_64 batch_rng(config.seed ^ (0x9e3779b97f4a7c15ULL * (component + 1)));

  ComponentResult result;
  Eigen::VectorXd w = initial_direction(dim, config, component, basis);
  int total_iters = 0;
  bool converged = false;
  int global_iter = 0;

  for (double alpha : config.alpha_schedule()) {
    state.set_alpha(alpha);
    converged = false;
    int stage_iters = 0;
    Eigen::MatrixXd inv_hessian = Eigen::MatrixXd::Identity(dim, dim);
    bool have_prev = false;
    Eigen::VectorXd prev_step, prev_pg;
    // backtracking resumes from twice the last accepted fraction
    double t_start = 1.0;

    for (int it = 0; it < config.max_inner_iters; ++it, ++global_iter) {
      Eigen::MatrixXd batch_storage;
      const Eigen::MatrixXd* data = &X;
      if (use_batches) {
        batch_storage = gather_rows(X, sample_batch(X.rows(), static_cast<Eigen::Index>(*config.batch_size), batch_rng));
        data = &batch_storage;
      }

      const bool need_hessian = config.strategy == Strategy::newton;
      const Evaluation e = f.evaluate(w, *data, need_hessian, global_iter);
      const Eigen::MatrixXd P = tangent_projector(w, basis);
      const Eigen::VectorXd pg = P * e.gradient;

      // stopping decision always on the full batch
      const double full_norm = use_batches ? (P * f.evaluate(w, X, false, global_iter).gradient).norm()
                                           : pg.norm();
      if (full_norm <= config.tol) {
        converged = true;
        break;
      }

      Eigen::VectorXd step;
      switch (config.strategy) {
        case Strategy::steepest_descent:
          step = -config.learning_rate * pg;
          break;
        case Strategy::newton: {
          // Hessian of the Lagrangian with multiplier estimate -w^T g / 2,
          // restricted to the tangent space; identity on its complement.
          Eigen::MatrixXd H = P * (e.hessian - w.dot(e.gradient) * Eigen::MatrixXd::Identity(dim, dim)) * P;
          H += Eigen::MatrixXd::Identity(dim, dim) - P;
          step = P * newton_step(pg, 0.5 * (H + H.transpose()), config.hessian_damping);
          break;
        }
        case Strategy::bfgs: {
          if (have_prev) {
            const Eigen::VectorXd y = pg - prev_pg;
            if (it == 1 && prev_step.dot(y) > kCurvatureGuard) {
              inv_hessian *= prev_step.dot(y) / y.squaredNorm();
            }
            inv_hessian = bfgs_update(inv_hessian, prev_step, y);
          }
          step = P * (-(inv_hessian * pg));
          if (!(step.dot(pg) < 0.0)) {
            inv_hessian.setIdentity();
            step = -pg;
          }
          break;
        }
      }
      if (!step.allFinite()) {
        throw NumericalError(f.context(global_iter) + "non-finite update step");
      }
      if (config.strategy != Strategy::steepest_descent) {
        const double norm = step.norm();
        if (norm > kMaxStepNorm) step *= kMaxStepNorm / norm;
      }

      // Backtracking on the retracted (renormalised) point. A curvature-based
      // step that cannot make progress (near-flat directions blow it up) is
      // retried along the projected negative gradient.
      std::vector<Eigen::VectorXd> directions{step};
      if (config.strategy != Strategy::steepest_descent) {
        Eigen::VectorXd fallback = -pg;
        const double norm = fallback.norm();
        if (norm > kMaxStepNorm) fallback *= kMaxStepNorm / norm;
        directions.push_back(std::move(fallback));
      }
      bool accepted = false;
      Eigen::VectorXd candidate;
      for (std::size_t di = 0; di < directions.size() && !accepted; ++di) {
        const Eigen::VectorXd& dir = directions[di];
        const double slope = pg.dot(dir);
        double t = di == 0 ? t_start : 1.0;
        for (int k = 0; k < kMaxBacktracks; ++k, t *= 0.5) {
          candidate = w + t * dir;
          const double cn = candidate.norm();
          if (!(cn > 0.0)) continue;
          candidate /= cn;
          if (!basis.empty()) candidate = gram_schmidt_step(candidate, basis);
          const double v = f.value(candidate, *data, global_iter);
          if (std::isfinite(v) && v <= e.value + kArmijo * t * std::min(slope, 0.0)) {
            accepted = true;
            if (di == 0) t_start = std::min(1.0, 2.0 * t);
            break;
          }
        }
        if (accepted && di > 0 && config.strategy == Strategy::bfgs) inv_hessian.setIdentity();
      }
      ++stage_iters;
      if (!accepted) {
        // no decrease representable along either direction: w is stationary
        // to working precision
        converged = true;
        break;
      }

      prev_step = candidate - w;
      prev_pg = pg;
      have_prev = true;
      const double change = 1.0 - std::abs(candidate.dot(w));
      w = candidate;
      if (change <= config.tol * config.tol) {
        converged = true;
        break;
      }
    }
    total_iters += stage_iters;
    result.diagnostics.stage_iterations.push_back(stage_iters);
  }

  w /= w.norm();
  const Evaluation final_eval = objective.evaluate(w, X, false);
  result.diagnostics.iterations = total_iters;
  result.diagnostics.objective = final_eval.value;
  result.diagnostics.penalty = penalty(w, state);
  Eigen::VectorXd full_grad = final_eval.gradient + penalty_gradient(w, state);
  result.diagnostics.gradient_norm = (tangent_projector(w, basis) * full_grad).norm();
  result.diagnostics.converged = converged;
  result.w = std::move(w);
  return result;
}

FitResult fit_all(const Eigen::MatrixXd& X, const Objective& objective, std::size_t d,
                  const OptimConfig& config) {
  config.validate();
  const auto dim = static_cast<std::size_t>(X.cols());
  if (d < 1 || d > dim) {
    throw InvalidArgument("component count " + std::to_string(d) + " outside [1, " +
                          std::to_string(dim) + "]");
  }
  FitResult out;
  out.diagnostics.alpha_trace = config.alpha_schedule();
  SpectralState state(X.cols());
  std::vector<Eigen::VectorXd> solved;
  for (std::size_t i = 0; i < d; ++i) {
    try {
      ComponentResult r = fit_component(X, objective, state, config, solved);
      Spectrum spectrum = power_spectrum(r.w);
      state.append(spectrum);
      out.spectra.push_back(std::move(spectrum));
      out.diagnostics.components.push_back(r.diagnostics);
      solved.push_back(std::move(r.w));
    } catch (const Error& ex) {
      out.error = ex.what();
      break;
    }
  }
  out.W.resize(static_cast<Eigen::Index>(solved.size()), X.cols());
  for (std::size_t i = 0; i < solved.size(); ++i) out.W.row(static_cast<Eigen::Index>(i)) = solved[i].transpose();
  return out;
}

}  // namespace srlvm
