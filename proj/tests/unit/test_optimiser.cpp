#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <random>
#include <set>
#include <vector>

#include <srlvm/error.hpp>
#include <srlvm/optimiser.hpp>

#include "oracles.hpp"

using srlvm::OptimConfig;
using srlvm::SpectralState;
using srlvm::Strategy;

namespace {

/// -w^T D w for a fixed diagonal D; ignores the data.
class Rayleigh final : public srlvm::Objective {
 public:
  explicit Rayleigh(Eigen::VectorXd d) : d_(std::move(d)) {}
  std::string name() const override { return "rayleigh"; }
  double value(const Eigen::VectorXd& w, const Eigen::MatrixXd&) const override {
    return -w.dot(d_.cwiseProduct(w));
  }
  Eigen::VectorXd gradient(const Eigen::VectorXd& w, const Eigen::MatrixXd&) const override {
    return -2.0 * d_.cwiseProduct(w);
  }
  Eigen::MatrixXd hessian(const Eigen::VectorXd&, const Eigen::MatrixXd&) const override {
    return Eigen::MatrixXd(-2.0 * d_.asDiagonal());
  }

 private:
  Eigen::VectorXd d_;
};

/// Forwards to another objective and records the value at every full
/// evaluation, which the optimiser performs once per accepted iterate.
class Recorder final : public srlvm::Objective {
 public:
  explicit Recorder(const srlvm::Objective& inner) : inner_(inner) {}
  std::string name() const override { return inner_.name(); }
  double value(const Eigen::VectorXd& w, const Eigen::MatrixXd& X) const override { return inner_.value(w, X); }
  Eigen::VectorXd gradient(const Eigen::VectorXd& w, const Eigen::MatrixXd& X) const override {
    return inner_.gradient(w, X);
  }
  Eigen::MatrixXd hessian(const Eigen::VectorXd& w, const Eigen::MatrixXd& X) const override {
    return inner_.hessian(w, X);
  }
  srlvm::Evaluation evaluate(const Eigen::VectorXd& w, const Eigen::MatrixXd& X, bool h) const override {
    auto e = inner_.evaluate(w, X, h);
    values.push_back(e.value);
    return e;
  }
  mutable std::vector<double> values;

 private:
  const srlvm::Objective& inner_;
};

/// Throws once the direction has moved far enough from its start.
class Exploding final : public srlvm::Objective {
 public:
  std::string name() const override { return "exploding"; }
  double value(const Eigen::VectorXd& w, const Eigen::MatrixXd& X) const override { return pca_.value(w, X); }
  Eigen::VectorXd gradient(const Eigen::VectorXd& w, const Eigen::MatrixXd& X) const override {
    if (++calls_ > 3) throw std::runtime_error("boom");
    return pca_.gradient(w, X);
  }
  Eigen::MatrixXd hessian(const Eigen::VectorXd& w, const Eigen::MatrixXd& X) const override {
    return pca_.hessian(w, X);
  }

 private:
  srlvm::PcaObjective pca_;
  mutable int calls_ = 0;
};

Eigen::MatrixXd axis_data() {
  Eigen::MatrixXd X(4, 2);
  X << 1, 0, -1, 0, 2, 0, -2, 0;
  return X;
}

Eigen::MatrixXd two_axis_data() {
  const double b = std::sqrt(0.5);
  Eigen::MatrixXd X(4, 2);
  X << 1, b, -1, b, 2, -b, -2, -b;
  return X;
}

/// Gaussian rows with population covariance Q diag(lambda) Q^T.
Eigen::MatrixXd structured_data(Eigen::Index rows, const Eigen::VectorXd& lambda, std::mt19937_64& rng) {
  const Eigen::Index n = lambda.size();
  Eigen::MatrixXd G(rows, n);
  for (Eigen::Index c = 0; c < n; ++c) G.col(c) = oracle::random_vector(rows, rng);
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(oracle::random_vector(n * n, rng).reshaped(n, n));
  const Eigen::MatrixXd Q = qr.householderQ();
  return oracle::centered(G * lambda.cwiseSqrt().asDiagonal() * Q.transpose());
}

OptimConfig unregularised(Strategy s) {
  OptimConfig c;
  c.strategy = s;
  c.regularise = false;
  return c;
}

}  // namespace

TEST_CASE("config validation and schedule") {
  OptimConfig c;
  CHECK_NOTHROW(c.validate());
  CHECK(c.alpha_schedule() == std::vector<double>{1.0, 10.0, 100.0, 1000.0, 10000.0});
  c.regularise = false;
  CHECK(c.alpha_schedule() == std::vector<double>{0.0});
  auto bad = [](auto mutate) {
    OptimConfig b;
    mutate(b);
    return b;
  };
  CHECK_THROWS_AS(bad([](OptimConfig& b) { b.learning_rate = 0; }).validate(), srlvm::InvalidArgument);
  CHECK_THROWS_AS(bad([](OptimConfig& b) { b.tol = -1; }).validate(), srlvm::InvalidArgument);
  CHECK_THROWS_AS(bad([](OptimConfig& b) { b.max_inner_iters = 0; }).validate(), srlvm::InvalidArgument);
  CHECK_THROWS_AS(bad([](OptimConfig& b) { b.sumt_alpha0 = 0; }).validate(), srlvm::InvalidArgument);
  CHECK_THROWS_AS(bad([](OptimConfig& b) { b.sumt_scale = 1.0; }).validate(), srlvm::InvalidArgument);
  CHECK_THROWS_AS(bad([](OptimConfig& b) { b.sumt_iters = 0; }).validate(), srlvm::InvalidArgument);
  CHECK_THROWS_AS(bad([](OptimConfig& b) { b.batch_size = 0; }).validate(), srlvm::InvalidArgument);
  CHECK_THROWS_AS(bad([](OptimConfig& b) { b.hessian_damping = -1e-3; }).validate(), srlvm::InvalidArgument);
}

TEST_CASE("strategy names") {
  CHECK(srlvm::parse_strategy("sd") == Strategy::steepest_descent);
  CHECK(srlvm::parse_strategy("newton") == Strategy::newton);
  CHECK(srlvm::parse_strategy("bfgs") == Strategy::bfgs);
  CHECK_THROWS_AS(srlvm::parse_strategy("adam"), srlvm::InvalidArgument);
  for (Strategy s : {Strategy::steepest_descent, Strategy::newton, Strategy::bfgs})
    CHECK(srlvm::parse_strategy(srlvm::to_string(s)) == s);
}

TEST_CASE("gram_schmidt_step examples") {
  const Eigen::VectorXd r = srlvm::gram_schmidt_step(Eigen::Vector2d(1, 1) / std::sqrt(2.0), {Eigen::Vector2d(1, 0)});
  CHECK(std::abs(r(0)) <= 1e-15);
  CHECK(r(1) == doctest::Approx(1.0));
  const Eigen::VectorXd n = srlvm::gram_schmidt_step(Eigen::Vector2d(3, 4), {});
  CHECK(n.isApprox(Eigen::Vector2d(0.6, 0.8)));
  CHECK_THROWS_AS(srlvm::gram_schmidt_step(Eigen::Vector2d(1, 0), {Eigen::Vector2d(1, 0)}), srlvm::NumericalError);
  CHECK_THROWS_AS(srlvm::gram_schmidt_step(Eigen::Vector2d(1, 0), {Eigen::Vector3d(1, 0, 0)}),
                  srlvm::InvalidArgument);
}

TEST_CASE("property: gram_schmidt_step output is unit and orthogonal") {
  std::mt19937_64 rng(50);
  for (int t = 0; t < 100; ++t) {
    const Eigen::Index n = std::uniform_int_distribution<Eigen::Index>(2, 20)(rng);
    const Eigen::Index k = std::uniform_int_distribution<Eigen::Index>(0, n - 1)(rng);
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(oracle::random_vector(n * n, rng).reshaped(n, n));
    const Eigen::MatrixXd Q = qr.householderQ();
    std::vector<Eigen::VectorXd> basis;
    for (Eigen::Index j = 0; j < k; ++j) basis.push_back(Q.col(j));
    const Eigen::VectorXd r = srlvm::gram_schmidt_step(oracle::random_vector(n, rng), basis);
    CHECK(std::abs(r.norm() - 1.0) <= 1e-12);
    for (const auto& b : basis) CHECK(std::abs(b.dot(r)) <= 1e-12);
  }
}

TEST_CASE("sample_batch examples and properties") {
  std::mt19937_64 rng(1);
  auto full = srlvm::sample_batch(10, 10, rng);
  std::sort(full.begin(), full.end());
  for (Eigen::Index i = 0; i < 10; ++i) CHECK(full[static_cast<std::size_t>(i)] == i);

  std::mt19937_64 a(77), b(77);
  CHECK(srlvm::sample_batch(1000, 37, a) == srlvm::sample_batch(1000, 37, b));

  std::mt19937_64 c(3);
  CHECK_THROWS_AS(srlvm::sample_batch(10, 0, c), srlvm::InvalidArgument);
  CHECK_THROWS_AS(srlvm::sample_batch(10, 11, c), srlvm::InvalidArgument);

  std::mt19937_64 rng2(4);
  std::vector<int> hits(20, 0);
  for (int t = 0; t < 4000; ++t) {
    const auto idx = srlvm::sample_batch(20, 5, rng2);
    const std::set<Eigen::Index> unique(idx.begin(), idx.end());
    REQUIRE(unique.size() == 5);
    for (Eigen::Index i : idx) {
      REQUIRE(i >= 0);
      REQUIRE(i < 20);
      ++hits[static_cast<std::size_t>(i)];
    }
  }
  // each index is expected 1000 times; 5 sigma is about 137
  for (int h : hits) CHECK(std::abs(h - 1000) < 150);
}

TEST_CASE("newton_step examples") {
  const Eigen::VectorXd s = srlvm::newton_step(Eigen::Vector2d(2, 0), 2.0 * Eigen::Matrix2d::Identity(), 0.0);
  CHECK(s.isApprox(Eigen::Vector2d(-1, 0)));

  Eigen::Matrix2d H;
  H << -2, 0, 0, 2;
  const Eigen::VectorXd f = srlvm::newton_step(Eigen::Vector2d(4, -6), H, 0.0);
  CHECK(f.isApprox(Eigen::Vector2d(-2, 3)));

  CHECK_THROWS_AS(srlvm::newton_step(Eigen::Vector2d(1, 1), Eigen::Matrix2d::Zero(), 0.0), srlvm::NumericalError);
  CHECK_NOTHROW(srlvm::newton_step(Eigen::Vector2d(1, 1), Eigen::Matrix2d::Zero(), 1e-6));
  CHECK_THROWS_AS(srlvm::newton_step(Eigen::Vector2d(1, 1), Eigen::Matrix3d::Identity(), 0.0), srlvm::InvalidArgument);
}

TEST_CASE("property: flipped newton steps descend") {
  std::mt19937_64 rng(51);
  for (int t = 0; t < 100; ++t) {
    const Eigen::Index n = std::uniform_int_distribution<Eigen::Index>(1, 12)(rng);
    const Eigen::MatrixXd M = oracle::random_vector(n * n, rng).reshaped(n, n);
    const Eigen::MatrixXd H = M + M.transpose();
    const Eigen::VectorXd g = oracle::random_vector(n, rng);
    const Eigen::VectorXd step = srlvm::newton_step(g, H, 1e-6);
    CHECK(step.dot(g) < 0.0);
    // Solve (|H| + mu I) step = -g independently via the Jacobi oracle.
    std::vector<std::vector<double>> a(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(n)));
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = H(i, j);
    const auto [vals, vecs] = oracle::jacobi_eigen(a);
    Eigen::MatrixXd abs_h = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t k = 0; k < vals.size(); ++k) {
      const Eigen::Map<const Eigen::VectorXd> v(vecs[k].data(), n);
      abs_h += std::abs(vals[k]) * v * v.transpose();
    }
    abs_h += 1e-6 * Eigen::MatrixXd::Identity(n, n);
    CHECK(oracle::relative_error(abs_h * step, -g) <= 1e-8);
  }
}

TEST_CASE("bfgs_update curvature guard and secant condition") {
  const Eigen::Matrix2d H0 = Eigen::Matrix2d::Identity();
  CHECK(srlvm::bfgs_update(H0, Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1)) == H0);
  CHECK(srlvm::bfgs_update(H0, Eigen::Vector2d(1, 0), Eigen::Vector2d(-1, 0)) == H0);

  std::mt19937_64 rng(52);
  for (int t = 0; t < 50; ++t) {
    const Eigen::Index n = std::uniform_int_distribution<Eigen::Index>(2, 10)(rng);
    const Eigen::MatrixXd M = oracle::random_vector(n * n, rng).reshaped(n, n);
    const Eigen::MatrixXd A = M * M.transpose() + Eigen::MatrixXd::Identity(n, n);
    const Eigen::VectorXd s = oracle::random_vector(n, rng);
    const Eigen::VectorXd y = A * s;
    const Eigen::MatrixXd Hn = srlvm::bfgs_update(Eigen::MatrixXd::Identity(n, n), s, y);
    CHECK(oracle::relative_error(Hn * y, s) <= 1e-10);
    CHECK((Hn - Hn.transpose()).norm() <= 1e-12 * Hn.norm());
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (Hn + Hn.transpose()));
    CHECK(eig.eigenvalues().minCoeff() > 0.0);
  }
}

TEST_CASE("bfgs maximises a Rayleigh quotient") {
  const Rayleigh obj(Eigen::Vector2d(3, 1));
  const Eigen::MatrixXd X = Eigen::MatrixXd::Zero(1, 2);
  for (std::uint64_t seed : {0u, 1u, 2u, 3u, 4u}) {
    OptimConfig c = unregularised(Strategy::bfgs);
    c.tol = 1e-8;
    c.seed = seed;
    SpectralState state(2);
    const auto r = srlvm::fit_component(X, obj, state, c, {});
    CHECK(r.diagnostics.converged);
    CHECK(r.diagnostics.iterations <= 50);
    CHECK(std::abs(std::abs(r.w(0)) - 1.0) <= 1e-8);
    CHECK(std::abs(r.w(1)) <= 1e-4);
  }
}

TEST_CASE("pca component on axis data") {
  for (Strategy s : {Strategy::steepest_descent, Strategy::newton, Strategy::bfgs}) {
    CAPTURE(srlvm::to_string(s));
    const srlvm::PcaObjective pca;
    SpectralState state(2);
    const auto r = srlvm::fit_component(axis_data(), pca, state, unregularised(s), {});
    CHECK(r.diagnostics.converged);
    CHECK(std::abs(std::abs(r.w(0)) - 1.0) <= 1e-8);
    CHECK(-pca.value(r.w, axis_data()) == doctest::Approx(2.5));
  }
}

TEST_CASE("single component is never penalised") {
  std::mt19937_64 rng(53);
  const Eigen::MatrixXd X = oracle::centered(oracle::laplace_matrix(200, 6, rng));
  const srlvm::NegentropyObjective neg(srlvm::NegentropyConfig::make(srlvm::GFunction::logcosh));
  const auto r = srlvm::fit_all(X, neg, 1, OptimConfig{});
  REQUIRE(r.W.rows() == 1);
  CHECK(r.diagnostics.components[0].penalty == 0.0);
  SpectralState state(6);
  const auto single = srlvm::fit_component(X, neg, state, OptimConfig{}, {});
  CHECK(single.w == r.W.row(0).transpose());
  CHECK(single.diagnostics.objective == r.diagnostics.components[0].objective);
  CHECK(single.diagnostics.iterations == r.diagnostics.components[0].iterations);
}

TEST_CASE("full pca with gram-schmidt recovers both axes in order") {
  OptimConfig c = unregularised(Strategy::newton);
  c.gram_schmidt = true;
  const auto r = srlvm::fit_all(two_axis_data(), srlvm::PcaObjective{}, 2, c);
  REQUIRE(r.W.rows() == 2);
  CHECK(std::abs(std::abs(r.W(0, 0)) - 1.0) <= 1e-8);
  CHECK(std::abs(std::abs(r.W(1, 1)) - 1.0) <= 1e-8);
  CHECK(r.diagnostics.all_converged());
}

TEST_CASE("fit_all preconditions and partial results") {
  const Eigen::MatrixXd X = two_axis_data();
  CHECK_THROWS_AS(srlvm::fit_all(X, srlvm::PcaObjective{}, 0, OptimConfig{}), srlvm::InvalidArgument);
  CHECK_THROWS_AS(srlvm::fit_all(X, srlvm::PcaObjective{}, 3, OptimConfig{}), srlvm::InvalidArgument);

  OptimConfig batch = unregularised(Strategy::newton);
  batch.batch_size = 5;
  SpectralState state(2);
  CHECK_THROWS_AS(srlvm::fit_component(X, srlvm::PcaObjective{}, state, batch, {}), srlvm::InvalidArgument);
  SpectralState wrong(3);
  CHECK_THROWS_AS(srlvm::fit_component(X, srlvm::PcaObjective{}, wrong, OptimConfig{}, {}), srlvm::InvalidArgument);

  std::mt19937_64 rng(54);
  const Eigen::MatrixXd Y = oracle::centered(oracle::laplace_matrix(100, 4, rng));
  const auto r = srlvm::fit_all(Y, Exploding{}, 3, unregularised(Strategy::steepest_descent));
  REQUIRE(r.error.has_value());
  CHECK(r.error->find("component 1") != std::string::npos);
  CHECK(r.error->find("boom") != std::string::npos);
  CHECK(r.W.rows() == 0);
}

TEST_CASE("property: pca deflation matches the eigendecomposition oracle") {
  std::mt19937_64 rng(55);
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::VectorXd lambda(8);
    for (Eigen::Index k = 0; k < 8; ++k) lambda(k) = std::pow(2.0, 7 - k);
    const Eigen::MatrixXd X = structured_data(4000, lambda, rng);
    const auto [vals, vecs] = oracle::jacobi_eigen(oracle::covariance(X));
    for (Strategy s : {Strategy::newton, Strategy::bfgs}) {
      OptimConfig c = unregularised(s);
      c.gram_schmidt = true;
      c.seed = static_cast<std::uint64_t>(trial);
      const auto r = srlvm::fit_all(X, srlvm::PcaObjective{}, 8, c);
      REQUIRE(r.W.rows() == 8);
      const Eigen::MatrixXd Z = X * r.W.transpose();
      for (Eigen::Index i = 0; i < 8; ++i) {
        const Eigen::Map<const Eigen::VectorXd> v(vecs[static_cast<std::size_t>(i)].data(), 8);
        CHECK(std::abs(r.W.row(i).dot(v)) >= 0.999);
        CHECK(std::abs(r.W.row(i).norm() - 1.0) <= 1e-12);
        for (Eigen::Index j = 0; j < i; ++j) {
          const double cov = Z.col(i).dot(Z.col(j)) / Z.rows();
          const double vi = Z.col(i).squaredNorm() / Z.rows(), vj = Z.col(j).squaredNorm() / Z.rows();
          CHECK(std::abs(cov) <= 1e-6 * std::sqrt(vi * vj));
        }
      }
    }
  }
}

TEST_CASE("property: returned directions are unit norm") {
  std::mt19937_64 rng(56);
  const Eigen::MatrixXd X = oracle::centered(oracle::laplace_matrix(300, 8, rng));
  for (Strategy s : {Strategy::steepest_descent, Strategy::newton, Strategy::bfgs}) {
    for (bool gs : {false, true}) {
      OptimConfig c;
      c.strategy = s;
      c.gram_schmidt = gs;
      c.max_inner_iters = 60;
      const auto r = srlvm::fit_all(X, srlvm::NegentropyObjective(srlvm::NegentropyConfig::make(srlvm::GFunction::exp)),
                                    3, c);
      REQUIRE(r.W.rows() == 3);
      for (Eigen::Index i = 0; i < 3; ++i) CHECK(std::abs(r.W.row(i).norm() - 1.0) <= 1e-12);
      if (gs) CHECK(std::abs(r.W.row(0).dot(r.W.row(2))) <= 1e-10);
    }
  }
}

TEST_CASE("property: accepted iterates never increase the objective") {
  std::mt19937_64 rng(57);
  const Eigen::MatrixXd X = oracle::centered(oracle::laplace_matrix(400, 8, rng));
  const srlvm::NegentropyObjective neg(srlvm::NegentropyConfig::make(srlvm::GFunction::logcosh));
  const srlvm::PcaObjective pca;
  for (const srlvm::Objective* inner : {static_cast<const srlvm::Objective*>(&neg), static_cast<const srlvm::Objective*>(&pca)}) {
    for (Strategy s : {Strategy::steepest_descent, Strategy::newton, Strategy::bfgs}) {
      for (std::uint64_t seed = 0; seed < 3; ++seed) {
        Recorder rec(*inner);
        OptimConfig c = unregularised(s);
        c.seed = seed;
        SpectralState state(8);
        srlvm::fit_component(X, rec, state, c, {});
        REQUIRE(rec.values.size() >= 2);
        for (std::size_t i = 1; i < rec.values.size(); ++i) CHECK(rec.values[i] <= rec.values[i - 1] + 1e-10);
      }
    }
  }
}

TEST_CASE("alpha trace grows by the scale factor") {
  std::mt19937_64 rng(58);
  const Eigen::MatrixXd X = oracle::centered(oracle::laplace_matrix(200, 6, rng));
  OptimConfig c;
  c.sumt_alpha0 = 0.5;
  c.sumt_scale = 3.0;
  c.sumt_iters = 4;
  const auto r = srlvm::fit_all(X, srlvm::PcaObjective{}, 2, c);
  const auto& trace = r.diagnostics.alpha_trace;
  REQUIRE(trace.size() == 4);
  CHECK(trace[0] == 0.5);
  for (std::size_t i = 1; i < trace.size(); ++i) {
    CHECK(trace[i] > trace[i - 1]);
    CHECK(trace[i] == doctest::Approx(3.0 * trace[i - 1]));
  }
  for (const auto& comp : r.diagnostics.components) CHECK(comp.stage_iterations.size() == 4);
  CHECK(r.diagnostics.components[1].penalty > 0.0);
}

TEST_CASE("regularisation penalises spectral overlap with predecessors") {
  std::mt19937_64 rng(59);
  std::vector<double> x(3000);
  std::normal_distribution<double> noise(0.0, 0.05);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::sin(2.0 * std::numbers::pi * 2.0 * i / 16.0) + noise(rng);
  Eigen::MatrixXd X(static_cast<Eigen::Index>(x.size() - 15), 16);
  for (Eigen::Index r = 0; r < X.rows(); ++r)
    for (Eigen::Index c = 0; c < 16; ++c) X(r, c) = x[static_cast<std::size_t>(r + c)];
  X = oracle::centered(X);
  const auto on = srlvm::fit_all(X, srlvm::PcaObjective{}, 2, OptimConfig{});
  const auto off = srlvm::fit_all(X, srlvm::PcaObjective{}, 2, unregularised(Strategy::newton));
  REQUIRE(on.W.rows() == 2);
  REQUIRE(off.W.rows() == 2);
  CHECK(srlvm::spectral_overlap(off.spectra[0], off.spectra[1]) >= 0.9);
  CHECK(srlvm::spectral_overlap(on.spectra[0], on.spectra[1]) <= 0.1);
}

TEST_CASE("mini-batch fits are deterministic and stop on the full batch") {
  std::mt19937_64 rng(60);
  const Eigen::MatrixXd X = oracle::centered(oracle::laplace_matrix(500, 5, rng));
  OptimConfig c = unregularised(Strategy::steepest_descent);
  c.batch_size = 100;
  c.learning_rate = 0.05;
  c.max_inner_iters = 100;
  const auto a = srlvm::fit_all(X, srlvm::PcaObjective{}, 2, c);
  const auto b = srlvm::fit_all(X, srlvm::PcaObjective{}, 2, c);
  CHECK(a.W == b.W);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(a.diagnostics.components[i].iterations == b.diagnostics.components[i].iterations);
    if (a.diagnostics.components[i].converged)
      CHECK(a.diagnostics.components[i].gradient_norm <= c.tol * 10);
  }
}

TEST_CASE("identical configuration gives identical results") {
  std::mt19937_64 rng(61);
  const Eigen::MatrixXd X = oracle::centered(oracle::laplace_matrix(300, 8, rng));
  const srlvm::NegentropyObjective neg(srlvm::NegentropyConfig::make(srlvm::GFunction::logcosh));
  for (Strategy s : {Strategy::steepest_descent, Strategy::newton, Strategy::bfgs}) {
    OptimConfig c;
    c.strategy = s;
    c.seed = 99;
    c.max_inner_iters = 80;
    const auto a = srlvm::fit_all(X, neg, 3, c);
    const auto b = srlvm::fit_all(X, neg, 3, c);
    CHECK(a.W == b.W);
    for (std::size_t i = 0; i < a.diagnostics.components.size(); ++i) {
      CHECK(a.diagnostics.components[i].objective == b.diagnostics.components[i].objective);
      CHECK(a.diagnostics.components[i].stage_iterations == b.diagnostics.components[i].stage_iterations);
    }
    c.seed = 100;
    CHECK(srlvm::fit_all(X, neg, 1, c).W != a.W.topRows(1));
  }
}
