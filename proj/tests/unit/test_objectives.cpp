#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include <srlvm/error.hpp>
#include <srlvm/objectives.hpp>

#include "oracles.hpp"

using srlvm::Contrast;
using srlvm::GFunction;
using srlvm::NegentropyConfig;
using srlvm::NegentropyObjective;
using srlvm::PcaObjective;

namespace {

Eigen::MatrixXd axis_data() {
  Eigen::MatrixXd X(4, 2);
  X << 1, 0, -1, 0, 2, 0, -2, 0;
  return X;
}

Eigen::Vector2d vec2(double a, double b) { return {a, b}; }

double oracle_G(GFunction g, double a, double u) {
  switch (g) {
    case GFunction::logcosh: return oracle::naive_log_cosh(a * u) / a;
    case GFunction::exp: return -std::exp(-0.5 * u * u);
    case GFunction::quartic: return std::pow(u, 4) / 4.0;
  }
  return 0.0;
}

/// -m^2 with m = mean G(w^T x_j) - E[G], evaluated row by row.
double oracle_negentropy(GFunction g, double a, double reference, const Eigen::VectorXd& w,
                         const Eigen::MatrixXd& X) {
  double sum = 0.0;
  for (Eigen::Index r = 0; r < X.rows(); ++r) {
    double z = 0.0;
    for (Eigen::Index c = 0; c < X.cols(); ++c) z += X(r, c) * w(c);
    sum += oracle_G(g, a, z);
  }
  const double m = sum / static_cast<double>(X.rows()) - reference;
  return -m * m;
}

}  // namespace

TEST_CASE("pca value, gradient and hessian on axis data") {
  const PcaObjective pca;
  const auto X = axis_data();
  CHECK(pca.value(vec2(1, 0), X) == doctest::Approx(-2.5));
  CHECK(pca.value(vec2(0, 1), X) == 0.0);
  const Eigen::VectorXd g = pca.gradient(vec2(1, 0), X);
  CHECK(g(0) == doctest::Approx(-5.0));
  CHECK(g(1) == 0.0);
  const Eigen::MatrixXd H = pca.hessian(vec2(1, 0), X);
  CHECK(H(0, 0) == doctest::Approx(-5.0));
  CHECK(H(0, 1) == 0.0);
  CHECK(H(1, 1) == 0.0);
  const auto e = pca.evaluate(vec2(1, 0), X, true);
  CHECK(e.value == doctest::Approx(-2.5));
  CHECK(e.gradient.isApprox(g));
  CHECK(e.hessian.isApprox(H));
}

TEST_CASE("dimension mismatch is rejected") {
  const PcaObjective pca;
  CHECK_THROWS_AS(pca.value(Eigen::Vector3d(1, 0, 0), axis_data()), srlvm::InvalidArgument);
  const NegentropyObjective neg(NegentropyConfig::make(GFunction::exp));
  CHECK_THROWS_AS(neg.gradient(Eigen::Vector3d(1, 0, 0), axis_data()), srlvm::InvalidArgument);
}

TEST_CASE("gaussian reference constants") {
  CHECK(NegentropyConfig::make(GFunction::quartic).gaussian_reference == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(NegentropyConfig::make(GFunction::exp).gaussian_reference ==
        doctest::Approx(-1.0 / std::sqrt(2.0)).epsilon(1e-12));
  const double lc = NegentropyConfig::make(GFunction::logcosh, 1.0).gaussian_reference;
  CHECK(std::abs(lc - 0.37457) <= 1e-4);
  for (double a : {1.0, 1.3, 1.7, 2.0}) {
    const double ref = oracle::gaussian_expectation([a](double u) { return oracle::naive_log_cosh(a * u) / a; });
    CHECK(std::abs(NegentropyConfig::make(GFunction::logcosh, a).gaussian_reference - ref) <= 1e-4);
  }
  const double exp_ref = oracle::gaussian_expectation([](double u) { return -std::exp(-0.5 * u * u); });
  CHECK(std::abs(NegentropyConfig::make(GFunction::exp).gaussian_reference - exp_ref) <= 1e-4);
}

TEST_CASE("logcosh parameter range") {
  CHECK_THROWS_AS(NegentropyConfig::make(GFunction::logcosh, 0.5), srlvm::InvalidArgument);
  CHECK_THROWS_AS(NegentropyConfig::make(GFunction::logcosh, 2.5), srlvm::InvalidArgument);
  CHECK_NOTHROW(NegentropyConfig::make(GFunction::logcosh, 2.0));
}

TEST_CASE("g function names") {
  CHECK(srlvm::parse_gfunction("logcosh") == GFunction::logcosh);
  CHECK(srlvm::parse_gfunction("exp") == GFunction::exp);
  CHECK(srlvm::parse_gfunction("quartic") == GFunction::quartic);
  CHECK_THROWS_AS(srlvm::parse_gfunction("cubic"), srlvm::InvalidArgument);
}

TEST_CASE("make_objective") {
  CHECK(srlvm::make_objective("pca")->name() == "pca");
  CHECK(srlvm::make_objective("negentropy")->name().find("negentropy") != std::string::npos);
  CHECK_THROWS_AS(srlvm::make_objective("kurtosis"), srlvm::InvalidArgument);
}

TEST_CASE("gaussian data has near-zero negentropy") {
  std::mt19937_64 rng(123);
  const Eigen::MatrixXd X = oracle::random_vector(100000, rng);
  const Eigen::VectorXd w = Eigen::VectorXd::Ones(1);
  for (GFunction g : {GFunction::logcosh, GFunction::exp, GFunction::quartic}) {
    const NegentropyObjective neg(NegentropyConfig::make(g));
    CHECK(std::abs(neg.value(w, X)) <= 5e-3);
  }
}

TEST_CASE("negentropy value matches a row-by-row oracle") {
  std::mt19937_64 rng(8);
  const Eigen::MatrixXd X = oracle::centered(oracle::laplace_matrix(300, 5, rng));
  for (GFunction g : {GFunction::logcosh, GFunction::exp, GFunction::quartic}) {
    for (double a : {1.0, 1.5}) {
      if (g != GFunction::logcosh && a != 1.0) continue;
      const auto cfg = NegentropyConfig::make(g, a);
      const NegentropyObjective neg(cfg);
      for (int i = 0; i < 5; ++i) {
        const Eigen::VectorXd w = oracle::random_unit(5, rng);
        const double expect = oracle_negentropy(g, a, cfg.gaussian_reference, w, X);
        CHECK(neg.value(w, X) == doctest::Approx(expect).epsilon(1e-10));
        CHECK(neg.evaluate(w, X, false).value == doctest::Approx(expect).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("property: analytic derivatives match finite differences") {
  std::mt19937_64 rng(2024);
  const Eigen::MatrixXd X = oracle::centered(oracle::laplace_matrix(256, 16, rng));
  std::vector<std::shared_ptr<const srlvm::Objective>> objectives{
      std::make_shared<PcaObjective>(),
      std::make_shared<NegentropyObjective>(NegentropyConfig::make(GFunction::logcosh, 1.0)),
      std::make_shared<NegentropyObjective>(NegentropyConfig::make(GFunction::logcosh, 2.0)),
      std::make_shared<NegentropyObjective>(NegentropyConfig::make(GFunction::exp)),
      std::make_shared<NegentropyObjective>(NegentropyConfig::make(GFunction::quartic))};
  for (const auto& obj : objectives) {
    CAPTURE(obj->name());
    auto f = [&](const Eigen::VectorXd& v) { return obj->value(v, X); };
    for (int i = 0; i < 10; ++i) {
      const Eigen::VectorXd w = oracle::random_unit(16, rng);
      const auto e = obj->evaluate(w, X, true);
      CHECK(oracle::relative_error(e.gradient, oracle::central_gradient(f, w)) <= 1e-5);
      CHECK(oracle::relative_error(e.hessian, oracle::central_hessian(f, w)) <= 1e-3);
      CHECK(oracle::relative_error(obj->gradient(w, X), e.gradient) <= 1e-12);
      CHECK(oracle::relative_error(obj->hessian(w, X), e.hessian) <= 1e-12);
      CHECK((e.hessian - e.hessian.transpose()).norm() <= 1e-10 * e.hessian.norm());
    }
  }
}

TEST_CASE("property: pca value is scale-quadratic") {
  std::mt19937_64 rng(4);
  const PcaObjective pca;
  for (int i = 0; i < 100; ++i) {
    const Eigen::MatrixXd X = oracle::centered(oracle::laplace_matrix(40, 6, rng));
    const Eigen::VectorXd w = oracle::random_vector(6, rng);
    const double c = std::uniform_real_distribution<double>(-10.0, 10.0)(rng);
    CHECK(pca.value(c * w, X) == doctest::Approx(c * c * pca.value(w, X)).epsilon(1e-12));
  }
}

TEST_CASE("property: negentropy value is never positive") {
  std::mt19937_64 rng(6);
  for (GFunction g : {GFunction::logcosh, GFunction::exp, GFunction::quartic}) {
    const NegentropyObjective neg(NegentropyConfig::make(g));
    for (int i = 0; i < 100; ++i) {
      const Eigen::MatrixXd X = oracle::laplace_matrix(30, 4, rng) * std::exp(std::normal_distribution<double>(0, 2)(rng));
      const Eigen::VectorXd w = oracle::random_vector(4, rng);
      CHECK(neg.value(w, X) <= 0.0);
    }
  }
}

TEST_CASE("logcosh is overflow safe") {
  for (double u : {1e-8, 0.3, 5.0, 30.0}) {
    CHECK(srlvm::log_cosh(u) == doctest::Approx(oracle::naive_log_cosh(u)).epsilon(1e-12));
    CHECK(srlvm::log_cosh(-u) == srlvm::log_cosh(u));
  }
  for (double u : {1e3, 1e6, 1e8, -1e8}) {
    CHECK(std::isfinite(srlvm::log_cosh(u)));
    CHECK(srlvm::log_cosh(u) == doctest::Approx(std::abs(u) - std::numbers::ln2).epsilon(1e-15));
  }
  const Contrast c{GFunction::logcosh, 2.0};
  CHECK(std::isfinite(c.G(1e8)));
  CHECK(c.g(1e8) == doctest::Approx(1.0));
  CHECK(c.dg(1e8) == 0.0);

  Eigen::MatrixXd X(2, 1);
  X << 1e8, -1e8;
  const NegentropyObjective neg(NegentropyConfig::make(GFunction::logcosh));
  const auto e = neg.evaluate(Eigen::VectorXd::Ones(1), X, true);
  CHECK(std::isfinite(e.value));
  CHECK(e.gradient.allFinite());
  CHECK(e.hessian.allFinite());
}

TEST_CASE("contrast derivatives agree with differences of G") {
  for (Contrast c : {Contrast{GFunction::logcosh, 1.0}, Contrast{GFunction::logcosh, 1.8},
                     Contrast{GFunction::exp, 1.0}, Contrast{GFunction::quartic, 1.0}}) {
    for (double u : {-2.3, -0.4, 0.0, 0.7, 1.9}) {
      const double h = 1e-5;
      CHECK(c.g(u) == doctest::Approx((c.G(u + h) - c.G(u - h)) / (2 * h)).epsilon(1e-7));
      CHECK(c.dg(u) == doctest::Approx((c.g(u + h) - c.g(u - h)) / (2 * h)).epsilon(1e-7));
    }
  }
}

TEST_CASE("finite-difference gradient examples") {
  auto sq = [](const Eigen::VectorXd& v) { return v.squaredNorm(); };
  const Eigen::VectorXd g = srlvm::finite_difference_gradient(sq, vec2(1, 2), 1e-5);
  CHECK(std::abs(g(0) - 2.0) <= 1e-8);
  CHECK(std::abs(g(1) - 4.0) <= 1e-8);

  auto constant = [](const Eigen::VectorXd&) { return 7.0; };
  CHECK(srlvm::finite_difference_gradient(constant, vec2(0.3, -1)).isZero(0.0));

  const PcaObjective pca;
  const auto X = axis_data();
  auto f = [&](const Eigen::VectorXd& v) { return pca.value(v, X); };
  const Eigen::VectorXd gp = srlvm::finite_difference_gradient(f, vec2(1, 0), 1e-6);
  CHECK(std::abs(gp(0) + 5.0) <= 1e-6);
  CHECK(std::abs(gp(1)) <= 1e-6);
}

TEST_CASE("finite-difference hessian examples") {
  auto sq = [](const Eigen::VectorXd& v) { return v.squaredNorm(); };
  const Eigen::MatrixXd H = srlvm::finite_difference_hessian(sq, Eigen::Vector3d(0.4, -2, 1), 1e-4);
  CHECK((H - 2.0 * Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() <= 1e-5);

  const PcaObjective pca;
  const auto X = axis_data();
  auto f = [&](const Eigen::VectorXd& v) { return pca.value(v, X); };
  Eigen::Matrix2d expect;
  expect << -5, 0, 0, 0;
  CHECK((srlvm::finite_difference_hessian(f, vec2(1, 0), 1e-4) - expect).cwiseAbs().maxCoeff() <= 1e-4);

  auto linear = [](const Eigen::VectorXd& v) { return 3.0 * v(0) - 2.0 * v(1) + 1.0; };
  CHECK(srlvm::finite_difference_hessian(linear, vec2(5, 6), 1e-4).cwiseAbs().maxCoeff() <= 1e-6);

  const Eigen::MatrixXd Hs = srlvm::finite_difference_hessian(
      [](const Eigen::VectorXd& v) { return v(0) * v(0) * v(1) + std::sin(v(1)); }, vec2(0.5, 1.0));
  CHECK(Hs(0, 1) == Hs(1, 0));
}

TEST_CASE("finite differences report the failing coordinate") {
  auto f = [](const Eigen::VectorXd& v) { return v(1) > 1.0 ? std::nan("") : 0.0; };
  try {
    srlvm::finite_difference_gradient(f, vec2(0, 1), 1e-3);
    FAIL("expected an error");
  } catch (const srlvm::NumericalError& ex) {
    CHECK(std::string(ex.what()).find("coordinate 1") != std::string::npos);
  }
  CHECK_THROWS_AS(srlvm::finite_difference_gradient(f, vec2(0, 0), 0.0), srlvm::InvalidArgument);
  CHECK_THROWS_AS(srlvm::finite_difference_hessian(f, vec2(0, 0), -1.0), srlvm::InvalidArgument);
}

TEST_CASE("value-only objectives are wrapped with finite differences") {
  const srlvm::FiniteDifferenceObjective wrapped(
      "pca-fd", [](const Eigen::VectorXd& w, const Eigen::MatrixXd& X) { return -(X * w).squaredNorm() / X.rows(); });
  std::mt19937_64 rng(15);
  const Eigen::MatrixXd X = oracle::centered(oracle::laplace_matrix(64, 5, rng));
  const PcaObjective pca;
  const Eigen::VectorXd w = oracle::random_unit(5, rng);
  CHECK(wrapped.name() == "pca-fd");
  CHECK(wrapped.value(w, X) == doctest::Approx(pca.value(w, X)));
  CHECK(oracle::relative_error(wrapped.gradient(w, X), pca.gradient(w, X)) <= 1e-7);
  CHECK(oracle::relative_error(wrapped.hessian(w, X), pca.hessian(w, X)) <= 1e-5);
  CHECK_THROWS_AS(srlvm::FiniteDifferenceObjective("x", nullptr), srlvm::InvalidArgument);
}
