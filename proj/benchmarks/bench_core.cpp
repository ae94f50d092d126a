#include <cmath>
#include <numbers>
#include <random>

#include <benchmark/benchmark.h>

#include <srlvm/model.hpp>

namespace {

Eigen::VectorXd random_vector(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> d(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = d(rng);
  return v;
}

srlvm::Signal noisy_sines(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.1);
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / 200.0;
    x[i] = std::sin(2.0 * std::numbers::pi * 10.0 * t) + 0.8 * std::sin(2.0 * std::numbers::pi * 25.0 * t) + noise(rng);
  }
  return srlvm::Signal(std::move(x), 200.0);
}

Eigen::MatrixXd centered_data(std::size_t n, std::size_t window) {
  return srlvm::center(srlvm::hankelise(noisy_sines(n, 1), srlvm::HankelConfig{window, 1}), false).values;
}

void BM_PowerSpectrum(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const Eigen::VectorXd w = random_vector(state.range(0), rng);
  for (auto _ : state) benchmark::DoNotOptimize(srlvm::power_spectrum(w));
}
BENCHMARK(BM_PowerSpectrum)->Arg(8)->Arg(64)->Arg(257)->Arg(1024);

void BM_PenaltyGradient(benchmark::State& state) {
  std::mt19937_64 rng(2);
  const Eigen::Index n = state.range(0);
  srlvm::SpectralState spectral(n, 10.0);
  for (int j = 0; j < 4; ++j) spectral.append(srlvm::power_spectrum(random_vector(n, rng)));
  const Eigen::VectorXd w = random_vector(n, rng);
  for (auto _ : state) benchmark::DoNotOptimize(srlvm::penalty_gradient(w, spectral));
}
BENCHMARK(BM_PenaltyGradient)->Arg(64)->Arg(257)->Arg(1024);

void BM_DenseSpectralOperator(benchmark::State& state) {
  std::mt19937_64 rng(3);
  const Eigen::Index n = state.range(0);
  srlvm::SpectralState spectral(n, 10.0);
  for (int j = 0; j < 4; ++j) spectral.append(srlvm::power_spectrum(random_vector(n, rng)));
  const Eigen::VectorXd w = random_vector(n, rng);
  for (auto _ : state) {
    const Eigen::VectorXd g = 2.0 * spectral.alpha() * (srlvm::spectral_operator(spectral.weights()) * w);
    benchmark::DoNotOptimize(g.data());
  }
}
BENCHMARK(BM_DenseSpectralOperator)->Arg(64)->Arg(257)->Arg(1024);

void BM_NegentropyEvaluate(benchmark::State& state) {
  const auto window = static_cast<std::size_t>(state.range(0));
  const Eigen::MatrixXd X = centered_data(8000, window);
  const auto objective = srlvm::make_objective("negentropy");
  std::mt19937_64 rng(4);
  Eigen::VectorXd w = random_vector(X.cols(), rng);
  w.normalize();
  for (auto _ : state) benchmark::DoNotOptimize(objective->evaluate(w, X, true));
}
BENCHMARK(BM_NegentropyEvaluate)->Arg(16)->Arg(64);

void BM_FitComponent(benchmark::State& state) {
  const Eigen::MatrixXd X = centered_data(8000, 64);
  const auto objective = srlvm::make_objective("negentropy");
  const srlvm::Strategy strategy = state.range(0) == 0 ? srlvm::Strategy::newton : srlvm::Strategy::bfgs;
  srlvm::OptimConfig config;
  config.strategy = strategy;
  for (auto _ : state) {
    srlvm::SpectralState spectral(X.cols(), config.sumt_alpha0);
    benchmark::DoNotOptimize(srlvm::fit_component(X, *objective, spectral, config, {}));
  }
  state.SetLabel(std::string(srlvm::to_string(strategy)));
}
BENCHMARK(BM_FitComponent)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_FitModel(benchmark::State& state) {
  const srlvm::Signal s = noisy_sines(8000, 5);
  const auto objective = srlvm::make_objective("negentropy");
  for (auto _ : state)
    benchmark::DoNotOptimize(
        srlvm::FittedModel::fit(s, srlvm::HankelConfig{64, 1}, objective, 4, srlvm::OptimConfig{}));
}
BENCHMARK(BM_FitModel)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
