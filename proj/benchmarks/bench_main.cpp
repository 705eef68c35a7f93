#include <benchmark/benchmark.h>

#include "feval/baselines.hpp"
#include "feval/empirical_bayes.hpp"
#include "feval/inference.hpp"
#include "feval/synthetic.hpp"

using namespace feval;

namespace {

synthetic::SyntheticStudy study(Eigen::Index k, Eigen::Index f) {
  synthetic::SyntheticStudySpec spec;
  spec.treatments = k;
  spec.forecasters = f;
  spec.forecaster_bias = 1.0;
  spec.missing_rate = 0.1;
  spec.seed = 42;
  return synthetic::generate(spec);
}

}  // namespace

static void BM_EstimateAll(benchmark::State& state) {
  const auto s = study(state.range(0), 30);
  const auto sampler = PosteriorSampler::parametric(fit_parametric_eb(s.effects), 1);
  const ModelSet models{{"null", {"null", null_effect_predictions(s.effects.size()), {}}}};
  const std::vector<EstimandSpec> specs{EstimandSpec::bias(),
                                        EstimandSpec::forecaster_risk(LossKind::squared_error),
                                        EstimandSpec::comparative("null", LossKind::squared_error)};
  InferenceOptions opts;
  opts.samples = 2000;
  opts.threads = 1;
  for (auto _ : state) benchmark::DoNotOptimize(estimate_all(s.forecasts, sampler, specs, models, opts));
  state.SetItemsProcessed(state.iterations() * opts.samples);
}
BENCHMARK(BM_EstimateAll)->Arg(20)->Arg(53)->Arg(200)->Unit(benchmark::kMillisecond);

static void BM_ParametricFit(benchmark::State& state) {
  const auto s = study(state.range(0), 5);
  for (auto _ : state) benchmark::DoNotOptimize(fit_parametric_eb(s.effects));
}
BENCHMARK(BM_ParametricFit)->Arg(50)->Arg(500)->Unit(benchmark::kMicrosecond);

static void BM_NpmleFit(benchmark::State& state) {
  const auto s = study(state.range(0), 5);
  for (auto _ : state) benchmark::DoNotOptimize(fit_nonparametric_eb(s.effects));
}
BENCHMARK(BM_NpmleFit)->Arg(50)->Arg(500)->Unit(benchmark::kMillisecond);

static void BM_GibbsRegression(benchmark::State& state) {
  const Eigen::Index k = 44;
  const Eigen::VectorXd original = Eigen::VectorXd::LinSpaced(k, 0.05, 0.8);
  Rng rng(3);
  Eigen::VectorXd y(k);
  for (Eigen::Index i = 0; i < k; ++i) y[i] = 0.4 * original[i] + rng.normal(0.0, 0.1);
  const Eigen::VectorXd n = Eigen::VectorXd::Constant(k, 100.0);
  const Eigen::VectorXd alpha = Eigen::VectorXd::Constant(k, 0.05);
  for (auto _ : state) {
    benchmark::DoNotOptimize(gibbs_regression_replication(original, y, n, alpha, static_cast<int>(state.range(0)), 1));
  }
}
BENCHMARK(BM_GibbsRegression)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
