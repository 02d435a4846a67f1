#include <benchmark/benchmark.h>

#include "pif/bootstrap_pi.hpp"
#include "pif/conformal.hpp"
#include "pif/kde.hpp"
#include "pif/rng.hpp"
#include "pif/synthetic.hpp"

using namespace pif;

namespace {

SyntheticData bench_data(std::size_t n) {
  return generate({TrendKind::linear, n, 4, NoiseSpec::gaussian(1.0), 17});
}

void BM_RidgeFit(benchmark::State& state) {
  const SyntheticData data = bench_data(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(fit(LearnerSpec::ridge(0.5), data.data));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_RidgeFit)->Arg(200)->Arg(2000);

void BM_KdeDensity(benchmark::State& state) {
  Rng rng(3);
  std::vector<double> samples(static_cast<std::size_t>(state.range(0)));
  for (auto& z : samples) z = rng.normal();
  const KdeModel model = fit_kde(samples, 0.3);
  double u = -3.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(kde_log_density(model, u));
    u += 0.01;
    if (u > 3.0) u = -3.0;
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_KdeDensity)->Arg(100)->Arg(1000);

void BM_SplitConformalInterval(benchmark::State& state) {
  const SyntheticData data = bench_data(500);
  const SplitConformal model = SplitConformal::fit(LearnerSpec::ridge(0.5), data.data, 7);
  const std::vector<double> x(4, 0.2);
  const GridRequest request{5.0, static_cast<int>(state.range(0)), {}};
  for (auto _ : state) {
    benchmark::DoNotOptimize(model.interval(x, request, 0.1));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SplitConformalInterval)->Arg(100)->Arg(1000);

void BM_CrossConformalFit(benchmark::State& state) {
  const SyntheticData data = bench_data(500);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        CrossConformal::fit(LearnerSpec::ridge(0.5), data.data,
                            static_cast<int>(state.range(0)), 11));
  }
}
BENCHMARK(BM_CrossConformalFit)->Arg(5)->Arg(20);

void BM_PivotEnsemble(benchmark::State& state) {
  const SyntheticData data = bench_data(200);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        train_ensemble(LearnerSpec::ridge(0.5), data.data, static_cast<int>(state.range(0)), 3));
  }
}
BENCHMARK(BM_PivotEnsemble)->Arg(50)->Arg(200);

}  // namespace

BENCHMARK_MAIN();
