#include <benchmark/benchmark.h>

#include <vector>

#include "wavereg/bettor.hpp"
#include "wavereg/regression.hpp"
#include "wavereg/rng.hpp"
#include "wavereg/wavelet.hpp"

namespace {

using namespace wavereg;

void BettorUpdate(benchmark::State& state) {
  SplitMix64 rng(1, 0);
  CoinBettor bettor(0.0, 1.0);
  for (auto _ : state) {
    const double g = 2.0 * rng.next_double() - 1.0;
    bettor.update(g, 1.0);
    benchmark::DoNotOptimize(bettor.predict());
  }
}
BENCHMARK(BettorUpdate);

void HaarAnalyze(benchmark::State& state) {
  const HaarBasis basis = HaarBasis::make(1);
  const auto depth = static_cast<int>(state.range(0));
  auto f = [](const double* x) { return x[0] < 0.37 ? 1.0 : -0.5; };
  for (auto _ : state) {
    auto tree = analyze(basis, f, 0, depth);
    benchmark::DoNotOptimize(tree.alpha[0]);
  }
}
BENCHMARK(HaarAnalyze)->DenseRange(4, 12, 4);

void RegressionRound(benchmark::State& state) {
  RegressionConfig config;
  config.horizon = 4096;
  config.depth = static_cast<int>(state.range(0));
  const HaarBasis basis = HaarBasis::make(1);
  OnlineWaveletRegressor reg(config, basis);
  SplitMix64 rng(1, 0);
  for (auto _ : state) {
    const double x = rng.next_double();
    const double y = (x < 0.5 ? 0.5 : -0.5) + 0.1 * rng.next_gaussian();
    benchmark::DoNotOptimize(reg.step(&x, y));
  }
}
BENCHMARK(RegressionRound)->Arg(6)->Arg(10)->Arg(14);

}  // namespace

BENCHMARK_MAIN();
