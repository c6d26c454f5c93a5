#include <benchmark/benchmark.h>

#include <random>

#include "ivjump/eventstudy.hpp"
#include "ivjump/jumps.hpp"
#include "ivjump/pricing.hpp"
#include "ivjump/simulator.hpp"
#include "ivjump/surface.hpp"

using namespace ivjump;

static void BM_ImpliedVol(benchmark::State& state) {
  const double price = bs_price({1300, 1400, 0.5, 0.02, 0.015, 0.22, Right::Call});
  for (auto _ : state) benchmark::DoNotOptimize(implied_vol(price, 1300, 1400, 0.5, 0.02, 0.015, Right::Call));
}
BENCHMARK(BM_ImpliedVol);

static void BM_FitSurface(benchmark::State& state) {
  std::vector<IvPoint> pts;
  const double step = 0.6 / static_cast<double>(state.range(0) - 1);
  for (const double t : {0.25, 0.5, 0.75}) {
    for (int i = 0; i < state.range(0); ++i) {
      const double m = 0.75 + step * i;
      pts.push_back({m, t, 0.2 - 0.2 * (m - 1) + 0.5 * (m - 1) * (m - 1)});
    }
  }
  for (auto _ : state) benchmark::DoNotOptimize(fit_surface(pts, 1e-6));
}
BENCHMARK(BM_FitSurface)->Arg(13)->Arg(25);

static void BM_SmileExtraction(benchmark::State& state) {
  std::vector<IvPoint> pts;
  for (const double t : {0.25, 0.5, 0.75}) {
    for (int i = 0; i < 25; ++i) pts.push_back({0.75 + 0.025 * i, t, 0.2 + 0.01 * t});
  }
  const auto model = fit_surface(pts, 1e-6);
  for (auto _ : state) benchmark::DoNotOptimize(extract_smiles(model));
}
BENCHMARK(BM_SmileExtraction);

static void BM_LeeMykland(benchmark::State& state) {
  SimConfig c;
  c.days = static_cast<int>(state.range(0));
  c.generate_quotes = false;
  const MarketSimulator sim(c);
  const auto returns = log_returns(sim.panel());
  for (auto _ : state) benchmark::DoNotOptimize(lee_mykland_statistics(returns, 270));
  state.SetItemsProcessed(state.iterations() * state.range(0) * kSessionLength);
}
BENCHMARK(BM_LeeMykland)->Arg(250);

static void BM_Bootstrap(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> z;
  std::vector<std::vector<double>> curves(350, std::vector<double>(61));
  for (auto& c : curves)
    for (auto& v : c) v = z(rng);
  for (auto _ : state) benchmark::DoNotOptimize(bootstrap_band(curves, 7000, 0.90, 1));
}
BENCHMARK(BM_Bootstrap)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
