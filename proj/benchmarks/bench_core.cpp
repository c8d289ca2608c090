#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "hdconf/backtest.hpp"
#include "hdconf/factor_model.hpp"
#include "hdconf/fanova.hpp"
#include "hdconf/pinball.hpp"
#include "hdconf/synthetic.hpp"

using namespace hdconf;

namespace {

FunctionalPanel panel(std::size_t n, std::size_t t, std::size_t j) {
    SyntheticSpec spec;
    spec.regions = n;
    spec.times = t;
    spec.ages = j;
    return synthesize_panel(spec, 1).panel;
}

void BM_MedianPolish(benchmark::State& state) {
    const auto p = panel(static_cast<std::size_t>(state.range(0)), 50, 101);
    for (auto _ : state) benchmark::DoNotOptimize(median_polish(p));
}
BENCHMARK(BM_MedianPolish)->Arg(12)->Arg(47);

void BM_FactorModel(benchmark::State& state) {
    const auto p = panel(47, static_cast<std::size_t>(state.range(0)), 101);
    const auto d = median_polish(p);
    const auto w = trapezoid_weights(p.age_grid());
    for (auto _ : state) benchmark::DoNotOptimize(fit_factor_model(d.residuals, w));
}
BENCHMARK(BM_FactorModel)->Arg(30)->Arg(60);

void BM_PinballLagged(benchmark::State& state) {
    const auto n = static_cast<int>(state.range(0));
    std::mt19937_64 rng(3);
    std::exponential_distribution<double> e(1.0);
    std::vector<double> s(static_cast<std::size_t>(n + 3));
    for (double& v : s) v = e(rng);
    Eigen::MatrixXd x(n, 4);
    std::vector<double> y(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        x(i, 0) = 1.0;
        for (int c = 1; c < 4; ++c) x(i, c) = s[static_cast<std::size_t>(i + 3 - c)];
        y[static_cast<std::size_t>(i)] = s[static_cast<std::size_t>(i + 3)];
    }
    for (auto _ : state) benchmark::DoNotOptimize(pinball_fit(x, y, 0.95));
}
BENCHMARK(BM_PinballLagged)->Arg(40)->Arg(200);

void BM_Backtest(benchmark::State& state) {
    const auto p = panel(10, 60, 21);
    auto plan = proportional_plan(1, 60);
    for (auto _ : state) benchmark::DoNotOptimize(expanding_backtest(p, plan, 1));
}
BENCHMARK(BM_Backtest)->Unit(benchmark::kMillisecond)->Iterations(1);

}  // namespace

BENCHMARK_MAIN();
