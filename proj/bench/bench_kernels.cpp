#include "sparsegrp/experiments.hpp"
#include "sparsegrp/kernels.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace sparsegrp;

namespace {

GroupedDesign random_design(Index n, Index p, Index k) {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> nd;
    Matrix g(n, p * k);
    for (Index j = 0; j < g.cols(); ++j) {
        for (Index i = 0; i < n; ++i) {
            g(i, j) = nd(rng);
        }
    }
    return GroupedDesign(std::move(g), Partition::uniform(p, k));
}

void BM_SigmaSerial(benchmark::State& st) {
    const GroupedDesign d = random_design(st.range(0), 20, 8);
    const Vector lam = Vector::LinSpaced(20, 0.1, 2.0);
    for (auto _ : st) {
        benchmark::DoNotOptimize(kernels::serial::assemble_sigma_y(d, lam, 0.5));
    }
}

void BM_SigmaParallel(benchmark::State& st) {
    const GroupedDesign d = random_design(st.range(0), 20, 8);
    const Vector lam = Vector::LinSpaced(20, 0.1, 2.0);
    for (auto _ : st) {
        benchmark::DoNotOptimize(kernels::parallel::assemble_sigma_y(d, lam, 0.5));
    }
}

void BM_GramSerial(benchmark::State& st) {
    const GroupedDesign d = random_design(400, st.range(0) / 8, 8);
    for (auto _ : st) {
        benchmark::DoNotOptimize(kernels::serial::gram(d.matrix()));
    }
}

void BM_GramParallel(benchmark::State& st) {
    const GroupedDesign d = random_design(400, st.range(0) / 8, 8);
    for (auto _ : st) {
        benchmark::DoNotOptimize(kernels::parallel::gram(d.matrix()));
    }
}

void BM_MonteCarlo(benchmark::State& st) {
    McConfig c;
    c.runs = 4;
    c.estimators = {"hgla", "mkl"};
    c.threads = static_cast<int>(st.range(0));
    for (auto _ : st) {
        benchmark::DoNotOptimize(run_monte_carlo(c));
    }
}

}  // namespace

BENCHMARK(BM_SigmaSerial)->Arg(100)->Arg(400)->Arg(1000);
BENCHMARK(BM_SigmaParallel)->Arg(100)->Arg(400)->Arg(1000);
BENCHMARK(BM_GramSerial)->Arg(80)->Arg(320);
BENCHMARK(BM_GramParallel)->Arg(80)->Arg(320);
BENCHMARK(BM_MonteCarlo)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
