// Serial reference vs OpenMP kernels. Run with OMP_NUM_THREADS set to compare scaling.

#include <benchmark/benchmark.h>

#include "sandpile/experiments.hpp"
#include "sandpile/fourier.hpp"
#include "sandpile/recurrent.hpp"

namespace {

using sandpile::Execution;

Execution mode(const benchmark::State& state) {
    return state.range(0) == 0 ? Execution::serial : Execution::parallel;
}

void BM_EnumerateRecurrent3x3(benchmark::State& state) {
    const auto lat = sandpile::build_lattice({3, 3});
    for (auto _ : state) benchmark::DoNotOptimize(sandpile::enumerate_recurrent(lat, mode(state)));
}
BENCHMARK(BM_EnumerateRecurrent3x3)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_StabilizeRandom3x3(benchmark::State& state) {
    const auto lat = sandpile::build_lattice({3, 3});
    sandpile::Rng rng(1, 0);
    std::vector<std::int64_t> heights(lat.size());
    for (auto _ : state) {
        for (auto& h : heights) h = static_cast<std::int64_t>(rng.index(16));
        benchmark::DoNotOptimize(sandpile::kernel::stabilize(lat, heights, {}));
    }
}
BENCHMARK(BM_StabilizeRandom3x3);

void BM_ChainStep2Site(benchmark::State& state) {
    const auto lat = sandpile::build_lattice({2});
    auto chain = sandpile::make_chain(lat, sandpile::cbtw_from_quanta(sandpile::max_stable(lat)),
                                      {0.2, 0.8, false}, sandpile::Rng(1, 0));
    for (auto _ : state) benchmark::DoNotOptimize(sandpile::chain_step(lat, chain));
}
BENCHMARK(BM_ChainStep2Site);

void BM_TvDecay(benchmark::State& state) {
    const sandpile::RecurrentSet set(sandpile::build_lattice({2}));
    const auto zero = sandpile::cbtw_from_quanta(sandpile::zero_config(set.lattice()));
    for (auto _ : state) {
        benchmark::DoNotOptimize(sandpile::tv_decay(set, zero, {0.2, 0.8, false}, {1, 4, 16, 64}, 20000,
                                                    sandpile::Binning{8}, 7, mode(state)));
    }
}
BENCHMARK(BM_TvDecay)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_FourierMonteCarlo(benchmark::State& state) {
    sandpile::FourierCase c{std::sqrt(2.0) - 1.0, {1, 1}, {0.0, 0.0}, 100, 1.0};
    for (auto _ : state) benchmark::DoNotOptimize(sandpile::fourier_mu_N_mc(c, 100000, 3, mode(state)));
}
BENCHMARK(BM_FourierMonteCarlo)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
