// SPDX-License-Identifier: Apache-2.0

#include "mmw/beamforming.hpp"
#include "mmw/estimation.hpp"
#include "mmw/harness.hpp"
#include "mmw/numerics.hpp"

#include <benchmark/benchmark.h>

using namespace mmw;

namespace {

CMatrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
    RngStream rng(seed);
    CMatrix m(rows, cols);
    rng.fill_complex_normal(m);
    return m;
}

std::vector<CMatrix> random_channel(int k, int m, int s, std::uint64_t seed) {
    std::vector<CMatrix> h;
    for (int nu = 0; nu < s; ++nu) {
        h.push_back(random_matrix(k, m, seed + nu));
    }
    return h;
}

} // namespace

static void BM_Svd(benchmark::State& state) {
    const int k = static_cast<int>(state.range(0));
    const CMatrix a = random_matrix(k, 4 * k, 1);
    for (auto _ : state) {
        benchmark::DoNotOptimize(svd(a, SvdMode::Thin));
    }
}
BENCHMARK(BM_Svd)->Arg(4)->Arg(16);

static void BM_SvdPrecoder(benchmark::State& state) {
    const CMatrix h = random_matrix(4, 8, 2);
    for (auto _ : state) {
        benchmark::DoNotOptimize(svd_precoder(h, 2, 100.0));
    }
}
BENCHMARK(BM_SvdPrecoder);

static void BM_WaterFill(benchmark::State& state) {
    std::vector<double> g(static_cast<std::size_t>(state.range(0)));
    RngStream rng(3);
    for (double& x : g) {
        x = 0.01 + rng.uniform();
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(water_fill(g, 10.0));
    }
}
BENCHMARK(BM_WaterFill)->Arg(2)->Arg(16);

static void BM_EstimateFd(benchmark::State& state) {
    const int s = static_cast<int>(state.range(0));
    const std::vector<CMatrix> h = random_channel(4, 8, s, 4);
    const CMatrix book = unitary_dft_rows(4, 4);
    RngStream rng(5);
    for (auto _ : state) {
        benchmark::DoNotOptimize(estimate_fd(h, book, 10.0, 4, rng));
    }
    state.SetItemsProcessed(state.iterations() * s);
}
BENCHMARK(BM_EstimateFd)->Arg(64)->Arg(512);

static void BM_EstimateTd(benchmark::State& state) {
    const int s = static_cast<int>(state.range(0));
    const std::vector<CMatrix> h = random_channel(4, 8, s, 6);
    const TdEstimator td(s, 1, 4, user_td_offsets(0, 4));
    RngStream rng(7);
    for (auto _ : state) {
        benchmark::DoNotOptimize(estimate_td(h, td, 10.0, 4, rng));
    }
    state.SetItemsProcessed(state.iterations() * s);
}
BENCHMARK(BM_EstimateTd)->Arg(64)->Arg(512);

static void BM_DeskTrial(benchmark::State& state) {
    ScenarioConfig cfg = make_preset("desk");
    cfg.num_blocks = 10;
    const LinkEngine engine(cfg, trajectory_plans(cfg), LinkOptions{});
    std::uint64_t trial = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(engine.run_trial(trial++));
    }
}
BENCHMARK(BM_DeskTrial)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
