#include "bql/block_partition.hpp"
#include "bql/diffusion_sim.hpp"
#include "bql/estimation.hpp"
#include "bql/quasi_likelihood.hpp"

#include <benchmark/benchmark.h>

#include <cmath>
#include <map>

namespace {

const bql::SimulatedDataset& dataset(long n) {
    static std::map<long, bql::SimulatedDataset> cache;
    auto it = cache.find(n);
    if (it == cache.end()) {
        bql::SamplingConfig s;
        s.n = n;
        bql::NoiseConfig noise;
        noise.kind = bql::GaussianNoise{{0.001, 0.001}};
        it = cache.emplace(n, bql::simulate_dataset(bql::PathConfig{}, s, noise, 42)).first;
    }
    return it->second;
}

const bql::Vec sigma = (bql::Vec(3) << 1.0, std::sqrt(0.75), 0.5).finished();
const bql::NoiseVar v{0.001, 0.001};

void BM_BuildBlocks(benchmark::State& st) {
    const auto& obs = dataset(st.range(0)).observations;
    const auto cfg = bql::BlockConfig::from_rule(st.range(0));
    for (auto _ : st) benchmark::DoNotOptimize(bql::build_blocks(obs, cfg));
}

void BM_Value(benchmark::State& st) {
    const bql::ConstantDiffusion model;
    const auto blocks = bql::build_blocks(dataset(st.range(0)).observations, bql::BlockConfig::from_rule(st.range(0)));
    const bql::QuasiLikelihood ql(blocks, model);
    for (auto _ : st) benchmark::DoNotOptimize(ql.value(sigma, v));
}

void BM_Gradient(benchmark::State& st) {
    const bql::ConstantDiffusion model;
    const auto blocks = bql::build_blocks(dataset(st.range(0)).observations, bql::BlockConfig::from_rule(st.range(0)));
    const bql::QuasiLikelihood ql(blocks, model);
    for (auto _ : st) benchmark::DoNotOptimize(ql.evaluate(sigma, v, true));
}

void BM_Pipeline(benchmark::State& st) {
    const bql::ConstantDiffusion model;
    const auto& obs = dataset(st.range(0)).observations;
    for (auto _ : st) benchmark::DoNotOptimize(bql::estimate_pipeline(obs, model, {}));
}

}  // namespace

BENCHMARK(BM_BuildBlocks)->Arg(1000)->Arg(5000)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Value)->Arg(1000)->Arg(5000)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Gradient)->Arg(1000)->Arg(5000)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Pipeline)->Arg(1000)->Arg(5000)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
