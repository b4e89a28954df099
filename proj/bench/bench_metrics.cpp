// Compares the OpenMP pixel kernels against the serial reference
// implementations kept for testing.

#include <random>

#include <benchmark/benchmark.h>

#include "triad/expert_metrics.hpp"

using namespace triad;

namespace {

AnomalyMap random_map(std::uint32_t side, std::uint32_t seed) {
    AnomalyMap map;
    map.width = side;
    map.height = side;
    map.scores.resize(static_cast<std::size_t>(side) * side);
    std::mt19937 rng(seed);
    std::uniform_real_distribution<float> dist(0.0f, 1.0f);
    for (auto& v : map.scores) v = dist(rng);
    return map;
}

BinaryMask random_mask(std::uint32_t side, std::uint32_t seed) {
    BinaryMask mask;
    mask.width = side;
    mask.height = side;
    mask.bits.resize(static_cast<std::size_t>(side) * side);
    std::mt19937 rng(seed);
    for (auto& b : mask.bits) b = rng() % 4 == 0;
    return mask;
}

void BM_normalize_parallel(benchmark::State& state) {
    const auto map = random_map(static_cast<std::uint32_t>(state.range(0)), 1);
    for (auto _ : state) benchmark::DoNotOptimize(metrics::normalize_map(map));
    state.SetItemsProcessed(state.iterations() * map.scores.size());
}

void BM_normalize_serial(benchmark::State& state) {
    const auto map = random_map(static_cast<std::uint32_t>(state.range(0)), 1);
    for (auto _ : state) benchmark::DoNotOptimize(metrics::serial::normalize_map(map));
    state.SetItemsProcessed(state.iterations() * map.scores.size());
}

void BM_pixel_rates_parallel(benchmark::State& state) {
    const auto side = static_cast<std::uint32_t>(state.range(0));
    const auto pred = random_mask(side, 2);
    const auto gt = random_mask(side, 3);
    for (auto _ : state) benchmark::DoNotOptimize(metrics::pixel_rates(pred, gt));
    state.SetItemsProcessed(state.iterations() * pred.bits.size());
}

void BM_pixel_rates_serial(benchmark::State& state) {
    const auto side = static_cast<std::uint32_t>(state.range(0));
    const auto pred = random_mask(side, 2);
    const auto gt = random_mask(side, 3);
    for (auto _ : state) benchmark::DoNotOptimize(metrics::serial::pixel_rates(pred, gt));
    state.SetItemsProcessed(state.iterations() * pred.bits.size());
}

}  // namespace

BENCHMARK(BM_normalize_serial)->Arg(256)->Arg(1024)->Arg(4096);
BENCHMARK(BM_normalize_parallel)->Arg(256)->Arg(1024)->Arg(4096);
BENCHMARK(BM_pixel_rates_serial)->Arg(256)->Arg(1024)->Arg(4096);
BENCHMARK(BM_pixel_rates_parallel)->Arg(256)->Arg(1024)->Arg(4096);

BENCHMARK_MAIN();
