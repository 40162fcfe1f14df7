// Copyright (C) 2026 The lsynth Authors
// SPDX-License-Identifier: Apache-2.0

// Serial reference vs OpenMP kernels over growing box sets.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "lsynth/kernels.hpp"

namespace {

using lsynth::BBox;

std::vector<BBox> boxes(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> pos(0.0, 0.7);
    std::uniform_real_distribution<double> side(0.02, 0.3);
    std::vector<BBox> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = pos(gen), y = pos(gen);
        out.emplace_back(x, y, x + side(gen), y + side(gen));
    }
    return out;
}

template <auto Kernel>
void iou_matrix(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto a = boxes(n, 1);
    const auto b = boxes(n, 2);
    for (auto _ : state) benchmark::DoNotOptimize(Kernel(a, b));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n));
}

template <auto Kernel>
void overlap_ratios(benchmark::State& state) {
    const auto set = boxes(static_cast<std::size_t>(state.range(0)), 3);
    for (auto _ : state) benchmark::DoNotOptimize(Kernel(set));
    state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}

BENCHMARK(iou_matrix<lsynth::kernels::iou_matrix_serial>)->RangeMultiplier(4)->Range(16, 1024);
BENCHMARK(iou_matrix<lsynth::kernels::iou_matrix_omp>)->RangeMultiplier(4)->Range(16, 1024);
BENCHMARK(overlap_ratios<lsynth::kernels::overlap_ratios_serial>)->RangeMultiplier(4)->Range(16, 1024);
BENCHMARK(overlap_ratios<lsynth::kernels::overlap_ratios_omp>)->RangeMultiplier(4)->Range(16, 1024);

}  // namespace

BENCHMARK_MAIN();
