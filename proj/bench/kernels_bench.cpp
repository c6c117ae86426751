// Copyright (C) 2026 The stylefuse Authors
// SPDX-License-Identifier: Apache-2.0

// OpenMP kernels against the serial reference, plus one full denoiser
// evaluation with each kernel set. Threads come from OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include "stylefuse/denoiser.hpp"
#include "stylefuse/kernels.hpp"
#include "stylefuse/tensor_io.hpp"

namespace {

using namespace stylefuse;

Tensor noise(Shape shape, std::uint64_t seed) { return SeededRng(seed).normal_tensor(std::move(shape), 1.0); }

template <bool Parallel>
void BM_Conv2d(benchmark::State& state) {
    const std::size_t c = std::size_t(state.range(0)), hw = std::size_t(state.range(1));
    const Tensor x = noise({c, hw, hw}, 1), w = noise({c, c, 3, 3}, 2), b = noise({c}, 3);
    for (auto _ : state) {
        benchmark::DoNotOptimize(Parallel ? kernels::conv2d(x, w, b) : kernels::reference::conv2d(x, w, b));
    }
    state.SetItemsProcessed(state.iterations() * std::int64_t(c * c * 9 * hw * hw));
}

template <bool Parallel>
void BM_Attention(benchmark::State& state) {
    const std::size_t n = std::size_t(state.range(0)), d = std::size_t(state.range(1));
    const Tensor q = noise({n, d}, 4), k = noise({n, d}, 5), v = noise({n, d}, 6);
    for (auto _ : state) {
        benchmark::DoNotOptimize(Parallel ? kernels::attention(q, k, v, 0.125f)
                                          : kernels::reference::attention(q, k, v, 0.125f));
    }
    state.SetItemsProcessed(state.iterations() * std::int64_t(2 * n * n * d));
}

template <bool Parallel>
void BM_Matmul(benchmark::State& state) {
    const std::size_t n = std::size_t(state.range(0));
    const Tensor a = noise({n, n}, 7), b = noise({n, n}, 8);
    for (auto _ : state) {
        benchmark::DoNotOptimize(Parallel ? kernels::matmul(a, b) : kernels::reference::matmul(a, b));
    }
    state.SetItemsProcessed(state.iterations() * std::int64_t(n * n * n));
}

template <bool Parallel>
void BM_GroupNorm(benchmark::State& state) {
    const Tensor x = noise({32, std::size_t(state.range(0)), std::size_t(state.range(0))}, 9);
    for (auto _ : state) {
        benchmark::DoNotOptimize(Parallel ? kernels::group_norm(x, 4) : kernels::reference::group_norm(x, 4));
    }
}

template <bool Parallel>
void BM_DenoiserForward(benchmark::State& state) {
    ToyUNetConfig cfg;
    cfg.reference_kernels = !Parallel;
    const ToyUNet net(cfg);
    const std::size_t hw = std::size_t(state.range(0));
    const Tensor z = noise({3, hw, hw}, 10), cond = noise({12, 32}, 11);
    const StepTime t{25, 480, 0.4};
    for (auto _ : state) benchmark::DoNotOptimize(net.predict_noise(z, t, cond));
}

BENCHMARK(BM_Conv2d<true>)->Name("conv2d/parallel")->Args({16, 32})->Args({32, 16});
BENCHMARK(BM_Conv2d<false>)->Name("conv2d/reference")->Args({16, 32})->Args({32, 16});
BENCHMARK(BM_Attention<true>)->Name("attention/parallel")->Args({256, 16})->Args({1024, 8});
BENCHMARK(BM_Attention<false>)->Name("attention/reference")->Args({256, 16})->Args({1024, 8});
BENCHMARK(BM_Matmul<true>)->Name("matmul/parallel")->Arg(128);
BENCHMARK(BM_Matmul<false>)->Name("matmul/reference")->Arg(128);
BENCHMARK(BM_GroupNorm<true>)->Name("group_norm/parallel")->Arg(32);
BENCHMARK(BM_GroupNorm<false>)->Name("group_norm/reference")->Arg(32);
BENCHMARK(BM_DenoiserForward<true>)->Name("unet_forward/parallel")->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DenoiserForward<false>)->Name("unet_forward/reference")->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
