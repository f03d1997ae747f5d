#include <benchmark/benchmark.h>

#include "bcnn/rng.hpp"
#include "bcnn/tensor.hpp"

namespace {

using namespace bcnn;

void BM_Matmul(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    Rng rng(1);
    Matrix a(n, n), b(n, n);
    for (double& v : a.data) {
        v = rng.uniform();
    }
    for (double& v : b.data) {
        v = rng.uniform();
    }
    for (auto _ : state) {
        Matrix c = matmul(a.view(), b.view());
        benchmark::DoNotOptimize(c.data.data());
    }
    state.SetItemsProcessed(state.iterations() * 2LL * n * n * n);
}
BENCHMARK(BM_Matmul)->Arg(64)->Arg(128)->Arg(256);

void BM_SliceConcat(benchmark::State& state) {
    Rng rng(2);
    const Tensor image = Tensor::gaussian({1, 500, 400, 3}, 1.0, rng);
    for (auto _ : state) {
        const Tensor left = slice_width(image, 0, 200);
        const Tensor right = slice_width(image, 200, 400);
        const Tensor joined = concat({left, right}, Axis::Width);
        benchmark::DoNotOptimize(joined.data().data());
    }
}
BENCHMARK(BM_SliceConcat);

void BM_GaussianInit(benchmark::State& state) {
    Rng rng(3);
    for (auto _ : state) {
        Tensor t = Tensor::gaussian({1, 100, 80, 3}, 0.1, rng);
        benchmark::DoNotOptimize(t.data().data());
    }
}
BENCHMARK(BM_GaussianInit);

} // namespace
