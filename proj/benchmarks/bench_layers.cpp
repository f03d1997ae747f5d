#include <benchmark/benchmark.h>

#include "bcnn/layers.hpp"
#include "bcnn/rng.hpp"

namespace {

using namespace bcnn;

Tensor random_tensor(Shape shape, std::uint64_t seed) {
    Rng rng(seed);
    Tensor t(shape);
    for (double& v : t.data()) {
        v = rng.uniform_in(-1.0, 1.0);
    }
    return t;
}

// naive six-loop reference, kept here to show the im2col speedup
Tensor naive_conv(const Tensor& input, const ConvSpec& spec, const Tensor& weights,
                  const Tensor& bias) {
    const Shape& s = input.shape();
    const ConvDims dims = conv_output_dims(s.height, s.width, spec);
    Tensor out(Shape{s.batch, dims.out_h, dims.out_w, spec.out_channels});
    for (int b = 0; b < s.batch; ++b) {
        for (int oy = 0; oy < dims.out_h; ++oy) {
            for (int ox = 0; ox < dims.out_w; ++ox) {
                for (int oc = 0; oc < spec.out_channels; ++oc) {
                    double acc = bias.at(0, 0, 0, oc);
                    for (int ky = 0; ky < spec.kernel_h; ++ky) {
                        for (int kx = 0; kx < spec.kernel_w; ++kx) {
                            for (int c = 0; c < s.channels; ++c) {
                                acc += input.at(b, oy + ky, ox + kx, c) * weights.at(oc, ky, kx, c);
                            }
                        }
                    }
                    out.at(b, oy, ox, oc) = acc;
                }
            }
        }
    }
    return out;
}

const ConvSpec kConv{5, 5, 10, 1, 0};

void BM_ConvForwardIm2col(benchmark::State& state) {
    const Tensor input = random_tensor({1, 100, 80, 3}, 1);
    const Tensor weights = random_tensor({10, 5, 5, 3}, 2);
    const Tensor bias = random_tensor({1, 1, 1, 10}, 3);
    for (auto _ : state) {
        Tensor out = conv_forward(input, kConv, weights, bias);
        benchmark::DoNotOptimize(out.data().data());
    }
}
BENCHMARK(BM_ConvForwardIm2col);

void BM_ConvForwardNaive(benchmark::State& state) {
    const Tensor input = random_tensor({1, 100, 80, 3}, 1);
    const Tensor weights = random_tensor({10, 5, 5, 3}, 2);
    const Tensor bias = random_tensor({1, 1, 1, 10}, 3);
    for (auto _ : state) {
        Tensor out = naive_conv(input, kConv, weights, bias);
        benchmark::DoNotOptimize(out.data().data());
    }
}
BENCHMARK(BM_ConvForwardNaive);

void BM_ConvBackward(benchmark::State& state) {
    const Tensor input = random_tensor({1, 100, 80, 3}, 1);
    const Tensor weights = random_tensor({10, 5, 5, 3}, 2);
    const Tensor bias = random_tensor({1, 1, 1, 10}, 3);
    const Tensor grad = random_tensor(conv_forward(input, kConv, weights, bias).shape(), 4);
    for (auto _ : state) {
        ConvGrads grads = conv_backward(input, kConv, weights, grad);
        benchmark::DoNotOptimize(grads.input.data().data());
    }
}
BENCHMARK(BM_ConvBackward);

void BM_LrnForward(benchmark::State& state) {
    const Tensor input = random_tensor({1, 96, 76, 10}, 5);
    const LrnSpec spec{};
    for (auto _ : state) {
        Tensor out = lrn_forward(input, spec);
        benchmark::DoNotOptimize(out.data().data());
    }
}
BENCHMARK(BM_LrnForward);

void BM_MaxpoolForward(benchmark::State& state) {
    const Tensor input = random_tensor({1, 96, 76, 10}, 6);
    const PoolSpec spec{3, 2};
    for (auto _ : state) {
        PoolResult out = maxpool_forward(input, spec);
        benchmark::DoNotOptimize(out.output.data().data());
    }
}
BENCHMARK(BM_MaxpoolForward);

} // namespace
