#include <benchmark/benchmark.h>

#include "bcnn/network.hpp"
#include "bcnn/rng.hpp"
#include "bcnn/synth.hpp"

namespace {

using namespace bcnn;

void BM_DeskTrainStep(benchmark::State& state) {
    const int batch_size = static_cast<int>(state.range(0));
    const ArchitectureSpec desk = ArchitectureSpec::desk();
    Rng rng(1);
    Network net = Network::initialized(desk, 1.0, rng);
    SgdState sgd = SgdState::zeros_like(net);
    TrainConfig config;
    config.batch_size = batch_size;

    Tensor batch(Shape{batch_size, 100, 80, 3});
    for (double& v : batch.data()) {
        v = rng.uniform();
    }
    std::vector<int> labels(static_cast<std::size_t>(batch_size));
    for (std::size_t i = 0; i < labels.size(); ++i) {
        labels[i] = static_cast<int>(i % 2);
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(train_step(net, batch, labels, config, sgd));
    }
    state.SetItemsProcessed(state.iterations() * batch_size);
}
BENCHMARK(BM_DeskTrainStep)->Arg(1)->Arg(8);

void BM_DeskFeatureExtraction(benchmark::State& state) {
    const ArchitectureSpec desk = ArchitectureSpec::desk();
    Rng rng(2);
    const Network net = Network::initialized(desk, 1.0, rng);
    Tensor image(Shape{1, 100, 80, 3});
    for (double& v : image.data()) {
        v = rng.uniform();
    }
    for (auto _ : state) {
        std::vector<double> features = extract_features(net, image);
        benchmark::DoNotOptimize(features.data());
    }
}
BENCHMARK(BM_DeskFeatureExtraction);

void BM_SynthesizePair(benchmark::State& state) {
    Rng rng(3);
    for (auto _ : state) {
        auto pairs = synthesize_stereo(1, static_cast<int>(state.range(0)), rng);
        benchmark::DoNotOptimize(pairs.data());
    }
}
BENCHMARK(BM_SynthesizePair)->Arg(0)->Arg(1);

} // namespace
