// Wall-clock microbenchmarks for the hot compute paths. Informational only;
// no acceptance thresholds live here.

#include <benchmark/benchmark.h>

#include "u2net/loss.hpp"
#include "u2net/network.hpp"
#include "u2net/ops.hpp"
#include "u2net/rsu.hpp"

namespace {

using namespace u2net;

template <typename T>
Tensor<T> random_input(Shape shape, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<T> v(static_cast<std::size_t>(shape_numel(shape)));
    for (auto& x : v) x = static_cast<T>(rng.uniform(0.0, 1.0));
    return Tensor<T>::from_data(std::move(shape), std::move(v));
}

void BM_conv2d_forward_f32(benchmark::State& state) {
    const std::int64_t size = state.range(0);
    auto x = random_input<float>({1, 64, size, size}, 1);
    auto w = random_input<float>({64, 64, 3, 3}, 2);
    auto b = random_input<float>({64}, 3);
    Conv2dOpts opts;
    opts.padding = 1;
    NoGradGuard guard;
    for (auto _ : state) {
        auto y = conv2d(x, w, std::optional<Tensor<float>>(b), opts);
        benchmark::DoNotOptimize(y.values().data());
    }
    state.SetItemsProcessed(state.iterations() * size * size * 64 * 64 * 9);
}
BENCHMARK(BM_conv2d_forward_f32)->Arg(32)->Arg(64)->Arg(128);

void BM_rsu7_forward_f32(benchmark::State& state) {
    Rng rng(4);
    auto block = RsuBlock<float>::build(RsuSpec{7, 3, 16, 64, false}, rng);
    block.set_training(false);
    auto x = random_input<float>({1, 3, 160, 160}, 5);
    NoGradGuard guard;
    for (auto _ : state) {
        auto y = block.forward(x);
        benchmark::DoNotOptimize(y.values().data());
    }
}
BENCHMARK(BM_rsu7_forward_f32);

void BM_small_net_forward_64(benchmark::State& state) {
    auto net = Network<float>::build(preset_config("small"), 7);
    net.set_training(false);
    auto x = random_input<float>({1, 3, 64, 64}, 6);
    NoGradGuard guard;
    for (auto _ : state) {
        auto out = net.forward(x);
        benchmark::DoNotOptimize(out.fused_prob.values().data());
    }
}
BENCHMARK(BM_small_net_forward_64);

void BM_small_net_train_step_64(benchmark::State& state) {
    auto net = Network<float>::build(preset_config("small"), 7);
    auto params = net.parameters();
    auto x = random_input<float>({2, 3, 64, 64}, 8);
    auto gt = random_input<float>({2, 1, 64, 64}, 9);
    for (auto& v : gt.values()) v = v > 0.5f ? 1.0f : 0.0f;
    for (auto _ : state) {
        auto out = net.forward(x);
        auto loss = total_loss(out, gt, LossWeights{}, LossReduction::mean);
        loss.backward();
        for (auto& p : params) p.tensor.zero_grad();
        benchmark::DoNotOptimize(loss.item());
    }
}
BENCHMARK(BM_small_net_train_step_64);

} // namespace

BENCHMARK_MAIN();
