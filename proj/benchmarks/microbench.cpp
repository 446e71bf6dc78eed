#include <vector>

#include <benchmark/benchmark.h>

#include "sdrnet/mnist.hpp"
#include "sdrnet/model.hpp"
#include "sdrnet/optim.hpp"
#include "sdrnet/rng.hpp"
#include "sdrnet/tape.hpp"
#include "sdrnet/tensor.hpp"
#include "sdrnet/train.hpp"

namespace {

using namespace sdrnet;

Network default_mlp(LayerKind kind, float sigma_init) {
    RngStream init(1);
    return Network(mlp_spec(kind, 784, {100, 100, 100}, 10), init,
                   sigma_init);
}

Tensor random_batch(int rows, int cols, std::uint64_t seed) {
    RngStream rng(seed);
    Tensor x({rows, cols});
    for (float& v : x.data) {
        v = static_cast<float>(rng.uniform());
    }
    return x;
}

void BM_Matmul(benchmark::State& state) {
    RngStream rng(1);
    Tensor a({64, 784});
    rng.fill_normal(a.data);
    Tensor b({784, 100});
    rng.fill_normal(b.data);
    Tensor out({64, 100});
    for (auto _ : state) {
        matmul_into(a, b, out);
        benchmark::DoNotOptimize(out.data.data());
    }
}
BENCHMARK(BM_Matmul);

void BM_FillNormal(benchmark::State& state) {
    RngStream rng(1);
    std::vector<float> buf(99410);  // one full set of default-MLP weights
    for (auto _ : state) {
        rng.fill_normal(buf);
        benchmark::DoNotOptimize(buf.data());
    }
}
BENCHMARK(BM_FillNormal);

void BM_SampleWeights(benchmark::State& state) {
    RngStream init(1);
    RngStream noise(2);
    Network net = default_mlp(LayerKind::StochasticLinear, 0.05f);
    const StochasticParameter& param = net.layers.front().weight;
    for (auto _ : state) {
        auto [w, eps] = sample_weights(param, noise);
        benchmark::DoNotOptimize(w.data.data());
    }
}
BENCHMARK(BM_SampleWeights);

void BM_SampledForward(benchmark::State& state) {
    Network net = default_mlp(LayerKind::StochasticLinear, 0.05f);
    RngStream noise(3);
    const Tensor x = random_batch(64, 784, 4);
    for (auto _ : state) {
        Tensor logits = net.forward_logits(x, ForwardMode::Sampled, noise);
        benchmark::DoNotOptimize(logits.data.data());
    }
}
BENCHMARK(BM_SampledForward);

void BM_LearnableTrainStep(benchmark::State& state) {
    Network net = default_mlp(LayerKind::StochasticLinear, 0.05f);
    RngStream noise(5);
    const Tensor x = random_batch(64, 784, 6);
    std::vector<int> labels(64);
    RngStream label_rng(7);
    for (int& y : labels) y = static_cast<int>(label_rng.next_below(10));

    for (auto _ : state) {
        Tape tape;
        const NodeId xn = tape.constant(x);
        std::vector<LayerNodes> nodes;
        const NodeId logits = net.forward_tape(tape, xn, ForwardMode::Sampled,
                                               noise, true, &nodes);
        const NodeId loss = tape.softmax_xent(logits, labels);
        tape.backward(loss);
        for (std::size_t l = 0; l < net.layers.size(); ++l) {
            sdr_learnable_step(net.layers[l].weight, tape.grad(nodes[l].w_mu),
                               tape.grad(nodes[l].w_sigma), 0.01f);
            sdr_learnable_step(net.layers[l].bias, tape.grad(nodes[l].b_mu),
                               tape.grad(nodes[l].b_sigma), 0.01f);
            clamp_variances(net.layers[l].weight, 0.0f, 1.0f);
            clamp_variances(net.layers[l].bias, 0.0f, 1.0f);
        }
        benchmark::DoNotOptimize(net.layers.back().weight.mu.data.data());
    }
}
BENCHMARK(BM_LearnableTrainStep);

void BM_Evaluate256(benchmark::State& state) {
    Network net = default_mlp(LayerKind::StochasticLinear, 0.05f);
    Dataset data;
    data.images = random_batch(256, 784, 8);
    data.image_rows = 28;
    data.image_cols = 28;
    RngStream label_rng(9);
    for (int i = 0; i < 256; ++i) {
        data.labels.push_back(static_cast<int>(label_rng.next_below(10)));
    }
    for (auto _ : state) {
        const double acc =
            evaluate(net, data, ForwardMode::Sampled, 11, 256);
        benchmark::DoNotOptimize(acc);
    }
}
BENCHMARK(BM_Evaluate256);

}  // namespace
