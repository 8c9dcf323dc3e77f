#include <benchmark/benchmark.h>

#include <random>

#include "evgraph/layers.hpp"

namespace {

evgraph::QuantizedLinear random_layer(int in, int out) {
    std::mt19937_64 rng(23);
    evgraph::QuantizedLinear l;
    l.in_dim = in;
    l.out_dim = out;
    l.weights.resize(static_cast<std::size_t>(in) * out);
    for (auto& w : l.weights)
        w = static_cast<std::int8_t>(static_cast<int>(rng() % 255) - 127);
    l.bias.resize(static_cast<std::size_t>(out));
    for (auto& b : l.bias)
        b = static_cast<std::int32_t>(rng() % 2048) - 1024;
    l.requant_multiplier = 21000;
    l.requant_shift = 18;
    l.zero_point = 16;
    l.activation_min = 16;
    return l;
}

void BM_Requantize(benchmark::State& state) {
    const auto l = random_layer(19, 32);
    std::int32_t acc = -123456;
    for (auto _ : state) {
        benchmark::DoNotOptimize(evgraph::requantize(acc, l));
        acc += 97;
    }
}
BENCHMARK(BM_Requantize);

// Post-pool worst case: 17 neighbours plus the self-loop.
void BM_ConvVertex(benchmark::State& state) {
    const int dim = static_cast<int>(state.range(0));
    const auto l = random_layer(dim + 3, dim);
    std::mt19937_64 rng(5);
    evgraph::FeatureVector self(static_cast<std::size_t>(dim));
    for (auto& v : self)
        v = static_cast<std::uint8_t>(rng() % 256);
    std::vector<std::pair<evgraph::FeatureVector, evgraph::Offset3>> nbs;
    for (const evgraph::Offset3& off : evgraph::pooled_offset_candidates()) {
        evgraph::FeatureVector f(static_cast<std::size_t>(dim));
        for (auto& v : f)
            v = static_cast<std::uint8_t>(rng() % 256);
        nbs.emplace_back(std::move(f),
                         evgraph::Offset3{-off.dx, -off.dy, -off.dt});
    }
    for (auto _ : state)
        benchmark::DoNotOptimize(evgraph::conv_vertex(l, self, nbs));
}
BENCHMARK(BM_ConvVertex)->Arg(32)->Arg(64);

} // namespace
