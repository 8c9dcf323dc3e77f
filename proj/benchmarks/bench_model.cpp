#include <benchmark/benchmark.h>

#include <random>

#include "evgraph/hwsim.hpp"
#include "evgraph/model.hpp"

namespace {

evgraph::ModelConfig base128() {
    evgraph::ModelConfig cfg;
    cfg.variant = evgraph::Variant::base;
    cfg.beta = 128;
    cfg.time_window_us = 100000;
    return cfg;
}

evgraph::EventData grid_stream(std::size_t count) {
    std::mt19937_64 rng(29);
    evgraph::EventData data;
    data.events.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        data.events[i].t = static_cast<std::uint32_t>(i * 100000 / count);
        data.events[i].x = static_cast<std::uint16_t>(rng() % 128);
        data.events[i].y = static_cast<std::uint16_t>(rng() % 128);
        data.events[i].p = static_cast<std::uint8_t>(rng() % 2);
    }
    return data;
}

void BM_RunInference(benchmark::State& state) {
    const auto cfg = base128();
    const auto weights =
        evgraph::gen_weights(evgraph::Variant::base, 2, 3);
    const auto data = grid_stream(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state)
        benchmark::DoNotOptimize(evgraph::run_inference(data, cfg, weights));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_RunInference)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_Simulate(benchmark::State& state) {
    const auto cfg = base128();
    const auto data = grid_stream(59000); // one window at the N-Cars-like rate
    for (auto _ : state)
        benchmark::DoNotOptimize(evgraph::simulate(data, cfg));
    state.SetItemsProcessed(state.iterations() * 59000);
}
BENCHMARK(BM_Simulate)->Unit(benchmark::kMillisecond);

} // namespace
