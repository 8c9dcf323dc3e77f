#include <benchmark/benchmark.h>

#include <random>

#include "evgraph/graph.hpp"

namespace {

std::vector<evgraph::NormalizedEvent> dense_stream(std::size_t count, std::uint16_t beta) {
    std::mt19937_64 rng(17);
    std::vector<evgraph::NormalizedEvent> events(count);
    for (std::size_t i = 0; i < count; ++i) {
        events[i].x = static_cast<std::uint16_t>(rng() % beta);
        events[i].y = static_cast<std::uint16_t>(rng() % beta);
        events[i].t = static_cast<std::uint16_t>(i * beta / count);
        events[i].p = static_cast<std::uint8_t>(rng() % 2);
    }
    return events;
}

void BM_InsertEvent(benchmark::State& state) {
    const auto events = dense_stream(100000, 128);
    std::size_t i = 0;
    evgraph::GraphBuilder builder(128, 3);
    for (auto _ : state) {
        if (i == events.size()) {
            state.PauseTiming();
            builder.reset();
            i = 0;
            state.ResumeTiming();
        }
        benchmark::DoNotOptimize(builder.insert(events[i++]));
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()));
}
BENCHMARK(BM_InsertEvent);

void BM_BuildGraph(benchmark::State& state) {
    const auto events = dense_stream(static_cast<std::size_t>(state.range(0)), 128);
    for (auto _ : state)
        benchmark::DoNotOptimize(evgraph::build_graph(events, 128, 3));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BuildGraph)->Arg(1000)->Arg(10000)->Arg(100000);

} // namespace
