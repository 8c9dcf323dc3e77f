#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "evgraph/config.hpp"
#include "evgraph/events.hpp"

namespace evgraph {

struct ClockConfig {
    std::uint64_t frequency_hz = 200'000'000;

    double cycle_ns() const { return 1e9 / static_cast<double>(frequency_hz); }
    double cycles_to_us(std::uint64_t cycles) const {
        return static_cast<double>(cycles) * 1e6 / static_cast<double>(frequency_hz);
    }
};

// Slice duration of a layer operating on a `size`-wide temporal grid.
double delta_t_us(std::uint32_t time_window_us, int size);
std::uint64_t delta_t_cycles(std::uint32_t time_window_us, int size, ClockConfig clock);

// Cycles to convolve one vertex: 9 vector multiplications (self-loop plus
// up to 8 same-slice edges; the 9 previous-slice edges run on the second
// multiplier bank in parallel), each producing m output elements per cycle.
// m must divide dim.
std::uint64_t cc_vertex(int dim, int m);

// Cycles to process one whole temporal channel.
std::uint64_t cc_channel(int dim, int m, int size);

// Per-layer plan of the synchronous part.
struct LayerPlan {
    std::string name;
    int size = 0;
    double delta_t_us = 0;
    std::uint64_t delta_t_cycles = 0;
    int dim = 0;
    int m = 1;
    std::uint64_t cc_vertex_cycles = 0;
    std::uint64_t cc_channel_cycles = 0;
    double duration_us = 0;
};

// Smallest power-of-two divisor m of dim with
// 9 * dim / m * size^2 <= delta_t cycles, for conv2..conv5.
// Throws PlanError when even m = dim cannot meet the bound.
std::vector<LayerPlan> select_multipliers(const ModelConfig& cfg, ClockConfig clock);

struct SimOptions {
    std::size_t fifo_depth = 8192;
    double ps_latency_us = 0.0; // head cost on the processing system
};

struct SimReport {
    std::vector<LayerPlan> plans;
    double throughput_meps = 0;       // frequency / 15 / 1e6
    std::uint64_t events = 0;          // accepted events
    std::uint64_t events_dropped = 0;  // out of sensor bounds
    std::uint64_t front_end_cycles_total = 0;
    std::size_t fifo_peak = 0;
    std::uint64_t fifo_dropped = 0;
    std::array<std::size_t, 8> fifo_profile{}; // occupancy at stream checkpoints
    std::uint64_t schedule_violations = 0;
    std::uint64_t predictions = 0;
    double per_event_latency_us = 0; // stage-delay sum, see README
    double pl_latency_ms = 0;        // last window end -> feature map ready
    double pl_ps_latency_ms = 0;
};

// Transaction-level simulation: FIFO occupancy of the 15-cycle front end,
// pipelined asynchronous convolution, slice accumulation heartbeat, and the
// planned channel processing of conv2..conv5 behind triple-buffer barriers.
SimReport simulate(const EventData& data, const ModelConfig& cfg, ClockConfig clock = {},
                   SimOptions options = {});

// Human-readable table or machine key/value format.
void print_report(const SimReport& report, std::ostream& out, bool machine_format);

} // namespace evgraph
