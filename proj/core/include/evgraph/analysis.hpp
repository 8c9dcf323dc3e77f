#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "evgraph/config.hpp"
#include "evgraph/events.hpp"

namespace evgraph {

// Vertex/edge statistics of one convolution layer's input graph.
struct LayerGraphStats {
    std::string layer;
    std::uint64_t nodes = 0;
    std::uint64_t edges = 0;
    double avg_neighbours = 0; // K = E / N, 0 for an empty graph
    int f_in = 0;
    int f_out = 0;
};

// Operation counts of one PointNet-style convolution over a whole graph:
//   per edge, the linear map costs 2 * F_in * F_out;
//   aggregation contributes F_out * K per edge (K the average degree);
//   the per-edge max fold adds F_out.
// Total: E * F_out * (2 * F_in + K + 1).
struct FlopsBreakdown {
    double mlp = 0;
    double aggr = 0;
    double updt = 0;
    double total = 0;
};

FlopsBreakdown flops_breakdown(std::uint64_t edges, int f_in, int f_out, double k);
double flops_total(std::uint64_t edges, int f_in, int f_out, double k);

// Exact integer forms, scaled by N so the fractional K = E/N cancels.
// Used to compare against instrumented operation counters without rounding.
std::uint64_t flops_mlp_scaled(std::uint64_t edges, int f_in, int f_out, std::uint64_t nodes);
std::uint64_t flops_aggr_scaled(std::uint64_t edges, int f_out);
std::uint64_t flops_updt_scaled(std::uint64_t edges, int f_out, std::uint64_t nodes);
std::uint64_t flops_total_scaled(std::uint64_t edges, int f_in, int f_out,
                                 std::uint64_t nodes);

// MFLOPs per event. Throws Error when event_count is zero.
double flops_per_event(double total_flops, std::uint64_t event_count);

struct FlopsReport {
    std::vector<LayerGraphStats> layers; // conv1..conv5
    std::vector<FlopsBreakdown> flops;
    double total = 0;
    std::uint64_t events = 0; // graph vertices at the input layer
    double mflops_per_event = 0;
};

// Builds the per-layer graphs for the stream and applies the accounting.
FlopsReport analyze_flops(const EventData& data, const ModelConfig& cfg);

// CSV: layer,N,E,K,flops_mlp,flops_aggr,flops_updt,flops_tot
void write_flops_csv(const FlopsReport& report, std::ostream& out);

// Cumulative vertex/edge reduction relative to the input graph after each
// pooling stage. Ratios are 1 for empty graphs.
struct ReductionStats {
    double pool1_vertices = 1;
    double pool1_edges = 1;
    double pool2_vertices = 1;
    double pool2_edges = 1;
};

ReductionStats reduction_stats(const FlopsReport& report);

} // namespace evgraph
