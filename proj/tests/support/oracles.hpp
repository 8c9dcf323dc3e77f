#pragma once

// Independent oracles backing the test suites. Each one re-derives the
// expected result through a different route than the implementation:
// direct definitions, wide-integer arithmetic, or exhaustive enumeration.

#include <cstdint>
#include <random>
#include <set>
#include <vector>

#include "evgraph/events.hpp"
#include "evgraph/graph.hpp"
#include "evgraph/layers.hpp"

namespace oracle {

// Brute-force replay of the neighbourhood-matrix semantics straight from
// the definition: for each new event, scan earlier events backwards and
// connect to the most recent event per pixel within the distance bound.
struct OracleEdge {
    std::uint32_t src, dst;
    std::int32_t dx, dy;
    std::int64_t dt;

    bool operator==(const OracleEdge&) const = default;
    bool operator<(const OracleEdge& o) const {
        if (src != o.src) return src < o.src;
        if (dst != o.dst) return dst < o.dst;
        return false;
    }
};

std::vector<OracleEdge> brute_force_edges(std::span<const evgraph::NormalizedEvent> events,
                                          std::uint16_t beta, int radius);

// Wide-integer requantization using division instead of shifts.
std::uint8_t requantize_wide(std::int32_t acc, std::int32_t multiplier, int shift,
                             std::uint8_t zero_point);

// Wide-integer affine map, accumulated in 128 bits.
std::vector<std::int64_t> dot_wide(const evgraph::QuantizedLinear& layer,
                                   std::span<const std::int32_t> inputs);

// All pooled offsets a pre-pool offset can map to, enumerated over every
// in-cluster placement of the source vertex.
std::set<evgraph::Offset3> pooled_offsets_by_enumeration(const evgraph::Offset3& pre,
                                                         int g);

// Deterministic random event stream on the beta grid (coordinates already
// normalized-scale, timestamps non-decreasing).
std::vector<evgraph::Event> random_grid_stream(std::mt19937_64& rng, std::size_t count,
                                               std::uint16_t grid,
                                               std::uint32_t duration_us);

} // namespace oracle
