#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "evgraph/error.hpp"

namespace evgraph {

using FeatureVector = std::vector<std::uint8_t>;

// Quantized affine layer. BatchNorm is assumed pre-folded into weights and
// bias by whoever produced the weight file. The requantization step maps
// 32-bit accumulators back into unsigned 8 bits:
//
//   q = clamp(round(acc * requant_multiplier / 2^requant_shift) + zero_point)
//
// with half-away-from-zero rounding, no floating point anywhere.
// activation_min is the ReLU floor applied during aggregation.
struct QuantizedLinear {
    int in_dim = 0;  // includes the 3 position inputs for conv layers
    int out_dim = 0;
    std::vector<std::int8_t> weights; // row-major [out_dim][in_dim]
    std::vector<std::int32_t> bias;   // [out_dim]
    std::int32_t requant_multiplier = 1;
    int requant_shift = 0;
    std::uint8_t zero_point = 0;
    std::uint8_t activation_min = 0;
};

// Relative position between connected vertices, oriented neighbour-minus-
// centre, so dt <= 0 on directed edges. Ordering is (dt, dy, dx) so edge
// sets have one canonical order.
struct Offset3 {
    std::int32_t dx = 0;
    std::int32_t dy = 0;
    std::int64_t dt = 0;

    bool operator==(const Offset3&) const = default;
    friend bool operator<(const Offset3& a, const Offset3& b) {
        if (a.dt != b.dt) return a.dt < b.dt;
        if (a.dy != b.dy) return a.dy < b.dy;
        return a.dx < b.dx;
    }
};

// Maps the stored polarity bit onto the signed layer input (-1 or +1).
inline std::int32_t polarity_input(std::uint8_t p) {
    return p ? 1 : -1;
}

// Bit-exact requantization of one accumulator.
std::uint8_t requantize(std::int32_t acc, const QuantizedLinear& layer) noexcept;

// One message of the convolution: W * concat(attr, dx, dy, dt) + bias.
// attr carries the in_dim - 3 feature inputs already mapped to integers
// (raw unsigned activations, or +-1 for polarity at the first layer).
std::vector<std::int32_t> conv_message(const QuantizedLinear& layer,
                                       std::span<const std::int32_t> attr, Offset3 rel);
std::vector<std::int32_t> conv_message(const QuantizedLinear& layer,
                                       const FeatureVector& attr, Offset3 rel);

// Folds requantized messages with an element-wise running maximum.
// finish() applies the ReLU floor. Aggregation order does not affect the
// result, so messages can arrive in any order.
class ConvAccumulator {
public:
    explicit ConvAccumulator(const QuantizedLinear& layer);

    void add(std::span<const std::int32_t> attr, Offset3 rel);
    void add(const FeatureVector& attr, Offset3 rel);
    FeatureVector finish() const;

private:
    const QuantizedLinear* layer_;
    std::vector<std::uint8_t> best_;
};

// Full vertex update for feature layers: self-loop at offset (0,0,0) plus
// one message per neighbour, max-aggregated and floored at activation_min.
FeatureVector conv_vertex(const QuantizedLinear& layer, const FeatureVector& self_attr,
                          std::span<const std::pair<FeatureVector, Offset3>> neighbours);

enum class PoolPosition { divide, average };
enum class PoolDims { two_d, three_d };

struct PoolSpec {
    int g = 4;
    PoolPosition position = PoolPosition::divide;
    PoolDims dims = PoolDims::three_d;
};

// Graph with per-vertex feature vectors, as produced by a convolution
// layer. Positions stay on the integer grid of the current SIZE.
struct FeatureGraph {
    struct Node {
        std::int32_t x = 0;
        std::int32_t y = 0;
        std::int64_t t = 0;
        FeatureVector feat;
    };
    std::uint16_t size = 0;
    std::vector<Node> nodes;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges; // src -> dst, dst older

    Offset3 edge_offset(std::size_t e) const {
        const Node& s = nodes[edges[e].first];
        const Node& d = nodes[edges[e].second];
        return {s.x - d.x, s.y - d.y, s.t - d.t};
    }
};

// Cluster pooling in divide-position mode: vertices grouped by floor
// division of their position, features max-merged, positions replaced by
// the cluster index, inter-cluster edges merged and intra-cluster edges
// dropped. 2D mode clusters spatially only (output t = 0). Average-position
// mode lives in the float reference path (reference.hpp).
// Throws Error if g does not divide the grid size.
FeatureGraph maxpool(const FeatureGraph& graph, const PoolSpec& spec);

// The 17 offsets an edge can carry after divide-mode pooling of a radius-3
// graph: 8 in the same time slice plus 9 in the previous one.
const std::vector<Offset3>& pooled_offset_candidates();
bool in_pooled_candidate_set(const Offset3& off);

// A SIZE x SIZE grid of optional feature vectors (one temporal slice).
struct FeatureGrid {
    struct Cell {
        bool used = false;
        FeatureVector feat;
    };
    std::uint16_t size = 0;
    std::vector<Cell> cells;

    explicit FeatureGrid(std::uint16_t n = 0)
        : size(n), cells(static_cast<std::size_t>(n) * n) {}
    Cell& at(std::uint16_t x, std::uint16_t y) {
        return cells[static_cast<std::size_t>(y) * size + x];
    }
    const Cell& at(std::uint16_t x, std::uint16_t y) const {
        return cells[static_cast<std::size_t>(y) * size + x];
    }
};

// Final spatial readout: element-wise max over the most recent 4x4 slices
// (one whole time window), empty cells filled with the activation floor.
// Output is the 16 cell vectors concatenated row-major, 16 * dim bytes.
std::vector<std::uint8_t> pool_out(std::span<const FeatureGrid> last_slices, int dim,
                                   std::uint8_t floor_value);

// Classifier head: integer affine map over the flattened 16 x dim features.
std::vector<std::int32_t> classify_scores(const QuantizedLinear& head,
                                          std::span<const std::uint8_t> features);

// Lowest index wins ties.
int argmax_lowest(std::span<const std::int32_t> scores);

} // namespace evgraph
