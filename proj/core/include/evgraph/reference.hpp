#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "evgraph/model.hpp"

// Reference implementations kept structurally independent of the streaming
// pipeline: the whole graph is built first, all layers run globally, and
// time is sliced afterwards. run_inference is checked against this route
// bit-exactly; the float variant mirrors the arithmetic without rounding
// and carries instrumented operation counts.
namespace evgraph::ref {

// Quantized convolution applied to every vertex of a completed graph.
FeatureGraph conv_all(const QuantizedLinear& layer, const FeatureGraph& graph);

// First layer: polarity attributes, edge list from the event graph.
FeatureGraph conv1_all(const QuantizedLinear& layer, const EventGraph& graph);

// Whole-graph inference with the exact integer arithmetic of the streaming
// path. Identical results to run_inference on any time-ordered stream.
InferenceResult run_offline(const EventData& data, const ModelConfig& cfg,
                            const ModelWeights& weights,
                            std::optional<std::uint64_t> duration_us = std::nullopt);

// ---- float reference -----------------------------------------------------

// Float mirror of a quantized layer: same weights and clamping bounds, the
// requant step applied as one exact multiply instead of a rounded shift.
struct FloatLinear {
    int in_dim = 0;
    int out_dim = 0;
    std::vector<float> weights;
    std::vector<float> bias;
    float scale = 1.0f;          // requant_multiplier / 2^requant_shift
    float zero_point = 0.0f;
    float activation_min = 0.0f;
};

FloatLinear to_float(const QuantizedLinear& layer);

std::vector<float> conv_message_ref(const FloatLinear& layer,
                                    std::span<const float> attr, Offset3 rel);
float requantize_ref(const FloatLinear& layer, float acc);

// Executed-work tally of one convolution layer in the float path.
struct OpCounts {
    std::uint64_t nodes = 0;
    std::uint64_t edge_messages = 0; // excludes self-loops
    std::uint64_t mults = 0;         // multiplications inside edge messages
    std::uint64_t adds = 0;          // additions inside edge messages
    std::uint64_t maxes = 0;         // per-component max folds of edge messages
};

struct FloatPrediction {
    std::uint64_t t_end_us = 0;
    std::vector<float> scores;
    int label = 0;
    bool warmup = false;
};

struct FloatResult {
    std::vector<FloatPrediction> predictions;
    std::array<OpCounts, 5> ops; // conv1..conv5
};

FloatResult run_offline_float(const EventData& data, const ModelConfig& cfg,
                              const ModelWeights& weights,
                              std::optional<std::uint64_t> duration_us = std::nullopt);

// ---- pooling ablation variants --------------------------------------------

// Graph with real-valued positions, for the average-position and 2D pooling
// modes that exist only in this reference path.
struct FloatGraph {
    struct Node {
        std::array<double, 3> pos{};
        std::vector<float> feat;
    };
    double size = 0;
    std::vector<Node> nodes;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
};

// Supports every PoolSpec combination: divide or average positions, 2D or
// 3D clustering.
FloatGraph maxpool_ref(const FloatGraph& graph, const PoolSpec& spec);

// ---- topology-only pass for the analysis module ---------------------------

struct LayerTopology {
    std::string name;
    std::uint64_t nodes = 0;
    std::uint64_t edges = 0;
};

// Vertex/edge counts of each convolution layer's input graph (conv2/conv3
// share the first pooled graph, conv4/conv5 the second).
std::array<LayerTopology, 5> layer_topology(const EventData& data, const ModelConfig& cfg);

} // namespace evgraph::ref
