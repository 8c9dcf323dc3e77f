#include "evgraph/reference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

namespace evgraph::ref {

namespace {

std::vector<NormalizedEvent> normalize_stream(const StreamPlan& plan) {
    std::vector<NormalizedEvent> out;
    out.reserve(plan.stream.size());
    for (const Event& ev : plan.stream)
        if (auto ne = normalize(ev, plan.sensor))
            out.push_back(*ne);
    return out;
}

} // namespace

FeatureGraph conv1_all(const QuantizedLinear& layer, const EventGraph& graph) {
    FeatureGraph out;
    out.size = graph.size;
    out.nodes.reserve(graph.vertices.size());
    for (std::uint32_t v = 0; v < graph.vertices.size(); ++v) {
        const Vertex& vert = graph.vertices[v];
        ConvAccumulator acc(layer);
        const std::int32_t self_attr[1] = {polarity_input(vert.polarity)};
        acc.add(std::span<const std::int32_t>(self_attr), Offset3{});
        for (const Edge& e : graph.edges_of(v)) {
            const std::int32_t nb_attr[1] = {polarity_input(graph.vertices[e.dst].polarity)};
            acc.add(std::span<const std::int32_t>(nb_attr), Offset3{-e.dx, -e.dy, -e.dt});
        }
        out.nodes.push_back({vert.x, vert.y, vert.t, acc.finish()});
    }
    out.edges.reserve(graph.edges.size());
    for (const Edge& e : graph.edges)
        out.edges.emplace_back(e.src, e.dst);
    return out;
}

FeatureGraph conv_all(const QuantizedLinear& layer, const FeatureGraph& graph) {
    // Group out-edges per source vertex.
    std::vector<std::vector<std::uint32_t>> adj(graph.nodes.size());
    for (std::uint32_t e = 0; e < graph.edges.size(); ++e)
        adj[graph.edges[e].first].push_back(graph.edges[e].second);

    FeatureGraph out;
    out.size = graph.size;
    out.edges = graph.edges;
    out.nodes.reserve(graph.nodes.size());
    for (std::uint32_t v = 0; v < graph.nodes.size(); ++v) {
        const auto& node = graph.nodes[v];
        ConvAccumulator acc(layer);
        acc.add(node.feat, Offset3{});
        for (std::uint32_t d : adj[v]) {
            const auto& nb = graph.nodes[d];
            acc.add(nb.feat, Offset3{nb.x - node.x, nb.y - node.y, nb.t - node.t});
        }
        out.nodes.push_back({node.x, node.y, node.t, acc.finish()});
    }
    return out;
}

InferenceResult run_offline(const EventData& data, const ModelConfig& cfg,
                            const ModelWeights& weights,
                            std::optional<std::uint64_t> duration_us) {
    cfg.validate();
    weights.validate(cfg);
    const StreamPlan plan = plan_stream(data, cfg, duration_us);
    const std::vector<NormalizedEvent> normalized = normalize_stream(plan);

    InferenceResult res;
    res.events_in = plan.stream.size();
    res.events_dropped = plan.stream.size() - normalized.size();

    const EventGraph g0 = build_graph(normalized, cfg.beta, cfg.radius);
    FeatureGraph g = conv1_all(weights.conv(0), g0);
    g = maxpool(g, PoolSpec{4, PoolPosition::divide, PoolDims::three_d});
    g = conv_all(weights.conv(1), g);
    g = conv_all(weights.conv(2), g);
    g = maxpool(g, PoolSpec{2, PoolPosition::divide, PoolDims::three_d});
    g = conv_all(weights.conv(3), g);
    g = conv_all(weights.conv(4), g);

    const int kernel = cfg.pool_out_kernel();
    const int dim = weights.conv(4).out_dim;
    const std::uint64_t n_pred = plan.n_predictions;

    std::vector<FeatureGrid> grids(n_pred, FeatureGrid(4));
    for (const auto& node : g.nodes) {
        const std::int64_t out_slice = node.t / kernel;
        if (out_slice < 0 || static_cast<std::uint64_t>(out_slice) >= n_pred)
            throw Error("offline reference: vertex beyond the prediction horizon");
        auto& cell = grids[static_cast<std::size_t>(out_slice)].at(
            static_cast<std::uint16_t>(node.x / kernel),
            static_cast<std::uint16_t>(node.y / kernel));
        if (!cell.used) {
            cell.used = true;
            cell.feat = node.feat;
        } else {
            for (int c = 0; c < dim; ++c)
                cell.feat[static_cast<std::size_t>(c)] =
                    std::max(cell.feat[static_cast<std::size_t>(c)],
                             node.feat[static_cast<std::size_t>(c)]);
        }
    }

    for (std::uint64_t j = 0; j < n_pred; ++j) {
        const std::size_t first = j >= 3 ? static_cast<std::size_t>(j - 3) : 0;
        const std::span<const FeatureGrid> window(grids.data() + first,
                                                  static_cast<std::size_t>(j) - first + 1);
        const std::vector<std::uint8_t> map =
            pool_out(window, dim, weights.conv(4).activation_min);
        Prediction p;
        p.t_end_us = (j + 1) * cfg.prediction_period_us();
        p.scores = classify_scores(weights.head(), map);
        p.label = argmax_lowest(p.scores);
        p.warmup = j < 3;
        res.predictions.push_back(std::move(p));
    }
    return res;
}

// ---- float reference -------------------------------------------------------

FloatLinear to_float(const QuantizedLinear& layer) {
    FloatLinear f;
    f.in_dim = layer.in_dim;
    f.out_dim = layer.out_dim;
    f.weights.assign(layer.weights.begin(), layer.weights.end());
    f.bias.assign(layer.bias.begin(), layer.bias.end());
    f.scale = static_cast<float>(static_cast<double>(layer.requant_multiplier) /
                                 std::exp2(layer.requant_shift));
    f.zero_point = layer.zero_point;
    f.activation_min = layer.activation_min;
    return f;
}

std::vector<float> conv_message_ref(const FloatLinear& layer, std::span<const float> attr,
                                    Offset3 rel) {
    if (static_cast<int>(attr.size()) + 3 != layer.in_dim)
        throw Error("conv_message_ref: attribute length does not match layer input");
    std::vector<float> acc(static_cast<std::size_t>(layer.out_dim));
    const float pos[3] = {static_cast<float>(rel.dx), static_cast<float>(rel.dy),
                          static_cast<float>(rel.dt)};
    for (int o = 0; o < layer.out_dim; ++o) {
        const float* row = layer.weights.data() + static_cast<std::size_t>(o) * layer.in_dim;
        float sum = layer.bias[static_cast<std::size_t>(o)];
        for (std::size_t k = 0; k < attr.size(); ++k)
            sum += row[k] * attr[k];
        for (int k = 0; k < 3; ++k)
            sum += row[attr.size() + static_cast<std::size_t>(k)] * pos[k];
        acc[static_cast<std::size_t>(o)] = sum;
    }
    return acc;
}

float requantize_ref(const FloatLinear& layer, float acc) {
    float v = acc * layer.scale + layer.zero_point;
    return std::clamp(v, 0.0f, 255.0f);
}

namespace {

struct FNode {
    std::int64_t x = 0, y = 0, t = 0;
    std::vector<float> feat;
};

struct FGraph {
    std::vector<FNode> nodes;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
};

std::vector<float> fold_max(const FloatLinear& layer, const std::vector<std::vector<float>>& msgs,
                            OpCounts* ops, std::size_t edge_msgs) {
    std::vector<float> best(static_cast<std::size_t>(layer.out_dim),
                            -std::numeric_limits<float>::infinity());
    for (const auto& m : msgs)
        for (std::size_t i = 0; i < best.size(); ++i)
            best[i] = std::max(best[i], requantize_ref(layer, m[i]));
    for (auto& v : best)
        v = std::max(v, layer.activation_min);
    if (ops) {
        ops->nodes += 1;
        ops->edge_messages += edge_msgs;
        ops->mults += edge_msgs * static_cast<std::uint64_t>(layer.in_dim) *
                      static_cast<std::uint64_t>(layer.out_dim);
        ops->adds += edge_msgs * static_cast<std::uint64_t>(layer.in_dim) *
                     static_cast<std::uint64_t>(layer.out_dim);
        ops->maxes += edge_msgs * static_cast<std::uint64_t>(layer.out_dim);
    }
    return best;
}

FGraph conv_all_float(const FloatLinear& layer, const FGraph& graph, OpCounts* ops) {
    std::vector<std::vector<std::uint32_t>> adj(graph.nodes.size());
    for (const auto& [src, dst] : graph.edges)
        adj[src].push_back(dst);

    FGraph out;
    out.edges = graph.edges;
    out.nodes.reserve(graph.nodes.size());
    for (std::uint32_t v = 0; v < graph.nodes.size(); ++v) {
        const FNode& node = graph.nodes[v];
        std::vector<std::vector<float>> msgs;
        msgs.push_back(conv_message_ref(layer, node.feat, Offset3{}));
        for (std::uint32_t d : adj[v]) {
            const FNode& nb = graph.nodes[d];
            msgs.push_back(conv_message_ref(
                layer, nb.feat,
                Offset3{static_cast<std::int32_t>(nb.x - node.x),
                        static_cast<std::int32_t>(nb.y - node.y), nb.t - node.t}));
        }
        out.nodes.push_back({node.x, node.y, node.t,
                             fold_max(layer, msgs, ops, msgs.size() - 1)});
    }
    return out;
}

FGraph pool_float(const FGraph& graph, int g) {
    struct Key {
        std::int64_t x, y, t;
        bool operator<(const Key& o) const {
            if (t != o.t) return t < o.t;
            if (y != o.y) return y < o.y;
            return x < o.x;
        }
    };
    FGraph out;
    std::map<Key, std::uint32_t> cluster_of;
    std::vector<std::uint32_t> node_cluster(graph.nodes.size());
    for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
        const FNode& n = graph.nodes[i];
        Key k{n.x / g, n.y / g, n.t / g};
        auto [it, inserted] =
            cluster_of.try_emplace(k, static_cast<std::uint32_t>(out.nodes.size()));
        if (inserted)
            out.nodes.push_back({k.x, k.y, k.t, n.feat});
        else {
            auto& f = out.nodes[it->second].feat;
            for (std::size_t c = 0; c < f.size(); ++c)
                f[c] = std::max(f[c], n.feat[c]);
        }
        node_cluster[i] = it->second;
    }
    std::set<std::pair<std::uint32_t, std::uint32_t>> merged;
    for (const auto& [src, dst] : graph.edges)
        if (node_cluster[src] != node_cluster[dst])
            merged.emplace(node_cluster[src], node_cluster[dst]);
    out.edges.assign(merged.begin(), merged.end());
    return out;
}

} // namespace

FloatResult run_offline_float(const EventData& data, const ModelConfig& cfg,
                              const ModelWeights& weights,
                              std::optional<std::uint64_t> duration_us) {
    cfg.validate();
    weights.validate(cfg);
    const StreamPlan plan = plan_stream(data, cfg, duration_us);
    const std::vector<NormalizedEvent> normalized = normalize_stream(plan);
    const EventGraph g0 = build_graph(normalized, cfg.beta, cfg.radius);

    FloatResult res;
    std::array<FloatLinear, 5> layers;
    for (int i = 0; i < 5; ++i)
        layers[static_cast<std::size_t>(i)] = to_float(weights.conv(i));

    // conv1 over raw polarity attributes.
    FGraph g;
    g.nodes.reserve(g0.vertices.size());
    for (std::uint32_t v = 0; v < g0.vertices.size(); ++v) {
        const Vertex& vert = g0.vertices[v];
        std::vector<std::vector<float>> msgs;
        const float self_attr[1] = {static_cast<float>(polarity_input(vert.polarity))};
        msgs.push_back(conv_message_ref(layers[0], self_attr, Offset3{}));
        for (const Edge& e : g0.edges_of(v)) {
            const float nb_attr[1] = {
                static_cast<float>(polarity_input(g0.vertices[e.dst].polarity))};
            msgs.push_back(conv_message_ref(layers[0], nb_attr, Offset3{-e.dx, -e.dy, -e.dt}));
        }
        g.nodes.push_back({vert.x, vert.y, vert.t,
                           fold_max(layers[0], msgs, &res.ops[0], msgs.size() - 1)});
    }
    for (const Edge& e : g0.edges)
        g.edges.emplace_back(e.src, e.dst);

    g = pool_float(g, 4);
    g = conv_all_float(layers[1], g, &res.ops[1]);
    g = conv_all_float(layers[2], g, &res.ops[2]);
    g = pool_float(g, 2);
    g = conv_all_float(layers[3], g, &res.ops[3]);
    g = conv_all_float(layers[4], g, &res.ops[4]);

    const int kernel = cfg.pool_out_kernel();
    const int dim = weights.conv(4).out_dim;
    const std::uint64_t n_pred = plan.n_predictions;
    const float floor5 = layers[4].activation_min;

    std::vector<std::vector<float>> grids(
        n_pred, std::vector<float>(16 * static_cast<std::size_t>(dim),
                                   -std::numeric_limits<float>::infinity()));
    for (const FNode& node : g.nodes) {
        const std::int64_t out_slice = node.t / kernel;
        auto& grid = grids[static_cast<std::size_t>(out_slice)];
        float* cell = grid.data() +
                      (static_cast<std::size_t>(node.y / kernel) * 4 +
                       static_cast<std::size_t>(node.x / kernel)) *
                          static_cast<std::size_t>(dim);
        for (int c = 0; c < dim; ++c)
            cell[c] = std::max(cell[c], node.feat[static_cast<std::size_t>(c)]);
    }

    const FloatLinear head = to_float(weights.head());
    for (std::uint64_t j = 0; j < n_pred; ++j) {
        std::vector<float> map(16 * static_cast<std::size_t>(dim), floor5);
        const std::uint64_t first = j >= 3 ? j - 3 : 0;
        for (std::uint64_t s = first; s <= j; ++s)
            for (std::size_t c = 0; c < map.size(); ++c)
                map[c] = std::max(map[c], grids[s][c]);

        FloatPrediction p;
        p.t_end_us = (j + 1) * cfg.prediction_period_us();
        p.scores.resize(static_cast<std::size_t>(head.out_dim));
        for (int o = 0; o < head.out_dim; ++o) {
            const float* row =
                head.weights.data() + static_cast<std::size_t>(o) * head.in_dim;
            float sum = head.bias[static_cast<std::size_t>(o)];
            for (std::size_t k = 0; k < map.size(); ++k)
                sum += row[k] * map[k];
            p.scores[static_cast<std::size_t>(o)] = sum;
        }
        p.label = static_cast<int>(std::max_element(p.scores.begin(), p.scores.end()) -
                                   p.scores.begin());
        p.warmup = j < 3;
        res.predictions.push_back(std::move(p));
    }
    return res;
}

FloatGraph maxpool_ref(const FloatGraph& graph, const PoolSpec& spec) {
    if (spec.g <= 0)
        throw Error("pool cluster size must be positive");
    const bool pool_t = spec.dims == PoolDims::three_d;
    struct Key {
        std::int64_t x, y, t;
        bool operator<(const Key& o) const {
            if (t != o.t) return t < o.t;
            if (y != o.y) return y < o.y;
            return x < o.x;
        }
    };
    FloatGraph out;
    out.size = graph.size / spec.g;
    std::map<Key, std::uint32_t> cluster_of;
    std::vector<std::uint32_t> node_cluster(graph.nodes.size());
    std::vector<std::uint64_t> members;
    std::vector<std::array<double, 3>> pos_sum;

    for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
        const auto& n = graph.nodes[i];
        Key k{static_cast<std::int64_t>(std::floor(n.pos[0] / spec.g)),
              static_cast<std::int64_t>(std::floor(n.pos[1] / spec.g)),
              pool_t ? static_cast<std::int64_t>(std::floor(n.pos[2] / spec.g)) : 0};
        auto [it, inserted] =
            cluster_of.try_emplace(k, static_cast<std::uint32_t>(out.nodes.size()));
        if (inserted) {
            out.nodes.push_back({{static_cast<double>(k.x), static_cast<double>(k.y),
                                  static_cast<double>(k.t)},
                                 n.feat});
            members.push_back(0);
            pos_sum.push_back({0, 0, 0});
        } else {
            auto& f = out.nodes[it->second].feat;
            for (std::size_t c = 0; c < f.size(); ++c)
                f[c] = std::max(f[c], n.feat[c]);
        }
        node_cluster[i] = it->second;
        ++members[it->second];
        for (int c = 0; c < 3; ++c)
            pos_sum[it->second][static_cast<std::size_t>(c)] +=
                n.pos[static_cast<std::size_t>(c)];
    }
    if (spec.position == PoolPosition::average) {
        for (std::size_t i = 0; i < out.nodes.size(); ++i)
            for (int c = 0; c < 3; ++c)
                out.nodes[i].pos[static_cast<std::size_t>(c)] =
                    pos_sum[i][static_cast<std::size_t>(c)] / static_cast<double>(members[i]);
        out.size = graph.size; // positions keep the input scale
    }
    std::set<std::pair<std::uint32_t, std::uint32_t>> merged;
    for (const auto& [src, dst] : graph.edges)
        if (node_cluster[src] != node_cluster[dst])
            merged.emplace(node_cluster[src], node_cluster[dst]);
    out.edges.assign(merged.begin(), merged.end());
    return out;
}

std::array<LayerTopology, 5> layer_topology(const EventData& data, const ModelConfig& cfg) {
    cfg.validate();
    const StreamPlan plan = plan_stream(data, cfg, std::nullopt);
    const std::vector<NormalizedEvent> normalized = normalize_stream(plan);
    const EventGraph g0 = build_graph(normalized, cfg.beta, cfg.radius);

    FeatureGraph g;
    g.size = g0.size;
    g.nodes.reserve(g0.vertices.size());
    for (const Vertex& v : g0.vertices)
        g.nodes.push_back({v.x, v.y, v.t, FeatureVector{}});
    for (const Edge& e : g0.edges)
        g.edges.emplace_back(e.src, e.dst);

    std::array<LayerTopology, 5> topo;
    topo[0] = {"conv1", g.nodes.size(), g.edges.size()};
    const FeatureGraph g1 = maxpool(g, PoolSpec{4, PoolPosition::divide, PoolDims::three_d});
    topo[1] = {"conv2", g1.nodes.size(), g1.edges.size()};
    topo[2] = {"conv3", g1.nodes.size(), g1.edges.size()};
    const FeatureGraph g2 = maxpool(g1, PoolSpec{2, PoolPosition::divide, PoolDims::three_d});
    topo[3] = {"conv4", g2.nodes.size(), g2.edges.size()};
    topo[4] = {"conv5", g2.nodes.size(), g2.edges.size()};
    return topo;
}

} // namespace evgraph::ref
