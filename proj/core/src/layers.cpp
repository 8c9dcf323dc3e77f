#include "evgraph/layers.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace evgraph {

std::uint8_t requantize(std::int32_t acc, const QuantizedLinear& layer) noexcept {
    std::int64_t v = static_cast<std::int64_t>(acc) * layer.requant_multiplier;
    if (layer.requant_shift > 0) {
        const std::int64_t half = std::int64_t{1} << (layer.requant_shift - 1);
        v = v >= 0 ? (v + half) >> layer.requant_shift
                   : -((-v + half) >> layer.requant_shift);
    }
    v += layer.zero_point;
    if (v < 0)
        v = 0;
    if (v > 255)
        v = 255;
    return static_cast<std::uint8_t>(v);
}

namespace {

std::vector<std::int32_t> message_impl(const QuantizedLinear& layer,
                                       std::span<const std::int32_t> attr, Offset3 rel) {
    if (static_cast<int>(attr.size()) + 3 != layer.in_dim)
        throw Error("conv_message: attribute length does not match layer input");
    std::vector<std::int32_t> acc(layer.out_dim);
    const int n = layer.in_dim;
    const std::int32_t pos[3] = {rel.dx, rel.dy, static_cast<std::int32_t>(rel.dt)};
    for (int o = 0; o < layer.out_dim; ++o) {
        const std::int8_t* row = layer.weights.data() + static_cast<std::size_t>(o) * n;
        std::int32_t sum = layer.bias[o];
        for (std::size_t k = 0; k < attr.size(); ++k)
            sum += static_cast<std::int32_t>(row[k]) * attr[k];
        for (int k = 0; k < 3; ++k)
            sum += static_cast<std::int32_t>(row[attr.size() + k]) * pos[k];
        acc[o] = sum;
    }
    return acc;
}

} // namespace

std::vector<std::int32_t> conv_message(const QuantizedLinear& layer,
                                       std::span<const std::int32_t> attr, Offset3 rel) {
    return message_impl(layer, attr, rel);
}

std::vector<std::int32_t> conv_message(const QuantizedLinear& layer,
                                       const FeatureVector& attr, Offset3 rel) {
    std::vector<std::int32_t> widened(attr.begin(), attr.end());
    return message_impl(layer, widened, rel);
}

ConvAccumulator::ConvAccumulator(const QuantizedLinear& layer)
    : layer_(&layer), best_(static_cast<std::size_t>(layer.out_dim), 0) {}

void ConvAccumulator::add(std::span<const std::int32_t> attr, Offset3 rel) {
    const std::vector<std::int32_t> acc = message_impl(*layer_, attr, rel);
    // Requantized messages are clamped to [0, 255], so 0 is the identity
    // of the running max.
    for (std::size_t i = 0; i < best_.size(); ++i)
        best_[i] = std::max(best_[i], requantize(acc[i], *layer_));
}

void ConvAccumulator::add(const FeatureVector& attr, Offset3 rel) {
    std::vector<std::int32_t> widened(attr.begin(), attr.end());
    add(std::span<const std::int32_t>(widened), rel);
}

FeatureVector ConvAccumulator::finish() const {
    FeatureVector out(best_.size());
    for (std::size_t i = 0; i < best_.size(); ++i)
        out[i] = std::max(best_[i], layer_->activation_min);
    return out;
}

FeatureVector conv_vertex(const QuantizedLinear& layer, const FeatureVector& self_attr,
                          std::span<const std::pair<FeatureVector, Offset3>> neighbours) {
    ConvAccumulator acc(layer);
    acc.add(self_attr, Offset3{});
    for (const auto& [attr, rel] : neighbours)
        acc.add(attr, rel);
    return acc.finish();
}

FeatureGraph maxpool(const FeatureGraph& graph, const PoolSpec& spec) {
    if (spec.position == PoolPosition::average)
        throw Error("average-position pooling is reference-path only");
    if (spec.g <= 0 || graph.size % spec.g != 0)
        throw Error("pool cluster size must divide the grid size");
    const int g = spec.g;
    const bool pool_t = spec.dims == PoolDims::three_d;

    struct Key {
        std::int32_t x, y;
        std::int64_t t;
        bool operator<(const Key& o) const {
            if (t != o.t) return t < o.t;
            if (y != o.y) return y < o.y;
            return x < o.x;
        }
    };
    auto floordiv = [](std::int64_t v, int d) {
        return v >= 0 ? v / d : -((-v + d - 1) / d);
    };

    FeatureGraph out;
    out.size = static_cast<std::uint16_t>(graph.size / g);

    std::map<Key, std::uint32_t> cluster_of;
    std::vector<std::uint32_t> node_cluster(graph.nodes.size());
    for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
        const auto& n = graph.nodes[i];
        Key k{static_cast<std::int32_t>(floordiv(n.x, g)),
              static_cast<std::int32_t>(floordiv(n.y, g)), pool_t ? floordiv(n.t, g) : 0};
        auto [it, inserted] = cluster_of.try_emplace(k, static_cast<std::uint32_t>(out.nodes.size()));
        if (inserted)
            out.nodes.push_back({k.x, k.y, k.t, n.feat});
        else {
            FeatureVector& f = out.nodes[it->second].feat;
            for (std::size_t c = 0; c < f.size(); ++c)
                f[c] = std::max(f[c], n.feat[c]);
        }
        node_cluster[i] = it->second;
    }

    std::set<std::pair<std::uint32_t, std::uint32_t>> merged;
    for (const auto& [src, dst] : graph.edges) {
        const std::uint32_t cs = node_cluster[src];
        const std::uint32_t cd = node_cluster[dst];
        if (cs != cd)
            merged.emplace(cs, cd);
    }
    out.edges.assign(merged.begin(), merged.end());
    return out;
}

const std::vector<Offset3>& pooled_offset_candidates() {
    static const std::vector<Offset3> table = [] {
        std::vector<Offset3> v;
        for (std::int64_t dt = 0; dt <= 1; ++dt)
            for (std::int32_t dy = -1; dy <= 1; ++dy)
                for (std::int32_t dx = -1; dx <= 1; ++dx)
                    if (!(dx == 0 && dy == 0 && dt == 0))
                        v.push_back({dx, dy, dt});
        return v;
    }();
    return table;
}

bool in_pooled_candidate_set(const Offset3& off) {
    if (off.dx == 0 && off.dy == 0 && off.dt == 0)
        return false;
    return off.dx >= -1 && off.dx <= 1 && off.dy >= -1 && off.dy <= 1 && off.dt >= 0 &&
           off.dt <= 1;
}

std::vector<std::uint8_t> pool_out(std::span<const FeatureGrid> last_slices, int dim,
                                   std::uint8_t floor_value) {
    std::vector<std::uint8_t> out(16 * static_cast<std::size_t>(dim), floor_value);
    for (const FeatureGrid& grid : last_slices) {
        for (std::uint16_t y = 0; y < 4; ++y) {
            for (std::uint16_t x = 0; x < 4; ++x) {
                const auto& cell = grid.at(x, y);
                if (!cell.used)
                    continue;
                std::uint8_t* dst = out.data() + (static_cast<std::size_t>(y) * 4 + x) * dim;
                for (int c = 0; c < dim; ++c)
                    dst[c] = std::max(dst[c], cell.feat[c]);
            }
        }
    }
    return out;
}

std::vector<std::int32_t> classify_scores(const QuantizedLinear& head,
                                          std::span<const std::uint8_t> features) {
    if (static_cast<int>(features.size()) != head.in_dim)
        throw Error("classify: feature length does not match head input");
    std::vector<std::int32_t> scores(head.out_dim);
    for (int o = 0; o < head.out_dim; ++o) {
        const std::int8_t* row = head.weights.data() + static_cast<std::size_t>(o) * head.in_dim;
        std::int64_t sum = head.bias[o];
        for (int k = 0; k < head.in_dim; ++k)
            sum += static_cast<std::int64_t>(row[k]) * features[k];
        scores[o] = static_cast<std::int32_t>(sum);
    }
    return scores;
}

int argmax_lowest(std::span<const std::int32_t> scores) {
    int best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i)
        if (scores[i] > scores[best])
            best = static_cast<int>(i);
    return best;
}

} // namespace evgraph
