#include "evgraph/model.hpp"

#include <algorithm>
#include <deque>
#include <ostream>

namespace evgraph {

void accumulate_slice(TemporalChannel& channel, std::uint16_t x, std::uint16_t y,
                      std::int64_t slice, const FeatureVector& feat,
                      std::span<const Offset3> edges) {
    if (slice != channel.slice)
        throw Error("accumulate_slice: vertex slice does not match the channel");
    TemporalChannel::Cell& cell = channel.at(x, y);
    if (!cell.used) {
        cell.used = true;
        cell.feat = feat;
    } else {
        for (std::size_t i = 0; i < cell.feat.size(); ++i)
            cell.feat[i] = std::max(cell.feat[i], feat[i]);
    }
    for (const Offset3& e : edges) {
        auto it = std::lower_bound(cell.edges.begin(), cell.edges.end(), e);
        if (it == cell.edges.end() || !(*it == e))
            cell.edges.insert(it, e);
    }
}

FeatureMemory::FeatureMemory(std::uint16_t size)
    : bufs_{TemporalChannel(size, 0), TemporalChannel(size, -2), TemporalChannel(size, -1)} {}

void FeatureMemory::step(std::int64_t next_writer_slice) {
    if (!consumer_done_)
        ++violations_;
    writer_ = (writer_ + 1) % 3;
    bufs_[static_cast<std::size_t>(writer_)].reset(next_writer_slice);
    consumer_done_ = false;
}

std::uint64_t prediction_count(std::uint64_t duration_us, std::uint32_t time_window_us) {
    const std::uint64_t period = time_window_us / 4;
    return (duration_us + period - 1) / period;
}

std::vector<Event> rebased(std::span<const Event> events) {
    std::vector<Event> out(events.begin(), events.end());
    if (out.empty())
        return out;
    const std::uint32_t t0 = out.front().t;
    for (Event& ev : out)
        ev.t -= t0;
    return out;
}

namespace {

// Convolution over one finalized channel. Neighbour features come from the
// channel itself (same-slice edges) or the previous one; edges always land
// on populated cells because they were created from real vertices.
TemporalChannel conv_channel(const QuantizedLinear& layer, const TemporalChannel& cur,
                             const TemporalChannel& prev) {
    TemporalChannel out(cur.size, cur.slice);
    for (std::uint16_t y = 0; y < cur.size; ++y) {
        for (std::uint16_t x = 0; x < cur.size; ++x) {
            const TemporalChannel::Cell& cell = cur.at(x, y);
            if (!cell.used)
                continue;
            ConvAccumulator acc(layer);
            acc.add(cell.feat, Offset3{});
            for (const Offset3& off : cell.edges) {
                const auto nx = static_cast<std::uint16_t>(x - off.dx);
                const auto ny = static_cast<std::uint16_t>(y - off.dy);
                const TemporalChannel& src = off.dt == 0 ? cur : prev;
                const TemporalChannel::Cell& nb = src.at(nx, ny);
                if (!nb.used)
                    throw Error("conv_channel: edge into an unpopulated cell");
                acc.add(nb.feat, Offset3{-off.dx, -off.dy, -off.dt});
            }
            TemporalChannel::Cell& dst = out.at(x, y);
            dst.used = true;
            dst.feat = acc.finish();
            dst.edges = cell.edges;
        }
    }
    return out;
}

// One synchronous convolution layer with its triple-buffered input store.
class SyncConvStage {
public:
    SyncConvStage(const QuantizedLinear& layer, std::uint16_t size)
        : layer_(&layer), fm_(size) {}

    TemporalChannel push(TemporalChannel&& input) {
        fm_.writer() = std::move(input);
        fm_.step(fm_.writer().slice + 1);
        TemporalChannel out = conv_channel(*layer_, fm_.newest(), fm_.previous());
        fm_.mark_consumer_done();
        return out;
    }

private:
    const QuantizedLinear* layer_;
    FeatureMemory fm_;
};

void merge_edge(std::vector<Offset3>& edges, const Offset3& e) {
    if (e.dx == 0 && e.dy == 0 && e.dt == 0)
        return;
    auto it = std::lower_bound(edges.begin(), edges.end(), e);
    if (it == edges.end() || !(*it == e))
        edges.insert(it, e);
}

class Pipeline {
public:
    Pipeline(const ModelConfig& cfg, const ModelWeights& w)
        : cfg_(cfg), w_(w), builder_(cfg.beta, cfg.radius),
          size1_(static_cast<std::uint16_t>(cfg.size_after_pool1())),
          size2_(static_cast<std::uint16_t>(cfg.size_after_pool2())),
          out_kernel_(cfg.pool_out_kernel()), p1_(size1_, 0), p2_(size2_, 0),
          conv2_(w.conv(1), size1_), conv3_(w.conv(2), size1_), conv4_(w.conv(3), size2_),
          conv5_(w.conv(4), size2_), p3_(4) {}

    void push_event(const NormalizedEvent& ne) {
        const std::int64_t t = extended_time(ne, cfg_.beta);
        advance_level1(t / 4);

        InsertResult ins = builder_.insert(ne);
        const std::int32_t self_attr[1] = {polarity_input(ne.p)};
        ConvAccumulator acc(w_.conv(0));
        acc.add(std::span<const std::int32_t>(self_attr), Offset3{});
        std::vector<Offset3> pooled_edges;
        for (const NeighbourEdge& e : ins.edges) {
            const std::int32_t nb_attr[1] = {polarity_input(e.dst_polarity)};
            acc.add(std::span<const std::int32_t>(nb_attr), Offset3{-e.dx, -e.dy, -e.dt});
            merge_edge(pooled_edges, Offset3{ne.x / 4 - (ne.x - e.dx) / 4,
                                             ne.y / 4 - (ne.y - e.dy) / 4,
                                             t / 4 - (t - e.dt) / 4});
        }
        accumulate_slice(p1_, static_cast<std::uint16_t>(ne.x / 4),
                         static_cast<std::uint16_t>(ne.y / 4), t / 4, acc.finish(),
                         pooled_edges);
    }

    // Drains the pipeline so that exactly n_l1 level-1 slices have been
    // emitted, then answers the collected predictions.
    std::vector<Prediction> finish(std::int64_t n_l1) {
        advance_level1(n_l1);
        return std::move(preds_);
    }

private:
    void advance_level1(std::int64_t target_slice) {
        while (p1_.slice < target_slice) {
            TemporalChannel ready(size1_, p1_.slice);
            std::swap(ready, p1_);
            p1_.reset(ready.slice + 1);
            emit_level1(std::move(ready));
        }
    }

    void emit_level1(TemporalChannel&& ch) {
        TemporalChannel out2 = conv2_.push(std::move(ch));
        TemporalChannel out3 = conv3_.push(std::move(out2));
        fold_pool2(std::move(out3));
    }

    // 2x2x2 pool: pairs of level-1 slices merge into one level-2 slice.
    void fold_pool2(TemporalChannel&& ch) {
        const std::int64_t n1 = ch.slice;
        if (p2_.slice != n1 / 2)
            throw Error("pool2 slice bookkeeping out of step");
        for (std::uint16_t y = 0; y < ch.size; ++y) {
            for (std::uint16_t x = 0; x < ch.size; ++x) {
                const TemporalChannel::Cell& cell = ch.at(x, y);
                if (!cell.used)
                    continue;
                std::vector<Offset3> mapped;
                for (const Offset3& e : cell.edges)
                    merge_edge(mapped, Offset3{x / 2 - (x - e.dx) / 2, y / 2 - (y - e.dy) / 2,
                                               n1 / 2 - (n1 - e.dt) / 2});
                accumulate_slice(p2_, static_cast<std::uint16_t>(x / 2),
                                 static_cast<std::uint16_t>(y / 2), n1 / 2, cell.feat,
                                 mapped);
            }
        }
        if (n1 % 2 == 1) {
            TemporalChannel ready(size2_, p2_.slice);
            std::swap(ready, p2_);
            p2_.reset(ready.slice + 1);
            emit_level2(std::move(ready));
        }
    }

    void emit_level2(TemporalChannel&& ch) {
        TemporalChannel out4 = conv4_.push(std::move(ch));
        TemporalChannel out5 = conv5_.push(std::move(out4));
        fold_pool3(std::move(out5));
    }

    // Final scaling stage: out_kernel_ x out_kernel_ spatial blocks and
    // out_kernel_ consecutive slices collapse onto a 4x4 grid.
    void fold_pool3(TemporalChannel&& ch) {
        const int dim = w_.conv(4).out_dim;
        for (std::uint16_t y = 0; y < ch.size; ++y) {
            for (std::uint16_t x = 0; x < ch.size; ++x) {
                const TemporalChannel::Cell& cell = ch.at(x, y);
                if (!cell.used)
                    continue;
                auto& dst = p3_.at(static_cast<std::uint16_t>(x / out_kernel_),
                                   static_cast<std::uint16_t>(y / out_kernel_));
                if (!dst.used) {
                    dst.used = true;
                    dst.feat = cell.feat;
                } else {
                    for (int c = 0; c < dim; ++c)
                        dst.feat[static_cast<std::size_t>(c)] =
                            std::max(dst.feat[static_cast<std::size_t>(c)],
                                     cell.feat[static_cast<std::size_t>(c)]);
                }
            }
        }
        if (ch.slice % out_kernel_ == out_kernel_ - 1) {
            emit_output(ch.slice / out_kernel_);
            p3_ = FeatureGrid(4);
        }
    }

    void emit_output(std::int64_t out_slice) {
        ring_.push_back(std::move(p3_));
        if (ring_.size() > 4)
            ring_.pop_front();
        const int dim = w_.conv(4).out_dim;
        std::vector<FeatureGrid> last(ring_.begin(), ring_.end());
        const std::vector<std::uint8_t> map =
            pool_out(last, dim, w_.conv(4).activation_min);
        Prediction p;
        p.t_end_us = static_cast<std::uint64_t>(out_slice + 1) * cfg_.prediction_period_us();
        p.scores = classify_scores(w_.head(), map);
        p.label = argmax_lowest(p.scores);
        p.warmup = out_slice < 3;
        preds_.push_back(std::move(p));
    }

    ModelConfig cfg_;
    const ModelWeights& w_;
    GraphBuilder builder_;
    std::uint16_t size1_;
    std::uint16_t size2_;
    int out_kernel_;
    TemporalChannel p1_;
    TemporalChannel p2_;
    SyncConvStage conv2_;
    SyncConvStage conv3_;
    SyncConvStage conv4_;
    SyncConvStage conv5_;
    FeatureGrid p3_;
    std::deque<FeatureGrid> ring_;
    std::vector<Prediction> preds_;
};

} // namespace

StreamPlan plan_stream(const EventData& data, const ModelConfig& cfg,
                       std::optional<std::uint64_t> duration_us) {
    StreamPlan plan;
    plan.stream = rebased(data.events);
    if (duration_us) {
        plan.duration_us = *duration_us;
        if (!plan.stream.empty() && plan.duration_us <= plan.stream.back().t)
            throw ConfigError("duration does not cover the event stream");
    } else {
        plan.duration_us = plan.stream.empty()
                               ? cfg.time_window_us
                               : static_cast<std::uint64_t>(plan.stream.back().t) + 1;
    }
    plan.n_predictions = prediction_count(plan.duration_us, cfg.time_window_us);
    // Streams without recorded geometry are taken to be on the beta grid.
    plan.sensor.width = data.width != 0 ? data.width : cfg.beta;
    plan.sensor.height = data.height != 0 ? data.height : cfg.beta;
    plan.sensor.time_window_us = cfg.time_window_us;
    plan.sensor.beta = cfg.beta;
    return plan;
}

InferenceResult run_inference(const EventData& data, const ModelConfig& cfg,
                              const ModelWeights& weights,
                              std::optional<std::uint64_t> duration_us) {
    cfg.validate();
    weights.validate(cfg);
    // A larger radius would let merged offsets reach two slices back, past
    // what the triple-buffered feature memory exposes.
    if (cfg.radius > 3)
        throw ConfigError("the streaming engine supports radii up to 3; "
                          "the offline reference handles larger radii");

    const StreamPlan plan = plan_stream(data, cfg, duration_us);
    // Level-1 slices per prediction period: (TW/4) / (TW/size1) = size1/4.
    const std::int64_t n_l1 =
        static_cast<std::int64_t>(plan.n_predictions) * (cfg.size_after_pool1() / 4);

    Pipeline pipe(cfg, weights);
    InferenceResult res;
    for (const Event& ev : plan.stream) {
        ++res.events_in;
        const std::optional<NormalizedEvent> ne = normalize(ev, plan.sensor);
        if (!ne) {
            ++res.events_dropped;
            continue;
        }
        pipe.push_event(*ne);
    }
    res.predictions = pipe.finish(n_l1);
    return res;
}

void write_predictions(std::span<const Prediction> preds, std::ostream& out,
                       bool skip_warmup) {
    for (const Prediction& p : preds) {
        if (skip_warmup && p.warmup)
            continue;
        out << p.t_end_us << ',' << p.label;
        for (std::int32_t s : p.scores)
            out << ',' << s;
        out << '\n';
    }
}

} // namespace evgraph
