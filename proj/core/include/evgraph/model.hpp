#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "evgraph/config.hpp"
#include "evgraph/graph.hpp"
#include "evgraph/layers.hpp"
#include "evgraph/weights.hpp"

namespace evgraph {

// One temporal slice of a pooled layer: a SIZE x SIZE grid whose populated
// cells carry the slice's feature vector and the merged out-edge offsets of
// the vertex that lives there.
struct TemporalChannel {
    struct Cell {
        bool used = false;
        FeatureVector feat;
        std::vector<Offset3> edges; // sorted, unique, P_src - P_dst
    };

    std::int64_t slice = 0;
    std::uint16_t size = 0;
    std::vector<Cell> cells;

    TemporalChannel() = default;
    TemporalChannel(std::uint16_t n, std::int64_t slice_index)
        : slice(slice_index), size(n), cells(static_cast<std::size_t>(n) * n) {}

    Cell& at(std::uint16_t x, std::uint16_t y) {
        return cells[static_cast<std::size_t>(y) * size + x];
    }
    const Cell& at(std::uint16_t x, std::uint16_t y) const {
        return cells[static_cast<std::size_t>(y) * size + x];
    }
    void reset(std::int64_t new_slice) {
        slice = new_slice;
        for (auto& c : cells)
            c = Cell{};
    }
};

// Folds one pooled vertex into a channel: features merge with element-wise
// max, edge sets union. Throws Error when the vertex's slice does not match
// the channel.
void accumulate_slice(TemporalChannel& channel, std::uint16_t x, std::uint16_t y,
                      std::int64_t slice, const FeatureVector& feat,
                      std::span<const Offset3> edges);

// Triple-buffered slice store. While the producer fills the writer buffer
// for slice n, the consumer reads slices n-1 and n-2 from the other two.
// step() resets the oldest buffer and hands it to the producer; stepping
// while the consumer has not finished counts as a scheduling violation.
class FeatureMemory {
public:
    explicit FeatureMemory(std::uint16_t size);

    TemporalChannel& writer() { return bufs_[static_cast<std::size_t>(writer_)]; }
    const TemporalChannel& newest() const {
        return bufs_[static_cast<std::size_t>((writer_ + 2) % 3)];
    }
    const TemporalChannel& previous() const {
        return bufs_[static_cast<std::size_t>((writer_ + 1) % 3)];
    }

    void mark_consumer_done() { consumer_done_ = true; }
    void step(std::int64_t next_writer_slice);

    std::uint64_t violations() const { return violations_; }
    int writer_index() const { return writer_; }

private:
    std::array<TemporalChannel, 3> bufs_;
    int writer_ = 0;
    bool consumer_done_ = true;
    std::uint64_t violations_ = 0;
};

struct Prediction {
    std::uint64_t t_end_us = 0;
    std::vector<std::int32_t> scores;
    int label = 0;
    bool warmup = false;
};

struct InferenceResult {
    std::vector<Prediction> predictions;
    std::uint64_t events_in = 0;
    std::uint64_t events_dropped = 0; // out-of-bounds coordinates
};

// Number of predictions for a stream of the given duration: one every
// time_window / 4, the last one covering the stream's tail.
std::uint64_t prediction_count(std::uint64_t duration_us, std::uint32_t time_window_us);

// Shifts timestamps so the stream starts at zero; stored files keep their
// original timestamps.
std::vector<Event> rebased(std::span<const Event> events);

// Stream preparation shared by the streaming pipeline and the offline
// reference: timestamp rebase, duration defaulting, sensor geometry.
struct StreamPlan {
    std::vector<Event> stream;
    std::uint64_t duration_us = 0;
    std::uint64_t n_predictions = 0;
    SensorConfig sensor;
};

StreamPlan plan_stream(const EventData& data, const ModelConfig& cfg,
                       std::optional<std::uint64_t> duration_us);

// Streaming inference over the full pipeline:
//   graph builder -> conv1 -> 4^3 pool -> conv2 -> conv3 -> 2^3 pool
//   -> conv4 -> conv5 -> 4x4 readout -> head,
// one prediction per time_window/4, the first three flagged as warm-up.
// Events must be time-ordered; out-of-bounds events are dropped and counted.
// The sensor resolution comes from the stream metadata (zero means the
// events are already on the beta grid). `duration_us` defaults to the
// rebased stream length (one full window for an empty stream).
InferenceResult run_inference(const EventData& data, const ModelConfig& cfg,
                              const ModelWeights& weights,
                              std::optional<std::uint64_t> duration_us = std::nullopt);

// Prediction line format: "t_end_us,label,score_0,...,score_{cls-1}".
void write_predictions(std::span<const Prediction> preds, std::ostream& out,
                       bool skip_warmup = false);

} // namespace evgraph
