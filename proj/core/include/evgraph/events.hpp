#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "evgraph/error.hpp"

namespace evgraph {

// One sensor event: pixel position, microsecond timestamp, polarity bit
// (0 encodes a negative change, 1 a positive one).
struct Event {
    std::uint16_t x = 0;
    std::uint16_t y = 0;
    std::uint32_t t = 0;
    std::uint8_t p = 0;

    bool operator==(const Event&) const = default;
};

// Sensor geometry and normalization parameters. `beta` is the common range
// the spatial and temporal coordinates are scaled to; the grid and the
// downstream pipeline support 128 and 256.
struct SensorConfig {
    std::uint16_t width = 0;
    std::uint16_t height = 0;
    std::uint32_t time_window_us = 0;
    std::uint16_t beta = 128;

    void validate() const;
};

// Event after scaling to the beta grid. `t` is window-relative; `window`
// counts whole time windows so continuous streams keep a total order.
struct NormalizedEvent {
    std::uint16_t x = 0;
    std::uint16_t y = 0;
    std::uint16_t t = 0;
    std::int64_t window = 0;
    std::uint8_t p = 0;

    bool operator==(const NormalizedEvent&) const = default;
};

// Window-extended timestamp: window * beta + t. Strictly increasing across
// window boundaries, so distance checks work on a continuous axis.
inline std::int64_t extended_time(const NormalizedEvent& ne, std::uint16_t beta) {
    return ne.window * static_cast<std::int64_t>(beta) + ne.t;
}

// Scales an event onto the beta grid with floor arithmetic. Returns nullopt
// for events outside the sensor bounds (hot pixels etc.); callers count the
// rejects instead of failing the stream.
std::optional<NormalizedEvent> normalize(const Event& ev, const SensorConfig& cfg);

enum class EventFormat {
    binary_evt, // 16-byte header + 9-byte little-endian records
    csv,        // one "x,y,t,p" line per event, no header
};

// Events plus the stream metadata carried by the binary header. CSV streams
// leave the metadata zeroed.
struct EventData {
    std::uint16_t width = 0;
    std::uint16_t height = 0;
    std::uint32_t time_window_us = 0;
    std::vector<Event> events;
};

// Parses a stream in the given format. Throws ParseError with the byte
// offset of a malformed record, or with the record index on a timestamp
// regression.
EventData read_events(std::istream& in, EventFormat format);

// Serializes events; returns the number of bytes written. Binary round-trips
// bit-exactly through read_events.
std::size_t write_events(const EventData& data, std::ostream& out, EventFormat format);

// Convenience wrappers that pick the format from the file extension
// (".evt" -> binary, anything else -> CSV).
EventData read_events_file(const std::string& path);
std::size_t write_events_file(const EventData& data, const std::string& path);
EventFormat format_for_path(const std::string& path);

enum class SynthPattern {
    moving_edge,    // vertical contrast edge sweeping across the sensor
    random_uniform, // uniform in space and time (Poisson-like arrival order)
    burst,          // a few dense temporal clusters
};

// Deterministic synthetic stimulus: `count` events spread over
// `windows` * cfg.time_window_us microseconds, timestamps non-decreasing.
// Pure function of (pattern, cfg, count, seed, windows).
std::vector<Event> synth_events(SynthPattern pattern, const SensorConfig& cfg,
                                std::size_t count, std::uint64_t seed,
                                unsigned windows = 1);

SynthPattern parse_synth_pattern(const std::string& name);

} // namespace evgraph
