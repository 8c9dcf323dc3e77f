#include "evgraph/events.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <istream>
#include <ostream>
#include <fstream>
#include <random>

namespace evgraph {

namespace {

constexpr char kMagic[4] = {'E', 'V', 'T', '1'};
constexpr std::size_t kHeaderBytes = 16;
constexpr std::size_t kRecordBytes = 9;

std::uint16_t read_le16(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t read_le32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void write_le16(unsigned char* p, std::uint16_t v) {
    p[0] = static_cast<unsigned char>(v & 0xff);
    p[1] = static_cast<unsigned char>((v >> 8) & 0xff);
}

void write_le32(unsigned char* p, std::uint32_t v) {
    p[0] = static_cast<unsigned char>(v & 0xff);
    p[1] = static_cast<unsigned char>((v >> 8) & 0xff);
    p[2] = static_cast<unsigned char>((v >> 16) & 0xff);
    p[3] = static_cast<unsigned char>((v >> 24) & 0xff);
}

EventData read_binary(std::istream& in) {
    std::array<unsigned char, kHeaderBytes> header{};
    in.read(reinterpret_cast<char*>(header.data()), kHeaderBytes);
    if (in.gcount() == 0 && in.eof()) {
        // An entirely empty file is treated as an empty stream.
        return {};
    }
    if (static_cast<std::size_t>(in.gcount()) != kHeaderBytes)
        throw ParseError("truncated header", static_cast<std::size_t>(in.gcount()));
    if (std::memcmp(header.data(), kMagic, 4) != 0)
        throw ParseError("bad magic, expected EVT1", 0);

    EventData data;
    data.width = read_le16(header.data() + 4);
    data.height = read_le16(header.data() + 6);
    data.time_window_us = read_le32(header.data() + 8);
    const std::uint32_t count = read_le32(header.data() + 12);

    data.events.reserve(count);
    std::array<unsigned char, kRecordBytes> rec{};
    std::uint32_t prev_t = 0;
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::size_t offset = kHeaderBytes + static_cast<std::size_t>(i) * kRecordBytes;
        in.read(reinterpret_cast<char*>(rec.data()), kRecordBytes);
        if (static_cast<std::size_t>(in.gcount()) != kRecordBytes)
            throw ParseError("truncated record", offset, static_cast<std::ptrdiff_t>(i));
        Event ev;
        ev.x = read_le16(rec.data());
        ev.y = read_le16(rec.data() + 2);
        ev.t = read_le32(rec.data() + 4);
        ev.p = rec[8];
        if (ev.p > 1)
            throw ParseError("polarity byte out of range", offset + 8,
                             static_cast<std::ptrdiff_t>(i));
        if (i > 0 && ev.t < prev_t)
            throw ParseError("timestamp regression", offset,
                             static_cast<std::ptrdiff_t>(i));
        prev_t = ev.t;
        data.events.push_back(ev);
    }
    return data;
}

EventData read_csv(std::istream& in) {
    EventData data;
    std::string line;
    std::size_t offset = 0;
    std::ptrdiff_t index = 0;
    std::uint32_t prev_t = 0;
    while (std::getline(in, line)) {
        const std::size_t line_offset = offset;
        offset += line.size() + 1;
        if (line.empty())
            continue;
        unsigned long long v[4];
        const char* s = line.c_str();
        char* end = nullptr;
        for (int field = 0; field < 4; ++field) {
            v[field] = std::strtoull(s, &end, 10);
            if (end == s)
                throw ParseError("malformed CSV record",
                                 line_offset + static_cast<std::size_t>(s - line.c_str()),
                                 index);
            s = end;
            if (field < 3) {
                if (*s != ',')
                    throw ParseError("expected ','",
                                     line_offset + static_cast<std::size_t>(s - line.c_str()),
                                     index);
                ++s;
            }
        }
        while (*s == ' ' || *s == '\r')
            ++s;
        if (*s != '\0')
            throw ParseError("trailing characters in CSV record",
                             line_offset + static_cast<std::size_t>(s - line.c_str()), index);
        if (v[0] > 0xffff || v[1] > 0xffff || v[2] > 0xffffffffull || v[3] > 1)
            throw ParseError("CSV field out of range", line_offset, index);
        Event ev{static_cast<std::uint16_t>(v[0]), static_cast<std::uint16_t>(v[1]),
                 static_cast<std::uint32_t>(v[2]), static_cast<std::uint8_t>(v[3])};
        if (index > 0 && ev.t < prev_t)
            throw ParseError("timestamp regression", line_offset, index);
        prev_t = ev.t;
        data.events.push_back(ev);
        ++index;
    }
    return data;
}

std::size_t write_binary(const EventData& data, std::ostream& out) {
    std::array<unsigned char, kHeaderBytes> header{};
    std::memcpy(header.data(), kMagic, 4);
    write_le16(header.data() + 4, data.width);
    write_le16(header.data() + 6, data.height);
    write_le32(header.data() + 8, data.time_window_us);
    write_le32(header.data() + 12, static_cast<std::uint32_t>(data.events.size()));
    out.write(reinterpret_cast<const char*>(header.data()), kHeaderBytes);

    std::array<unsigned char, kRecordBytes> rec{};
    for (const Event& ev : data.events) {
        write_le16(rec.data(), ev.x);
        write_le16(rec.data() + 2, ev.y);
        write_le32(rec.data() + 4, ev.t);
        rec[8] = ev.p;
        out.write(reinterpret_cast<const char*>(rec.data()), kRecordBytes);
    }
    if (!out)
        throw Error("write failure");
    return kHeaderBytes + data.events.size() * kRecordBytes;
}

std::size_t write_csv(const EventData& data, std::ostream& out) {
    std::size_t bytes = 0;
    char buf[48];
    for (const Event& ev : data.events) {
        const int n = std::snprintf(buf, sizeof buf, "%u,%u,%u,%u\n",
                                    unsigned(ev.x), unsigned(ev.y), unsigned(ev.t),
                                    unsigned(ev.p));
        out.write(buf, n);
        bytes += static_cast<std::size_t>(n);
    }
    if (!out)
        throw Error("write failure");
    return bytes;
}

// Deterministic bounded draw; std::uniform_int_distribution is not portable
// across standard library implementations.
std::uint64_t draw(std::mt19937_64& rng, std::uint64_t bound) {
    return bound == 0 ? 0 : rng() % bound;
}

} // namespace

void SensorConfig::validate() const {
    if (width == 0 || height == 0)
        throw ConfigError("sensor resolution must be positive");
    if (time_window_us == 0)
        throw ConfigError("time window must be positive");
    if (beta != 128 && beta != 256)
        throw ConfigError("normalization range must be 128 or 256");
}

std::optional<NormalizedEvent> normalize(const Event& ev, const SensorConfig& cfg) {
    if (ev.x >= cfg.width || ev.y >= cfg.height)
        return std::nullopt;
    NormalizedEvent ne;
    const std::uint64_t beta = cfg.beta;
    ne.x = static_cast<std::uint16_t>(beta * ev.x / cfg.width);
    ne.y = static_cast<std::uint16_t>(beta * ev.y / cfg.height);
    // floor(beta * t / T) decomposed into window index and in-window slot.
    const std::uint64_t scaled = beta * static_cast<std::uint64_t>(ev.t) / cfg.time_window_us;
    ne.window = static_cast<std::int64_t>(scaled / beta);
    ne.t = static_cast<std::uint16_t>(scaled % beta);
    ne.p = ev.p;
    return ne;
}

EventData read_events(std::istream& in, EventFormat format) {
    return format == EventFormat::binary_evt ? read_binary(in) : read_csv(in);
}

std::size_t write_events(const EventData& data, std::ostream& out, EventFormat format) {
    return format == EventFormat::binary_evt ? write_binary(data, out) : write_csv(data, out);
}

EventFormat format_for_path(const std::string& path) {
    const auto dot = path.rfind('.');
    if (dot != std::string::npos && path.substr(dot) == ".evt")
        return EventFormat::binary_evt;
    return EventFormat::csv;
}

EventData read_events_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ParseError("cannot open " + path, 0);
    return read_events(in, format_for_path(path));
}

std::size_t write_events_file(const EventData& data, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error("cannot open " + path + " for writing");
    return write_events(data, out, format_for_path(path));
}

std::vector<Event> synth_events(SynthPattern pattern, const SensorConfig& cfg,
                                std::size_t count, std::uint64_t seed, unsigned windows) {
    cfg.validate();
    std::mt19937_64 rng(seed);
    const std::uint64_t duration =
        static_cast<std::uint64_t>(cfg.time_window_us) * std::max(windows, 1u);

    std::vector<std::uint32_t> times(count);
    switch (pattern) {
    case SynthPattern::moving_edge:
    case SynthPattern::random_uniform:
        for (auto& t : times)
            t = static_cast<std::uint32_t>(draw(rng, duration));
        break;
    case SynthPattern::burst: {
        // Clumps of activity around a handful of centres, quiet in between.
        const std::uint64_t clusters = 4 + draw(rng, 4);
        std::vector<std::uint64_t> centres(clusters);
        for (auto& c : centres)
            c = draw(rng, duration);
        const std::uint64_t spread = std::max<std::uint64_t>(duration / 64, 1);
        for (auto& t : times) {
            const std::uint64_t c = centres[draw(rng, clusters)];
            const std::uint64_t lo = c > spread ? c - spread : 0;
            const std::uint64_t hi = std::min(c + spread, duration - 1);
            t = static_cast<std::uint32_t>(lo + draw(rng, hi - lo + 1));
        }
        break;
    }
    }
    std::sort(times.begin(), times.end());

    std::vector<Event> events;
    events.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        Event ev;
        ev.t = times[i];
        switch (pattern) {
        case SynthPattern::moving_edge: {
            // Edge position advances linearly with time; events hug the edge.
            const std::uint64_t edge_x =
                static_cast<std::uint64_t>(ev.t) % cfg.time_window_us * cfg.width /
                cfg.time_window_us;
            const int jitter = static_cast<int>(draw(rng, 5)) - 2;
            long x = static_cast<long>(edge_x) + jitter;
            x = std::clamp<long>(x, 0, cfg.width - 1);
            ev.x = static_cast<std::uint16_t>(x);
            ev.y = static_cast<std::uint16_t>(draw(rng, cfg.height));
            ev.p = jitter >= 0 ? 1 : 0;
            break;
        }
        case SynthPattern::random_uniform:
        case SynthPattern::burst:
            ev.x = static_cast<std::uint16_t>(draw(rng, cfg.width));
            ev.y = static_cast<std::uint16_t>(draw(rng, cfg.height));
            ev.p = static_cast<std::uint8_t>(draw(rng, 2));
            break;
        }
        events.push_back(ev);
    }
    return events;
}

SynthPattern parse_synth_pattern(const std::string& name) {
    if (name == "moving-edge")
        return SynthPattern::moving_edge;
    if (name == "random-uniform")
        return SynthPattern::random_uniform;
    if (name == "burst")
        return SynthPattern::burst;
    throw ConfigError("unknown synthesis pattern: " + name);
}

} // namespace evgraph
