#include "evgraph/graph.hpp"

#include <ostream>

namespace evgraph {

std::vector<GridOffset> candidate_offsets(int radius) {
    std::vector<GridOffset> out;
    if (radius < 0)
        return out;
    for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx)
            if (dx * dx + dy * dy <= radius * radius)
                out.push_back({dx, dy});
    return out;
}

GraphBuilder::GraphBuilder(std::uint16_t beta, int radius)
    : nm_(beta), radius_(radius), candidates_(candidate_offsets(radius)) {}

InsertResult GraphBuilder::insert(const NormalizedEvent& ne) {
    const std::int64_t t = extended_time(ne, nm_.beta());
    if (t < last_t_)
        throw Error("event timestamp regression in graph builder");
    last_t_ = t;

    InsertResult res;
    res.vertex_id = next_id_++;
    const int r2 = radius_ * radius_;
    for (const GridOffset& off : candidates_) {
        const int nx = static_cast<int>(ne.x) + off.dx;
        const int ny = static_cast<int>(ne.y) + off.dy;
        if (nx < 0 || ny < 0 || nx >= nm_.beta() || ny >= nm_.beta())
            continue;
        const auto& cell = nm_.at(static_cast<std::uint16_t>(nx), static_cast<std::uint16_t>(ny));
        if (cell.empty)
            continue;
        const std::int64_t dt = t - cell.t;
        if (off.dx * off.dx + off.dy * off.dy + dt * dt <= r2) {
            // Stored offset is P_new - P_stored, hence the sign flip.
            res.edges.push_back({cell.vertex, -off.dx, -off.dy, dt, cell.polarity});
        }
    }
    nm_.store(ne.x, ne.y, t, ne.p, res.vertex_id);
    return res;
}

void GraphBuilder::reset() {
    nm_.reset();
    next_id_ = 0;
    last_t_ = -1;
}

EventGraph build_graph(std::span<const NormalizedEvent> events, std::uint16_t beta,
                       int radius) {
    EventGraph g;
    g.size = beta;
    g.radius = radius;
    GraphBuilder builder(beta, radius);
    g.edge_begin.push_back(0);
    for (const NormalizedEvent& ne : events) {
        InsertResult res = builder.insert(ne);
        g.vertices.push_back({ne.x, ne.y, extended_time(ne, beta), ne.p});
        for (const NeighbourEdge& e : res.edges)
            g.edges.push_back({res.vertex_id, e.dst, e.dx, e.dy, e.dt});
        g.edge_begin.push_back(static_cast<std::uint32_t>(g.edges.size()));
    }
    return g;
}

std::uint64_t front_end_cycles(std::uint64_t event_count) {
    return 15 * event_count;
}

void dump_graph(const EventGraph& g, std::ostream& out) {
    for (std::size_t i = 0; i < g.vertices.size(); ++i) {
        const Vertex& v = g.vertices[i];
        out << "V " << i << ' ' << v.x << ' ' << v.y << ' ' << v.t << ' '
            << unsigned(v.polarity) << '\n';
    }
    for (const Edge& e : g.edges) {
        out << "E " << e.src << ' ' << e.dst << ' ' << e.dx << ' ' << e.dy << ' ' << e.dt
            << '\n';
    }
}

} // namespace evgraph
