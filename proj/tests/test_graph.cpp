#include <doctest.h>

#include <random>
#include <sstream>

#include "evgraph/graph.hpp"
#include "oracles.hpp"

using namespace evgraph;

namespace {

std::vector<NormalizedEvent> normalize_grid(std::span<const Event> events,
                                            std::uint16_t beta, std::uint32_t tw) {
    SensorConfig cfg{beta, beta, tw, beta};
    std::vector<NormalizedEvent> out;
    for (const Event& ev : events)
        if (auto ne = normalize(ev, cfg))
            out.push_back(*ne);
    return out;
}

} // namespace

TEST_CASE("candidate set sizes") {
    CHECK(candidate_offsets(3).size() == 29);
    CHECK(candidate_offsets(1).size() == 5);
    CHECK(candidate_offsets(0).size() == 1);
    CHECK(candidate_offsets(0)[0] == GridOffset{0, 0});

    // Radius 1 is the plus-shaped neighbourhood.
    const auto r1 = candidate_offsets(1);
    CHECK(std::count(r1.begin(), r1.end(), GridOffset{0, 0}) == 1);
    CHECK(std::count(r1.begin(), r1.end(), GridOffset{1, 0}) == 1);
    CHECK(std::count(r1.begin(), r1.end(), GridOffset{-1, 0}) == 1);
    CHECK(std::count(r1.begin(), r1.end(), GridOffset{0, 1}) == 1);
    CHECK(std::count(r1.begin(), r1.end(), GridOffset{0, -1}) == 1);
}

TEST_CASE("insert_event basic cases") {
    GraphBuilder builder(128, 3);

    SUBCASE("first event has no edges") {
        const InsertResult r = builder.insert({10, 10, 0, 0, 1});
        CHECK(r.vertex_id == 0);
        CHECK(r.edges.empty());
    }

    SUBCASE("same pixel two slots apart links with offset (0,0,2)") {
        builder.insert({10, 10, 0, 0, 1});
        const InsertResult r = builder.insert({10, 10, 2, 0, 0});
        REQUIRE(r.edges.size() == 1);
        CHECK(r.edges[0].dst == 0);
        CHECK(r.edges[0].dx == 0);
        CHECK(r.edges[0].dy == 0);
        CHECK(r.edges[0].dt == 2);
        CHECK(r.edges[0].dst_polarity == 1);
    }

    SUBCASE("(3,0,1) offset fails the radius-3 bound (d^2 = 10 > 9)") {
        builder.insert({10, 10, 0, 0, 1});
        const InsertResult r = builder.insert({13, 10, 1, 0, 0});
        CHECK(r.edges.empty());
    }

    SUBCASE("(2,0,1) offset passes (d^2 = 5)") {
        builder.insert({10, 10, 0, 0, 1});
        const InsertResult r = builder.insert({12, 10, 1, 0, 0});
        REQUIRE(r.edges.size() == 1);
        CHECK(r.edges[0].dx == 2);
        CHECK(r.edges[0].dt == 1);
    }

    SUBCASE("duplicate timestamp at the same pixel still links") {
        builder.insert({10, 10, 0, 0, 1});
        const InsertResult r = builder.insert({10, 10, 0, 0, 0});
        REQUIRE(r.edges.size() == 1);
        CHECK(r.edges[0].dt == 0);
    }

    SUBCASE("timestamp regression is rejected") {
        builder.insert({10, 10, 5, 0, 1});
        CHECK_THROWS_AS(builder.insert({10, 10, 4, 0, 1}), Error);
    }
}

TEST_CASE("matrix overwrite keeps the most recent event per pixel") {
    GraphBuilder builder(128, 3);
    builder.insert({20, 20, 0, 0, 0});
    builder.insert({20, 20, 1, 0, 1});
    const auto& cell = builder.matrix().at(20, 20);
    CHECK_FALSE(cell.empty);
    CHECK(cell.t == 1);
    CHECK(cell.polarity == 1);
    CHECK(cell.vertex == 1);

    // The next same-pixel event links to the overwriting vertex, not the old one.
    const InsertResult r = builder.insert({20, 20, 2, 0, 0});
    REQUIRE(r.edges.size() == 1);
    CHECK(r.edges[0].dst == 1);
}

TEST_CASE("front-end cycle count") {
    CHECK(front_end_cycles(0) == 0);
    CHECK(front_end_cycles(1) == 15);
    CHECK(front_end_cycles(1000) == 15000);
    // 200 MHz / 15 cycles = 13.33 MEPS sustained.
    CHECK(200e6 / front_end_cycles(1) / 1e6 == doctest::Approx(13.3333333));
}

TEST_CASE("incremental construction equals the brute-force oracle") {
    std::mt19937_64 rng(2024);
    for (int round = 0; round < 60; ++round) {
        const std::uint16_t beta = round % 2 == 0 ? 128 : 64;
        const std::size_t count = rng() % 700;
        const auto raw = oracle::random_grid_stream(rng, count, beta, 100000);
        const auto events = normalize_grid(raw, beta, 100000);

        const EventGraph g = build_graph(events, beta, 3);
        REQUIRE(g.vertices.size() == events.size());

        std::vector<oracle::OracleEdge> got;
        for (const Edge& e : g.edges)
            got.push_back({e.src, e.dst, e.dx, e.dy, e.dt});
        std::sort(got.begin(), got.end());

        const auto expected = oracle::brute_force_edges(events, beta, 3);
        CHECK(got == expected);
    }
}

TEST_CASE("per-vertex edge count never exceeds the candidate set") {
    std::mt19937_64 rng(99);
    const auto raw = oracle::random_grid_stream(rng, 3000, 32, 100000);
    const auto events = normalize_grid(raw, 32, 100000);
    const EventGraph g = build_graph(events, 32, 3);
    for (std::uint32_t v = 0; v < g.vertices.size(); ++v)
        CHECK(g.edges_of(v).size() <= 29);
    for (const Edge& e : g.edges)
        CHECK(e.dt >= 0);
}

TEST_CASE("appending events never mutates the existing graph") {
    std::mt19937_64 rng(5);
    const auto raw = oracle::random_grid_stream(rng, 400, 64, 100000);
    const auto events = normalize_grid(raw, 64, 100000);

    const std::size_t cut = events.size() / 2;
    const EventGraph prefix =
        build_graph(std::span(events.data(), cut), 64, 3);
    const EventGraph full = build_graph(events, 64, 3);

    REQUIRE(full.vertices.size() >= prefix.vertices.size());
    for (std::size_t v = 0; v < prefix.vertices.size(); ++v) {
        CHECK(full.vertices[v].t == prefix.vertices[v].t);
        CHECK(full.edge_begin[v + 1] == prefix.edge_begin[v + 1]);
    }
    for (std::size_t e = 0; e < prefix.edges.size(); ++e) {
        CHECK(full.edges[e].src == prefix.edges[e].src);
        CHECK(full.edges[e].dst == prefix.edges[e].dst);
    }
}

TEST_CASE("graph dump format") {
    GraphBuilder builder(128, 3);
    std::vector<NormalizedEvent> events = {{10, 10, 0, 0, 1}, {10, 10, 2, 0, 0}};
    const EventGraph g = build_graph(events, 128, 3);
    std::ostringstream out;
    dump_graph(g, out);
    CHECK(out.str() == "V 0 10 10 0 1\n"
                       "V 1 10 10 2 0\n"
                       "E 1 0 0 0 2\n");
}
