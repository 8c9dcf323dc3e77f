// Acceptance suite: one check per shipped guarantee, one PASS/FAIL line each.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "evgraph/analysis.hpp"
#include "evgraph/hwsim.hpp"
#include "evgraph/model.hpp"
#include "evgraph/reference.hpp"
#include "oracles.hpp"

using namespace evgraph;

namespace {

int failures = 0;

void report(int criterion, const std::string& name, bool ok, double seconds) {
    std::printf("%s  criterion %2d: %s (%.2fs)\n", ok ? "PASS" : "FAIL", criterion,
                name.c_str(), seconds);
    if (!ok)
        ++failures;
}

template <typename Fn>
void run(int criterion, const std::string& name, Fn&& fn) {
    const auto start = std::chrono::steady_clock::now();
    bool ok = false;
    try {
        ok = fn();
    } catch (const std::exception& e) {
        std::printf("      exception: %s\n", e.what());
        ok = false;
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    report(criterion, name, ok, seconds);
}

ModelConfig config_for(Variant v, std::uint16_t beta) {
    ModelConfig cfg;
    cfg.variant = v;
    cfg.beta = beta;
    cfg.time_window_us = beta == 128 ? 100000 : 50000;
    return cfg;
}

// --- criterion 1: sustained service rate ------------------------------------

bool throughput_constant() {
    const SimReport r = simulate(EventData{}, config_for(Variant::base, 128));
    return r.throughput_meps == 200e6 / 15 / 1e6 &&
           std::abs(r.throughput_meps - 13.3333333) < 1e-3;
}

// --- criterion 2: multiplier planning ----------------------------------------

bool planning_matches_tables() {
    const ClockConfig clock;
    const auto m_of = [&](Variant v, std::uint16_t beta) {
        const auto plans = select_multipliers(config_for(v, beta), clock);
        return std::array<int, 4>{plans[0].m, plans[1].m, plans[2].m, plans[3].m};
    };
    bool ok = m_of(Variant::small, 256) == std::array<int, 4>{8, 8, 1, 1};
    ok = ok && m_of(Variant::base, 256) == std::array<int, 4>{8, 8, 2, 2};
    ok = ok && m_of(Variant::large, 256) == std::array<int, 4>{8, 16, 2, 4};
    for (Variant v : {Variant::small, Variant::base, Variant::large})
        ok = ok && m_of(v, 128) == std::array<int, 4>{1, 1, 1, 1};
    return ok;
}

// --- criterion 3: cycle arithmetic -------------------------------------------

bool cycle_arithmetic() {
    const ClockConfig clock;
    bool ok = clock.cycles_to_us(cc_channel(32, 8, 64)) == 737.28;
    ok = ok && clock.cycles_to_us(cc_channel(32, 1, 32)) == 1474.56;
    ok = ok && delta_t_us(50000, 64) == 781.25;
    ok = ok && delta_t_us(50000, 32) == 1562.5;
    ok = ok && delta_t_us(100000, 32) == 3125.0;
    ok = ok && delta_t_us(100000, 16) == 6250.0;
    return ok;
}

// --- criterion 4: candidate sets before and after pooling ---------------------

FeatureGraph topology_graph(const EventGraph& g) {
    FeatureGraph out;
    out.size = g.size;
    for (const Vertex& v : g.vertices)
        out.nodes.push_back({v.x, v.y, v.t, FeatureVector{v.polarity}});
    for (const Edge& e : g.edges)
        out.edges.emplace_back(e.src, e.dst);
    return out;
}

bool candidate_sets() {
    if (candidate_offsets(3).size() != 29)
        return false;

    std::mt19937_64 rng(4040);
    SensorConfig sensor{128, 128, 100000, 128};
    for (int round = 0; round < 1000; ++round) {
        const auto raw = oracle::random_grid_stream(rng, rng() % 600, 128, 100000);
        std::vector<NormalizedEvent> events;
        for (const Event& ev : raw)
            if (auto ne = normalize(ev, sensor))
                events.push_back(*ne);
        const EventGraph g = build_graph(events, 128, 3);
        const FeatureGraph pooled = topology_graph(g);
        const FeatureGraph p1 = maxpool(pooled, PoolSpec{4});
        std::vector<std::size_t> outdeg(p1.nodes.size(), 0);
        for (std::size_t e = 0; e < p1.edges.size(); ++e) {
            if (!in_pooled_candidate_set(p1.edge_offset(e)))
                return false;
            ++outdeg[p1.edges[e].first];
        }
        for (std::size_t deg : outdeg)
            if (deg + 1 > 18) // messages: one per edge plus the self-loop
                return false;
    }

    // A hand-placed pattern drives the pooled vertex of cluster (1,1,1) to
    // the full 17-edge set: nine previous-slice anchors at t=3, eight
    // same-slice targets at t=5, cluster members at t=4 and t=6 within
    // distance 3 of each of them.
    std::vector<NormalizedEvent> crafted;
    const auto at = [&](std::uint16_t x, std::uint16_t y, std::uint16_t t) {
        crafted.push_back({x, y, t, 0, 1});
    };
    for (auto [x, y] : {std::pair{2, 2}, {4, 2}, {2, 4}, {4, 4}, {9, 9}, {9, 7}, {7, 9},
                        {9, 2}, {2, 9}})
        at(static_cast<std::uint16_t>(x), static_cast<std::uint16_t>(y), 3);
    for (auto [x, y] : {std::pair{4, 4}, {7, 7}, {7, 4}, {4, 7}})
        at(static_cast<std::uint16_t>(x), static_cast<std::uint16_t>(y), 4);
    for (auto [x, y] : {std::pair{2, 2}, {4, 2}, {2, 4}, {9, 9}, {9, 7}, {7, 9}, {9, 2},
                        {2, 9}})
        at(static_cast<std::uint16_t>(x), static_cast<std::uint16_t>(y), 5);
    for (auto [x, y] : {std::pair{4, 4}, {7, 7}, {7, 4}, {4, 7}})
        at(static_cast<std::uint16_t>(x), static_cast<std::uint16_t>(y), 6);

    const EventGraph g = build_graph(crafted, 128, 3);
    const FeatureGraph p1 = maxpool(topology_graph(g), PoolSpec{4});
    std::vector<std::size_t> outdeg(p1.nodes.size(), 0);
    for (std::size_t e = 0; e < p1.edges.size(); ++e)
        ++outdeg[p1.edges[e].first];
    std::size_t max_deg = 0;
    for (std::size_t deg : outdeg)
        max_deg = std::max(max_deg, deg);
    return max_deg == 17;
}

// --- criterion 5: streaming equals the offline route --------------------------

bool streaming_offline_equivalence() {
    std::mt19937_64 rng(505);
    for (Variant v : {Variant::small, Variant::base, Variant::large}) {
        for (int round = 0; round < 100; ++round) {
            const std::uint16_t beta = round % 2 == 0 ? 128 : 256;
            const ModelConfig cfg = config_for(v, beta);
            const ModelWeights w = gen_weights(v, 2 + round % 4, rng());
            EventData data;
            data.events = oracle::random_grid_stream(
                rng, 50 + rng() % 900, beta,
                cfg.time_window_us + rng() % cfg.time_window_us);

            const InferenceResult a = run_inference(data, cfg, w);
            const InferenceResult b = ref::run_offline(data, cfg, w);
            if (a.predictions.size() != b.predictions.size())
                return false;
            for (std::size_t i = 0; i < a.predictions.size(); ++i) {
                const Prediction& pa = a.predictions[i];
                const Prediction& pb = b.predictions[i];
                if (pa.t_end_us != pb.t_end_us || pa.label != pb.label ||
                    pa.scores != pb.scores || pa.warmup != pb.warmup)
                    return false;
            }
        }
    }
    return true;
}

// --- criterion 6: incremental graph equals brute force ------------------------

bool graph_oracle_equivalence() {
    std::mt19937_64 rng(606);
    SensorConfig sensor{128, 128, 100000, 128};
    for (int round = 0; round < 1000; ++round) {
        std::size_t count = rng() % 800;
        if (round % 100 == 0)
            count = 3000 + rng() % 2001; // up to the 5000-event bound
        const auto raw = oracle::random_grid_stream(rng, count, 128, 100000);
        std::vector<NormalizedEvent> events;
        for (const Event& ev : raw)
            if (auto ne = normalize(ev, sensor))
                events.push_back(*ne);

        const EventGraph g = build_graph(events, 128, 3);
        std::vector<oracle::OracleEdge> got;
        got.reserve(g.edges.size());
        for (const Edge& e : g.edges)
            got.push_back({e.src, e.dst, e.dx, e.dy, e.dt});
        std::sort(got.begin(), got.end());
        if (got != oracle::brute_force_edges(events, 128, 3))
            return false;
    }
    return true;
}

// --- criterion 7: flops formula vs instrumented counter -----------------------

bool flops_oracle_equality() {
    std::mt19937_64 rng(707);
    const ModelConfig cfg = config_for(Variant::base, 128);
    for (int round = 0; round < 500; ++round) {
        const ModelWeights w = gen_weights(Variant::base, 2, rng());
        EventData data;
        data.events =
            oracle::random_grid_stream(rng, 10 + rng() % 200, 128, cfg.time_window_us);
        const ref::FloatResult fr = ref::run_offline_float(data, cfg, w);
        const FlopsReport report = analyze_flops(data, cfg);
        for (int layer = 0; layer < 5; ++layer) {
            const auto& ops = fr.ops[static_cast<std::size_t>(layer)];
            const LayerGraphStats& s = report.layers[static_cast<std::size_t>(layer)];
            if (s.nodes != ops.nodes || s.edges != ops.edge_messages)
                return false;
            if (flops_mlp_scaled(s.edges, s.f_in, s.f_out, s.nodes) !=
                (ops.mults + ops.adds) * s.nodes)
                return false;
            if (flops_updt_scaled(s.edges, s.f_out, s.nodes) != ops.maxes * s.nodes)
                return false;
            if (flops_aggr_scaled(s.edges, s.f_out) != ops.maxes * s.edges)
                return false;
            if (flops_total_scaled(s.edges, s.f_in, s.f_out, s.nodes) !=
                (ops.mults + ops.adds + ops.maxes) * s.nodes + ops.maxes * s.edges)
                return false;
        }
    }
    return true;
}

// --- criterion 8: parameter counts --------------------------------------------

bool parameter_counts() {
    const std::size_t small = gen_weights(Variant::small, 2, 1).parameter_count();
    const std::size_t base = gen_weights(Variant::base, 2, 1).parameter_count();
    const std::size_t large = gen_weights(Variant::large, 2, 1).parameter_count();
    // Exact dimension arithmetic from the architecture table, and the
    // reference 0.1k-rounded sizes: 5.2k / 10.6k / 20.2k.
    const auto rounded = [](std::size_t n) { return std::llround(n / 100.0) / 10.0; };
    return small == 5202 && base == 10578 && large == 20178 &&
           variant_spec(Variant::small).parameter_count(2) == small &&
           variant_spec(Variant::base).parameter_count(2) == base &&
           variant_spec(Variant::large).parameter_count(2) == large &&
           rounded(small) == 5.2 && rounded(base) == 10.6 && rounded(large) == 20.2;
}

// --- criterion 9: requantization bit-exactness ---------------------------------

bool requant_bit_exact() {
    std::mt19937_64 rng(909);
    QuantizedLinear l;
    for (int i = 0; i < 100000; ++i) {
        const auto acc = static_cast<std::int32_t>(rng());
        l.requant_multiplier = static_cast<std::int32_t>(rng() % 65536);
        l.requant_shift = static_cast<int>(rng() % 32);
        l.zero_point = static_cast<std::uint8_t>(rng() % 256);
        if (requantize(acc, l) != oracle::requantize_wide(acc, l.requant_multiplier,
                                                          l.requant_shift, l.zero_point))
            return false;
    }
    return true;
}

// --- criterion 10: float/quantized argmax agreement ----------------------------

bool argmax_agreement() {
    std::mt19937_64 rng(1010);
    int trials = 0;
    int agreed = 0;
    for (int round = 0; round < 400; ++round) {
        const Variant v = std::array{Variant::small, Variant::base,
                                     Variant::large}[round % 3];
        const ModelConfig cfg = config_for(v, 128);
        const ModelWeights w = gen_weights(v, 2 + round % 3, rng());
        EventData data;
        data.events =
            oracle::random_grid_stream(rng, 100 + rng() % 400, 128, cfg.time_window_us);

        const InferenceResult q = ref::run_offline(data, cfg, w);
        const ref::FloatResult f = ref::run_offline_float(data, cfg, w);
        // Compare the final prediction, the one covering the full stream.
        ++trials;
        if (q.predictions.back().label == f.predictions.back().label)
            ++agreed;
    }
    const double agreement = static_cast<double>(agreed) / trials;
    std::printf("      argmax agreement: %.1f%% over %d trials\n", agreement * 100.0,
                trials);
    return agreement >= 0.95;
}

// --- criterion 11: per-event latency sanity -------------------------------------

bool per_event_latency() {
    const SimReport r = simulate(EventData{}, config_for(Variant::small, 128));
    const double reference = 6.56;
    const double deviation = std::abs(r.per_event_latency_us - reference) / reference;
    std::printf("      per-event latency: %.3f us vs %.2f us (deviation %.1f%%)\n",
                r.per_event_latency_us, reference, deviation * 100.0);
    return deviation <= 0.10;
}

} // namespace

int main() {
    run(1, "simulator reports the 13.33 MEPS service rate", throughput_constant);
    run(2, "multiplier planning matches the reference strategies", planning_matches_tables);
    run(3, "channel durations and slice times are exact", cycle_arithmetic);
    run(4, "29 candidates pre-pool, 17+self post-pool (1000 graphs)", candidate_sets);
    run(5, "streaming equals offline inference (300 streams)", streaming_offline_equivalence);
    run(6, "graph builder equals brute-force replay (1000 streams)", graph_oracle_equivalence);
    run(7, "flops formula equals instrumented counters (500 graphs)", flops_oracle_equality);
    run(8, "generated parameter counts match the dimension arithmetic", parameter_counts);
    run(9, "requantization is bit-exact against a wide-integer oracle", requant_bit_exact);
    run(10, "float and quantized paths agree on 95% of argmax labels", argmax_agreement);
    run(11, "per-event latency within 10% of the reference 6.56 us", per_event_latency);

    if (failures == 0) {
        std::printf("all acceptance criteria passed\n");
        return 0;
    }
    std::printf("%d acceptance criteria failed\n", failures);
    return 1;
}
