#include <doctest.h>

#include <sstream>

#include "evgraph/hwsim.hpp"

using namespace evgraph;

namespace {

ModelConfig config_for(Variant v, std::uint16_t beta) {
    ModelConfig cfg;
    cfg.variant = v;
    cfg.beta = beta;
    cfg.time_window_us = beta == 128 ? 100000 : 50000;
    return cfg;
}

std::array<int, 4> planned_m(const std::vector<LayerPlan>& plans) {
    return {plans[0].m, plans[1].m, plans[2].m, plans[3].m};
}

EventData uniform_stream(double meps, std::uint32_t duration_us, std::uint16_t grid) {
    EventData data;
    const auto count = static_cast<std::size_t>(meps * duration_us);
    data.events.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        Event ev;
        ev.t = static_cast<std::uint32_t>(
            static_cast<std::uint64_t>(i) * duration_us / count);
        ev.x = static_cast<std::uint16_t>((i * 37) % grid);
        ev.y = static_cast<std::uint16_t>((i * 53) % grid);
        ev.p = i % 2;
        data.events.push_back(ev);
    }
    return data;
}

} // namespace

TEST_CASE("slice durations") {
    CHECK(delta_t_us(50000, 64) == 781.25);
    CHECK(delta_t_us(100000, 32) == 3125.0);
    CHECK(delta_t_us(100000, 1) == 100000.0);
    CHECK_THROWS_AS(delta_t_us(100000, 0), Error);

    const ClockConfig clock;
    CHECK(delta_t_cycles(50000, 64, clock) == 156250);
    CHECK(delta_t_cycles(100000, 32, clock) == 625000);
}

TEST_CASE("per-vertex and per-channel cycle counts") {
    CHECK(cc_vertex(32, 8) == 36);
    CHECK(cc_vertex(32, 1) == 288);
    CHECK(cc_vertex(16, 16) == 9);
    CHECK_THROWS_AS(cc_vertex(32, 3), Error);
    CHECK_THROWS_AS(cc_vertex(32, 0), Error);

    const ClockConfig clock;
    CHECK(cc_channel(32, 8, 64) == 147456);
    CHECK(clock.cycles_to_us(cc_channel(32, 8, 64)) == 737.28);
    CHECK(cc_channel(64, 1, 16) == 147456);
    CHECK(clock.cycles_to_us(cc_channel(64, 1, 16)) == 737.28);
    CHECK(cc_channel(32, 1, 0) == 0);
}

TEST_CASE("multiplier planning reproduces the reference strategies") {
    const ClockConfig clock;

    SUBCASE("beta 256, 50 ms window") {
        CHECK(planned_m(select_multipliers(config_for(Variant::small, 256), clock)) ==
              std::array<int, 4>{8, 8, 1, 1});
        CHECK(planned_m(select_multipliers(config_for(Variant::base, 256), clock)) ==
              std::array<int, 4>{8, 8, 2, 2});
        CHECK(planned_m(select_multipliers(config_for(Variant::large, 256), clock)) ==
              std::array<int, 4>{8, 16, 2, 4});
    }

    SUBCASE("beta 128, 100 ms window runs sequentially everywhere") {
        for (Variant v : {Variant::small, Variant::base, Variant::large})
            CHECK(planned_m(select_multipliers(config_for(v, 128), clock)) ==
                  std::array<int, 4>{1, 1, 1, 1});
    }

    SUBCASE("durations match the reference timings") {
        const auto plans = select_multipliers(config_for(Variant::base, 256), clock);
        CHECK(plans[0].duration_us == 737.28);
        CHECK(plans[1].duration_us == 737.28);
        CHECK(plans[2].duration_us == 1474.56);
        CHECK(plans[3].duration_us == 1474.56);
        CHECK(plans[0].delta_t_us == 781.25);
        CHECK(plans[2].delta_t_us == 1562.5);

        const auto tw100 = select_multipliers(config_for(Variant::large, 128), clock);
        CHECK(tw100[0].delta_t_us == 3125.0);
        CHECK(tw100[2].delta_t_us == 6250.0);
        CHECK(tw100[1].duration_us == 2949.12); // conv3, dim 64, m=1, size 32
        CHECK(tw100[3].duration_us == 1474.56); // conv5, dim 128, m=1, size 16
    }

    SUBCASE("planned m is minimal") {
        for (std::uint16_t beta : {std::uint16_t{128}, std::uint16_t{256}})
            for (Variant v : {Variant::small, Variant::base, Variant::large})
                for (const LayerPlan& p : select_multipliers(config_for(v, beta), clock)) {
                    CHECK(cc_channel(p.dim, p.m, p.size) <= p.delta_t_cycles);
                    if (p.m > 1)
                        CHECK(cc_channel(p.dim, p.m / 2, p.size) > p.delta_t_cycles);
                }
    }

    SUBCASE("an infeasible clock raises a planning error") {
        const ClockConfig slow{1'000'000}; // 1 MHz
        CHECK_THROWS_AS(select_multipliers(config_for(Variant::base, 256), slow),
                        PlanError);
    }

    SUBCASE("the cost model is pinned to radius 3") {
        ModelConfig cfg = config_for(Variant::base, 128);
        cfg.radius = 5;
        CHECK_THROWS_AS(select_multipliers(cfg, clock), ConfigError);
    }
}

TEST_CASE("simulate reports the constant service rate") {
    const ModelConfig cfg = config_for(Variant::small, 128);
    const SimReport a = simulate(EventData{}, cfg);
    CHECK(a.throughput_meps == 200e6 / 15 / 1e6);

    const SimReport b = simulate(uniform_stream(0.2, 100000, 128), cfg);
    CHECK(b.throughput_meps == a.throughput_meps);

    const ClockConfig fast{400'000'000};
    const SimReport c = simulate(EventData{}, cfg, fast);
    CHECK(c.throughput_meps == doctest::Approx(26.6666667));
}

TEST_CASE("fifo occupancy stays bounded below the service rate") {
    // 10 MEPS arrives as 10-event bursts per microsecond tick; the 13.3 MEPS
    // service rate drains each burst before the next.
    const ModelConfig cfg = config_for(Variant::small, 128);
    const SimReport r = simulate(uniform_stream(10.0, 100000, 128), cfg);
    CHECK(r.fifo_dropped == 0);
    CHECK(r.fifo_peak <= 16);
    CHECK(r.fifo_profile.back() <= 16);
}

TEST_CASE("fifo occupancy grows monotonically above the service rate") {
    const ModelConfig cfg = config_for(Variant::small, 128);
    const SimReport r = simulate(uniform_stream(20.0, 100000, 128), cfg);
    for (std::size_t i = 1; i < r.fifo_profile.size(); ++i)
        CHECK(r.fifo_profile[i] >= r.fifo_profile[i - 1]);
    CHECK(r.fifo_peak > 1000);

    SimOptions shallow;
    shallow.fifo_depth = 256;
    const SimReport d = simulate(uniform_stream(20.0, 100000, 128), cfg, {}, shallow);
    CHECK(d.fifo_dropped > 0);
    CHECK(d.fifo_peak <= 256);
}

TEST_CASE("per-event latency is the stage-delay sum") {
    // Small model, beta 128: 15 + 15 + 4 * 288 cycles at 200 MHz.
    const SimReport r = simulate(EventData{}, config_for(Variant::small, 128));
    CHECK(r.per_event_latency_us == doctest::Approx(1182.0 / 200.0));

    // Every beta-256 variant lands on the same 678-cycle sum.
    for (Variant v : {Variant::small, Variant::base, Variant::large}) {
        const SimReport s = simulate(EventData{}, config_for(v, 256));
        CHECK(s.per_event_latency_us == doctest::Approx((30 + 36 + 36 + 288 + 288) / 200.0));
    }
}

TEST_CASE("pl latency covers the tail of the synchronous chain") {
    const ModelConfig cfg = config_for(Variant::small, 128);
    const SimReport r = simulate(uniform_stream(0.5, 100000, 128), cfg);
    // conv2 + conv3 tail (two channels at 1474.56 us) plus conv4 + conv5
    // (368.64 us each) behind the last slice boundary.
    CHECK(r.pl_latency_ms == doctest::Approx(3.6864).epsilon(0.01));
    CHECK(r.schedule_violations == 0);
    CHECK(r.predictions == 4);

    SimOptions opt;
    opt.ps_latency_us = 610;
    const SimReport s = simulate(uniform_stream(0.5, 100000, 128), cfg, {}, opt);
    CHECK(s.pl_ps_latency_ms == doctest::Approx(r.pl_latency_ms + 0.61));
}

TEST_CASE("report formats") {
    const ModelConfig cfg = config_for(Variant::base, 256);
    const SimReport r = simulate(uniform_stream(0.5, 50000, 128), cfg);

    std::ostringstream machine;
    print_report(r, machine, true);
    CHECK(machine.str().find("throughput_meps 13.333333") != std::string::npos);
    CHECK(machine.str().find("layer conv2 size 64") != std::string::npos);

    std::ostringstream human;
    print_report(r, human, false);
    CHECK(human.str().find("13.33 MEPS") != std::string::npos);
    CHECK(human.str().find("conv5") != std::string::npos);
}
