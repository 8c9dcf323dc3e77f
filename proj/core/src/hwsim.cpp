#include "evgraph/hwsim.hpp"

#include <algorithm>
#include <cstdio>
#include <deque>
#include <ostream>

#include "evgraph/graph.hpp"
#include "evgraph/model.hpp"

namespace evgraph {

namespace {

constexpr std::uint64_t kFrontEndCycles = 15; // matrix access bound per event
constexpr std::uint64_t kAsyncConvCycles = 15;

std::uint64_t to_cycles(std::uint64_t micros, ClockConfig clock) {
    return micros * clock.frequency_hz / 1'000'000;
}

} // namespace

double delta_t_us(std::uint32_t time_window_us, int size) {
    if (size <= 0)
        throw Error("delta_t: grid size must be positive");
    return static_cast<double>(time_window_us) / size;
}

std::uint64_t delta_t_cycles(std::uint32_t time_window_us, int size, ClockConfig clock) {
    if (size <= 0)
        throw Error("delta_t: grid size must be positive");
    return static_cast<std::uint64_t>(time_window_us) * clock.frequency_hz /
           (1'000'000ull * static_cast<std::uint64_t>(size));
}

std::uint64_t cc_vertex(int dim, int m) {
    if (m <= 0 || dim % m != 0)
        throw Error("cc_vertex: m must divide the output dimension");
    return 9ull * static_cast<std::uint64_t>(dim / m);
}

std::uint64_t cc_channel(int dim, int m, int size) {
    return cc_vertex(dim, m) * static_cast<std::uint64_t>(size) *
           static_cast<std::uint64_t>(size);
}

std::vector<LayerPlan> select_multipliers(const ModelConfig& cfg, ClockConfig clock) {
    cfg.validate();
    if (cfg.radius != 3)
        throw ConfigError("the hardware cost model is fixed to a search radius of 3");
    const VariantSpec& spec = cfg.spec();
    std::vector<LayerPlan> plans;
    static const char* names[4] = {"conv2", "conv3", "conv4", "conv5"};
    for (int i = 0; i < 4; ++i) {
        LayerPlan plan;
        plan.name = names[i];
        plan.size = i < 2 ? cfg.size_after_pool1() : cfg.size_after_pool2();
        plan.dim = spec.conv[static_cast<std::size_t>(i + 1)].out;
        plan.delta_t_us = delta_t_us(cfg.time_window_us, plan.size);
        plan.delta_t_cycles = delta_t_cycles(cfg.time_window_us, plan.size, clock);

        int m = 1;
        while (cc_channel(plan.dim, m, plan.size) > plan.delta_t_cycles) {
            if (m >= plan.dim)
                throw PlanError("no feasible multiplier count for " + plan.name + ": even m=" +
                                std::to_string(plan.dim) + " misses the slice budget");
            m *= 2;
        }
        plan.m = m;
        plan.cc_vertex_cycles = cc_vertex(plan.dim, m);
        plan.cc_channel_cycles = cc_channel(plan.dim, m, plan.size);
        plan.duration_us = clock.cycles_to_us(plan.cc_channel_cycles);
        plans.push_back(std::move(plan));
    }
    return plans;
}

SimReport simulate(const EventData& data, const ModelConfig& cfg, ClockConfig clock,
                   SimOptions options) {
    cfg.validate();
    SimReport report;
    report.plans = select_multipliers(cfg, clock);
    report.throughput_meps = static_cast<double>(clock.frequency_hz) / 15 / 1e6;

    const StreamPlan plan = plan_stream(data, cfg, std::nullopt);

    // ---- front end: FIFO feeding the 15-cycle graph generator ----
    struct Accepted {
        std::uint64_t arrival = 0;    // cycles
        std::uint64_t pool_write = 0; // graph-gen + async conv exit
        std::int64_t slice1 = 0;
    };
    std::vector<Accepted> accepted;
    accepted.reserve(plan.stream.size());

    std::uint64_t service_done = 0; // graph-gen busy-until
    std::deque<std::uint64_t> queue; // service-start times of queued events
    std::size_t peak = 0;
    std::size_t sample_idx = 0;
    const std::size_t total_events = plan.stream.size();

    for (std::size_t i = 0; i < plan.stream.size(); ++i) {
        const Event& ev = plan.stream[i];
        const auto ne = normalize(ev, plan.sensor);
        if (!ne) {
            ++report.events_dropped;
        } else {
            const std::uint64_t arrival = to_cycles(ev.t, clock);
            while (!queue.empty() && queue.front() <= arrival)
                queue.pop_front();
            if (queue.size() >= options.fifo_depth) {
                ++report.fifo_dropped;
            } else {
                const std::uint64_t start = std::max(arrival, service_done);
                service_done = start + kFrontEndCycles;
                queue.push_back(start);
                peak = std::max(peak, queue.size());

                Accepted a;
                a.arrival = arrival;
                a.pool_write = service_done + kAsyncConvCycles;
                a.slice1 = extended_time(*ne, cfg.beta) / 4;
                accepted.push_back(a);
                ++report.events;
            }
        }
        while (sample_idx < report.fifo_profile.size() &&
               (i + 1) * report.fifo_profile.size() >=
                   (sample_idx + 1) * std::max<std::size_t>(total_events, 1)) {
            report.fifo_profile[sample_idx++] = queue.size();
        }
    }
    report.fifo_peak = peak;
    report.front_end_cycles_total = front_end_cycles(report.events);

    // ---- synchronous schedule ----
    const std::uint64_t n_pred = plan.n_predictions;
    report.predictions = n_pred;
    const int size1 = cfg.size_after_pool1();
    const std::int64_t l1_per_pred = size1 / 4;
    const std::int64_t n_l1 = static_cast<std::int64_t>(n_pred) * l1_per_pred;
    const std::int64_t n_l2 = n_l1 / 2;
    const std::uint64_t dt1 = report.plans[0].delta_t_cycles;

    // Latest pool write per level-1 slice.
    std::vector<std::uint64_t> last_write(static_cast<std::size_t>(n_l1), 0);
    for (const Accepted& a : accepted) {
        if (a.slice1 < n_l1)
            last_write[static_cast<std::size_t>(a.slice1)] =
                std::max(last_write[static_cast<std::size_t>(a.slice1)], a.pool_write);
    }

    const std::uint64_t cc2 = report.plans[0].cc_channel_cycles;
    const std::uint64_t cc3 = report.plans[1].cc_channel_cycles;
    const std::uint64_t cc4 = report.plans[2].cc_channel_cycles;
    const std::uint64_t cc5 = report.plans[3].cc_channel_cycles;

    std::vector<std::uint64_t> ready1(static_cast<std::size_t>(n_l1), 0); // slice data complete
    std::vector<std::uint64_t> start2(static_cast<std::size_t>(n_l1), 0);
    std::vector<std::uint64_t> fin2(static_cast<std::size_t>(n_l1), 0);
    std::vector<std::uint64_t> start3(static_cast<std::size_t>(n_l1), 0);
    std::vector<std::uint64_t> fin3(static_cast<std::size_t>(n_l1), 0);
    for (std::int64_t n = 0; n < n_l1; ++n) {
        const auto i = static_cast<std::size_t>(n);
        const std::uint64_t heartbeat = static_cast<std::uint64_t>(n + 1) * dt1;
        if (last_write[i] > heartbeat)
            ++report.schedule_violations; // FIFO backlog crossed a slice boundary
        ready1[i] = std::max(heartbeat, last_write[i]);
        start2[i] = std::max(ready1[i], n > 0 ? fin2[i - 1] : 0);
        fin2[i] = start2[i] + cc2;
        start3[i] = std::max(fin2[i], n > 0 ? fin3[i - 1] : 0);
        fin3[i] = start3[i] + cc3;
        // Triple-buffer overruns: the buffer being recycled for slice n must
        // have been fully consumed.
        if (n >= 2 && fin2[i - 2] > static_cast<std::uint64_t>(n + 1) * dt1)
            ++report.schedule_violations;
        if (n >= 2 && fin3[i - 2] > start2[i])
            ++report.schedule_violations;
    }

    std::vector<std::uint64_t> fin4(static_cast<std::size_t>(n_l2), 0);
    std::vector<std::uint64_t> fin5(static_cast<std::size_t>(n_l2), 0);
    for (std::int64_t k = 0; k < n_l2; ++k) {
        const auto i = static_cast<std::size_t>(k);
        const std::uint64_t ready2 = fin3[static_cast<std::size_t>(2 * k + 1)];
        const std::uint64_t s4 = std::max(ready2, k > 0 ? fin4[i - 1] : 0);
        fin4[i] = s4 + cc4;
        const std::uint64_t s5 = std::max(fin4[i], k > 0 ? fin5[i - 1] : 0);
        fin5[i] = s5 + cc5;
        if (k >= 2 && fin4[i - 2] > ready2)
            ++report.schedule_violations;
        if (k >= 2 && fin5[i - 2] > s4)
            ++report.schedule_violations;
    }

    if (n_pred > 0) {
        const int kernel = cfg.pool_out_kernel();
        const std::uint64_t j = n_pred - 1; // steady-state window
        const std::uint64_t done =
            fin5[static_cast<std::size_t>((j + 1) * static_cast<std::uint64_t>(kernel) - 1)];
        const std::uint64_t window_end =
            to_cycles((j + 1) * cfg.prediction_period_us(), clock);
        report.pl_latency_ms = clock.cycles_to_us(done - std::min(done, window_end)) / 1000.0;
        report.pl_ps_latency_ms = report.pl_latency_ms + options.ps_latency_us / 1000.0;
    }

    // Stage-delay sum: graph generation, asynchronous convolution, and one
    // vertex worth of processing in each synchronous layer.
    std::uint64_t stage_cycles = kFrontEndCycles + kAsyncConvCycles;
    for (const LayerPlan& p : report.plans)
        stage_cycles += p.cc_vertex_cycles;
    report.per_event_latency_us = clock.cycles_to_us(stage_cycles);
    return report;
}

void print_report(const SimReport& report, std::ostream& out, bool machine_format) {
    char buf[160];
    if (machine_format) {
        std::snprintf(buf, sizeof buf, "throughput_meps %.6f\n", report.throughput_meps);
        out << buf;
        out << "events " << report.events << '\n';
        out << "events_dropped " << report.events_dropped << '\n';
        out << "front_end_cycles " << report.front_end_cycles_total << '\n';
        out << "fifo_peak " << report.fifo_peak << '\n';
        out << "fifo_dropped " << report.fifo_dropped << '\n';
        out << "schedule_violations " << report.schedule_violations << '\n';
        out << "predictions " << report.predictions << '\n';
        std::snprintf(buf, sizeof buf, "per_event_latency_us %.6f\n",
                      report.per_event_latency_us);
        out << buf;
        std::snprintf(buf, sizeof buf, "pl_latency_ms %.6f\n", report.pl_latency_ms);
        out << buf;
        std::snprintf(buf, sizeof buf, "pl_ps_latency_ms %.6f\n", report.pl_ps_latency_ms);
        out << buf;
        for (const LayerPlan& p : report.plans) {
            std::snprintf(buf, sizeof buf,
                          "layer %s size %d delta_t_us %.6f dim %d m %d cc_vertex %llu "
                          "cc_channel %llu duration_us %.6f\n",
                          p.name.c_str(), p.size, p.delta_t_us, p.dim, p.m,
                          static_cast<unsigned long long>(p.cc_vertex_cycles),
                          static_cast<unsigned long long>(p.cc_channel_cycles), p.duration_us);
            out << buf;
        }
        return;
    }

    std::snprintf(buf, sizeof buf, "sustained throughput: %.2f MEPS\n",
                  report.throughput_meps);
    out << buf;
    out << "events: " << report.events << " (" << report.events_dropped
        << " out of bounds, " << report.fifo_dropped << " dropped by FIFO)\n";
    out << "front-end cycles: " << report.front_end_cycles_total << '\n';
    out << "FIFO peak occupancy: " << report.fifo_peak << '\n';
    out << "schedule violations: " << report.schedule_violations << '\n';
    std::snprintf(buf, sizeof buf, "per-event latency: %.2f us\n",
                  report.per_event_latency_us);
    out << buf;
    std::snprintf(buf, sizeof buf, "PL latency: %.3f ms (PL+PS %.3f ms)\n",
                  report.pl_latency_ms, report.pl_ps_latency_ms);
    out << buf;
    out << "layer    size  dT[us]      dim  m   CC/vertex  CC/channel  duration[us]\n";
    for (const LayerPlan& p : report.plans) {
        std::snprintf(buf, sizeof buf, "%-8s %-5d %-11.2f %-4d %-3d %-10llu %-11llu %.2f\n",
                      p.name.c_str(), p.size, p.delta_t_us, p.dim, p.m,
                      static_cast<unsigned long long>(p.cc_vertex_cycles),
                      static_cast<unsigned long long>(p.cc_channel_cycles), p.duration_us);
        out << buf;
    }
}

} // namespace evgraph
