#include "evgraph/analysis.hpp"

#include <cstdio>
#include <ostream>

#include "evgraph/reference.hpp"

namespace evgraph {

FlopsBreakdown flops_breakdown(std::uint64_t edges, int f_in, int f_out, double k) {
    FlopsBreakdown b;
    const double e = static_cast<double>(edges);
    b.mlp = 2.0 * f_in * f_out * e;
    b.aggr = static_cast<double>(f_out) * k * e;
    b.updt = static_cast<double>(f_out) * e;
    b.total = b.mlp + b.aggr + b.updt;
    return b;
}

double flops_total(std::uint64_t edges, int f_in, int f_out, double k) {
    return static_cast<double>(edges) * f_out * (2.0 * f_in + k + 1.0);
}

std::uint64_t flops_mlp_scaled(std::uint64_t edges, int f_in, int f_out,
                               std::uint64_t nodes) {
    return 2ull * static_cast<std::uint64_t>(f_in) * static_cast<std::uint64_t>(f_out) *
           edges * nodes;
}

std::uint64_t flops_aggr_scaled(std::uint64_t edges, int f_out) {
    // (F_out * K * E) * N with K = E/N.
    return static_cast<std::uint64_t>(f_out) * edges * edges;
}

std::uint64_t flops_updt_scaled(std::uint64_t edges, int f_out, std::uint64_t nodes) {
    return static_cast<std::uint64_t>(f_out) * edges * nodes;
}

std::uint64_t flops_total_scaled(std::uint64_t edges, int f_in, int f_out,
                                 std::uint64_t nodes) {
    return flops_mlp_scaled(edges, f_in, f_out, nodes) + flops_aggr_scaled(edges, f_out) +
           flops_updt_scaled(edges, f_out, nodes);
}

double flops_per_event(double total_flops, std::uint64_t event_count) {
    if (event_count == 0)
        throw Error("flops_per_event: event count must be positive");
    return total_flops / static_cast<double>(event_count) / 1e6;
}

FlopsReport analyze_flops(const EventData& data, const ModelConfig& cfg) {
    const auto topo = ref::layer_topology(data, cfg);
    const VariantSpec& spec = cfg.spec();

    FlopsReport report;
    for (int i = 0; i < 5; ++i) {
        LayerGraphStats s;
        s.layer = topo[static_cast<std::size_t>(i)].name;
        s.nodes = topo[static_cast<std::size_t>(i)].nodes;
        s.edges = topo[static_cast<std::size_t>(i)].edges;
        s.avg_neighbours =
            s.nodes > 0 ? static_cast<double>(s.edges) / static_cast<double>(s.nodes) : 0.0;
        s.f_in = spec.conv[static_cast<std::size_t>(i)].in;
        s.f_out = spec.conv[static_cast<std::size_t>(i)].out;
        report.flops.push_back(flops_breakdown(s.edges, s.f_in, s.f_out, s.avg_neighbours));
        report.total += report.flops.back().total;
        report.layers.push_back(std::move(s));
    }
    report.events = report.layers.front().nodes;
    report.mflops_per_event =
        report.events > 0 ? flops_per_event(report.total, report.events) : 0.0;
    return report;
}

void write_flops_csv(const FlopsReport& report, std::ostream& out) {
    out << "layer,N,E,K,flops_mlp,flops_aggr,flops_updt,flops_tot\n";
    char buf[192];
    for (std::size_t i = 0; i < report.layers.size(); ++i) {
        const LayerGraphStats& s = report.layers[i];
        const FlopsBreakdown& f = report.flops[i];
        std::snprintf(buf, sizeof buf, "%s,%llu,%llu,%.6g,%.10g,%.10g,%.10g,%.10g\n",
                      s.layer.c_str(), static_cast<unsigned long long>(s.nodes),
                      static_cast<unsigned long long>(s.edges), s.avg_neighbours, f.mlp,
                      f.aggr, f.updt, f.total);
        out << buf;
    }
}

namespace {

double ratio(std::uint64_t base, std::uint64_t reduced) {
    if (base == 0 || reduced == 0)
        return 1.0;
    return static_cast<double>(base) / static_cast<double>(reduced);
}

} // namespace

ReductionStats reduction_stats(const FlopsReport& report) {
    ReductionStats r;
    if (report.layers.size() < 5)
        return r;
    r.pool1_vertices = ratio(report.layers[0].nodes, report.layers[1].nodes);
    r.pool1_edges = ratio(report.layers[0].edges, report.layers[1].edges);
    r.pool2_vertices = ratio(report.layers[0].nodes, report.layers[3].nodes);
    r.pool2_edges = ratio(report.layers[0].edges, report.layers[3].edges);
    return r;
}

} // namespace evgraph
