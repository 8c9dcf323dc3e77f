// evgraph: event-stream conversion, graph inference, cycle cost simulation,
// and FLOPs accounting from one binary.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>

#include "evgraph/analysis.hpp"
#include "evgraph/hwsim.hpp"
#include "evgraph/model.hpp"
#include "evgraph/reference.hpp"

using namespace evgraph;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitModel = 3;
constexpr int kExitPlanning = 4;

// Streams either to a file or to stdout when the path is "-".
class OutputSink {
public:
    explicit OutputSink(const std::string& path) {
        if (path != "-") {
            file_.open(path, std::ios::binary);
            if (!file_)
                throw Error("cannot open " + path + " for writing");
        }
    }
    std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

private:
    std::ofstream file_;
};

EventFormat parse_format(const std::string& name) {
    if (name == "evt")
        return EventFormat::binary_evt;
    if (name == "csv")
        return EventFormat::csv;
    throw ParseError("unknown event format: " + name, 0);
}

ModelConfig resolve_config(const std::string& path) {
    if (path.empty())
        throw ConfigError("no model config given (use --config or EVGRAPH_CONFIG)");
    return load_model_config_file(path);
}

EventData synth_rate_stream(double rate_meps, unsigned windows, const ModelConfig& cfg,
                            std::uint64_t seed) {
    SensorConfig sensor{cfg.beta, cfg.beta, cfg.time_window_us, cfg.beta};
    const auto count = static_cast<std::size_t>(
        rate_meps * static_cast<double>(cfg.time_window_us) * windows);
    EventData data;
    data.width = cfg.beta;
    data.height = cfg.beta;
    data.time_window_us = cfg.time_window_us;
    data.events = synth_events(SynthPattern::random_uniform, sensor, count, seed, windows);
    return data;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"event-graph convolutional network engine and clock-cycle cost model"};
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("--config", config_path, "model config file")
        ->envname("EVGRAPH_CONFIG");

    // ---- convert ----
    auto* convert = app.add_subcommand("convert", "convert event streams between formats");
    std::string conv_in, conv_out, conv_in_fmt, conv_out_fmt;
    convert->add_option("--input,-i", conv_in, "input event file")->required();
    convert->add_option("--output,-o", conv_out, "output event file")->required();
    convert->add_option("--in-format", conv_in_fmt, "override input format (csv|evt)");
    convert->add_option("--out-format", conv_out_fmt, "override output format (csv|evt)");

    // ---- infer ----
    auto* infer = app.add_subcommand("infer", "run streaming inference over an event file");
    std::string infer_in, infer_weights, infer_out = "-";
    std::optional<std::uint64_t> infer_duration;
    bool infer_oracle = false, infer_skip_warmup = false;
    infer->add_option("--input,-i", infer_in, "input event file")->required();
    infer->add_option("--weights,-w", infer_weights, "weight file")->required();
    infer->add_option("--output,-o", infer_out, "prediction file (default stdout)");
    infer->add_option("--duration-us", infer_duration, "stream duration override");
    infer->add_flag("--oracle-check", infer_oracle,
                    "also run the offline reference and compare bit-exactly");
    infer->add_flag("--skip-warmup", infer_skip_warmup, "drop warm-up predictions");

    // ---- simulate ----
    auto* sim = app.add_subcommand("simulate", "clock-cycle cost model of the pipeline");
    std::string sim_in, sim_out = "-", sim_format = "table";
    double sim_rate = 0.0, sim_ps_us = 0.0, sim_clock_mhz = 200.0;
    unsigned sim_windows = 4;
    std::size_t sim_fifo = 8192;
    std::uint64_t sim_seed = 1;
    sim->add_option("--input,-i", sim_in, "input event file");
    sim->add_option("--rate", sim_rate, "synthesize a uniform stream at this MEPS rate");
    sim->add_option("--windows", sim_windows, "synthetic stream length in time windows");
    sim->add_option("--seed", sim_seed, "synthetic stream seed");
    sim->add_option("--output,-o", sim_out, "report file (default stdout)");
    sim->add_option("--format", sim_format, "report format")
        ->check(CLI::IsMember({"table", "kv"}));
    sim->add_option("--fifo-depth", sim_fifo, "front-end FIFO depth in events");
    sim->add_option("--ps-latency-us", sim_ps_us, "head cost on the processing system");
    sim->add_option("--clock-mhz", sim_clock_mhz, "clock frequency in MHz");

    // ---- flops ----
    auto* flops = app.add_subcommand("flops", "per-layer operation counts for a stream");
    std::string flops_in, flops_out = "-";
    bool flops_verify = false;
    std::uint64_t flops_seed = 1;
    flops->add_option("--input,-i", flops_in, "input event file")->required();
    flops->add_option("--output,-o", flops_out, "CSV report file (default stdout)");
    flops->add_flag("--verify", flops_verify,
                    "check the formula against instrumented reference counters");
    flops->add_option("--seed", flops_seed, "weight seed for --verify");

    // ---- gen-weights ----
    auto* gen = app.add_subcommand("gen-weights", "generate a random quantized weight file");
    std::string gen_variant, gen_out;
    int gen_cls = 2;
    std::uint64_t gen_seed = 1;
    gen->add_option("--variant", gen_variant, "model variant (S|B|L, default from config)")
        ->check(CLI::IsMember({"S", "B", "L", "small", "base", "large"}));
    gen->add_option("--cls", gen_cls, "number of classes");
    gen->add_option("--seed", gen_seed, "generator seed");
    gen->add_option("--output,-o", gen_out, "weight file path")->required();

    // ---- dump-graph ----
    auto* dump = app.add_subcommand("dump-graph", "build the event graph and dump it");
    std::string dump_in, dump_out = "-";
    dump->add_option("--input,-i", dump_in, "input event file")->required();
    dump->add_option("--output,-o", dump_out, "graph dump file (default stdout)");

    try {
        app.parse(argc, argv);

        if (*convert) {
            const EventFormat in_fmt = conv_in_fmt.empty() ? format_for_path(conv_in)
                                                           : parse_format(conv_in_fmt);
            const EventFormat out_fmt = conv_out_fmt.empty() ? format_for_path(conv_out)
                                                             : parse_format(conv_out_fmt);
            std::ifstream in(conv_in, std::ios::binary);
            if (!in)
                throw ParseError("cannot open " + conv_in, 0);
            const EventData data = read_events(in, in_fmt);
            std::ofstream out(conv_out, std::ios::binary);
            if (!out)
                throw Error("cannot open " + conv_out + " for writing");
            write_events(data, out, out_fmt);
        } else if (*infer) {
            const ModelConfig cfg = resolve_config(config_path);
            const ModelWeights weights = load_weights_file(infer_weights);
            const EventData data = read_events_file(infer_in);
            const InferenceResult res = run_inference(data, cfg, weights, infer_duration);
            if (infer_oracle) {
                const InferenceResult offline =
                    ref::run_offline(data, cfg, weights, infer_duration);
                bool same = res.predictions.size() == offline.predictions.size();
                for (std::size_t i = 0; same && i < res.predictions.size(); ++i)
                    same = res.predictions[i].t_end_us == offline.predictions[i].t_end_us &&
                           res.predictions[i].scores == offline.predictions[i].scores &&
                           res.predictions[i].label == offline.predictions[i].label;
                if (!same) {
                    std::cerr << "oracle check FAILED: streaming and offline disagree\n";
                    return 1;
                }
                std::cerr << "oracle check passed (" << res.predictions.size()
                          << " predictions)\n";
            }
            if (res.events_dropped > 0)
                std::cerr << res.events_dropped << " events out of bounds\n";
            OutputSink sink(infer_out);
            write_predictions(res.predictions, sink.stream(), infer_skip_warmup);
        } else if (*sim) {
            const ModelConfig cfg = resolve_config(config_path);
            if (sim_in.empty() == (sim_rate == 0.0))
                throw ParseError("simulate needs exactly one of --input or --rate", 0);
            const EventData data = sim_in.empty()
                                       ? synth_rate_stream(sim_rate, sim_windows, cfg,
                                                           sim_seed)
                                       : read_events_file(sim_in);
            ClockConfig clock;
            clock.frequency_hz = static_cast<std::uint64_t>(sim_clock_mhz * 1e6);
            SimOptions options;
            options.fifo_depth = sim_fifo;
            options.ps_latency_us = sim_ps_us;
            const SimReport report = simulate(data, cfg, clock, options);
            OutputSink sink(sim_out);
            print_report(report, sink.stream(), sim_format == "kv");
        } else if (*flops) {
            const ModelConfig cfg = resolve_config(config_path);
            const EventData data = read_events_file(flops_in);
            const FlopsReport report = analyze_flops(data, cfg);
            if (flops_verify) {
                const ModelWeights w = gen_weights(cfg.variant, 2, flops_seed);
                const ref::FloatResult fr = ref::run_offline_float(data, cfg, w);
                for (int layer = 0; layer < 5; ++layer) {
                    const auto& ops = fr.ops[static_cast<std::size_t>(layer)];
                    const LayerGraphStats& s = report.layers[static_cast<std::size_t>(layer)];
                    const bool ok =
                        s.nodes == ops.nodes && s.edges == ops.edge_messages &&
                        flops_mlp_scaled(s.edges, s.f_in, s.f_out, s.nodes) ==
                            (ops.mults + ops.adds) * s.nodes &&
                        flops_updt_scaled(s.edges, s.f_out, s.nodes) == ops.maxes * s.nodes &&
                        flops_aggr_scaled(s.edges, s.f_out) == ops.maxes * s.edges;
                    if (!ok) {
                        std::cerr << "flops verification FAILED at " << s.layer << "\n";
                        return 1;
                    }
                }
                std::cerr << "flops verification passed\n";
            }
            OutputSink sink(flops_out);
            write_flops_csv(report, sink.stream());
        } else if (*gen) {
            Variant variant;
            if (!gen_variant.empty())
                variant = parse_variant(gen_variant);
            else
                variant = resolve_config(config_path).variant;
            const ModelWeights w = gen_weights(variant, gen_cls, gen_seed);
            save_weights_file(w, gen_out);
            std::cout << "variant " << variant_letter(w.variant) << " classes " << w.classes
                      << " parameters " << w.parameter_count() << '\n';
        } else if (*dump) {
            const ModelConfig cfg = resolve_config(config_path);
            const EventData data = read_events_file(dump_in);
            const StreamPlan plan = plan_stream(data, cfg, std::nullopt);
            std::vector<NormalizedEvent> events;
            std::uint64_t dropped = 0;
            for (const Event& ev : plan.stream) {
                if (auto ne = normalize(ev, plan.sensor))
                    events.push_back(*ne);
                else
                    ++dropped;
            }
            if (dropped > 0)
                std::cerr << dropped << " events out of bounds\n";
            const EventGraph g = build_graph(events, cfg.beta, cfg.radius);
            OutputSink sink(dump_out);
            dump_graph(g, sink.stream());
        }
        return 0;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitInput;
    } catch (const ParseError& e) {
        std::cerr << "input error: " << e.what();
        if (e.byte_offset > 0 || e.record_index >= 0) {
            std::cerr << " (byte " << e.byte_offset;
            if (e.record_index >= 0)
                std::cerr << ", record " << e.record_index;
            std::cerr << ")";
        }
        std::cerr << '\n';
        return kExitInput;
    } catch (const PlanError& e) {
        std::cerr << "planning error: " << e.what() << '\n';
        return kExitPlanning;
    } catch (const ConfigError& e) {
        std::cerr << "model error: " << e.what() << '\n';
        return kExitModel;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    }
}
