#include "evgraph/config.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace evgraph {

char variant_letter(Variant v) {
    switch (v) {
    case Variant::small: return 'S';
    case Variant::base: return 'B';
    case Variant::large: return 'L';
    }
    return '?';
}

Variant parse_variant(const std::string& s) {
    if (s == "S" || s == "s" || s == "small") return Variant::small;
    if (s == "B" || s == "b" || s == "base") return Variant::base;
    if (s == "L" || s == "l" || s == "large") return Variant::large;
    throw ConfigError("unknown model variant: " + s);
}

std::size_t VariantSpec::parameter_count(int classes) const {
    std::size_t total = 0;
    for (const LayerDims& d : conv)
        total += static_cast<std::size_t>(d.in) * d.out + d.out;
    total += static_cast<std::size_t>(head_in()) * classes + classes;
    return total;
}

const VariantSpec& variant_spec(Variant v) {
    static const VariantSpec small{{{{1 + 3, 16},
                                     {16 + 3, 32},
                                     {32 + 3, 32},
                                     {32 + 3, 32},
                                     {32 + 3, 32}}}};
    static const VariantSpec base{{{{1 + 3, 16},
                                    {16 + 3, 32},
                                    {32 + 3, 32},
                                    {32 + 3, 64},
                                    {64 + 3, 64}}}};
    static const VariantSpec large{{{{1 + 3, 16},
                                     {16 + 3, 32},
                                     {32 + 3, 64},
                                     {64 + 3, 64},
                                     {64 + 3, 128}}}};
    switch (v) {
    case Variant::small: return small;
    case Variant::base: return base;
    case Variant::large: return large;
    }
    return base;
}

void ModelConfig::validate() const {
    const bool ok_pair = (beta == 128 && time_window_us == 100000) ||
                         (beta == 256 && time_window_us == 50000);
    if (!ok_pair)
        throw ConfigError("unsupported operating point: beta " + std::to_string(beta) +
                          " with time window " + std::to_string(time_window_us) + " us");
    if (radius < 1)
        throw ConfigError("radius must be at least 1");
}

ModelConfig load_model_config(std::istream& in) {
    ModelConfig cfg;
    bool saw_variant = false;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#')
            continue;
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key == "variant") {
            std::string v;
            ls >> v;
            cfg.variant = parse_variant(v);
            saw_variant = true;
        } else if (key == "beta") {
            int v = 0;
            ls >> v;
            cfg.beta = static_cast<std::uint16_t>(v);
        } else if (key == "time_window_us") {
            ls >> cfg.time_window_us;
        } else if (key == "radius") {
            ls >> cfg.radius;
        } else {
            throw ConfigError("unknown config key: " + key);
        }
        if (!ls && !ls.eof())
            throw ConfigError("malformed config line: " + line);
    }
    if (!saw_variant)
        throw ConfigError("config is missing the variant");
    cfg.validate();
    return cfg;
}

ModelConfig load_model_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file " + path);
    return load_model_config(in);
}

void save_model_config(const ModelConfig& cfg, std::ostream& out) {
    out << "variant " << variant_letter(cfg.variant) << '\n'
        << "beta " << cfg.beta << '\n'
        << "time_window_us " << cfg.time_window_us << '\n'
        << "radius " << cfg.radius << '\n';
}

} // namespace evgraph
