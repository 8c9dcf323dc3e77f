#include "evgraph/weights.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

namespace evgraph {

namespace {

const std::array<std::uint32_t, 256>& crc_table() {
    static const std::array<std::uint32_t, 256> table = [] {
        std::array<std::uint32_t, 256> t{};
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t c = i;
            for (int k = 0; k < 8; ++k)
                c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
            t[i] = c;
        }
        return t;
    }();
    return table;
}

std::size_t blob_bytes(const QuantizedLinear& l) {
    return l.weights.size() + l.bias.size() * 4;
}

void append_layer_blob(const QuantizedLinear& l, std::vector<std::uint8_t>& blob) {
    for (std::int8_t w : l.weights)
        blob.push_back(static_cast<std::uint8_t>(w));
    for (std::int32_t b : l.bias) {
        const std::uint32_t u = static_cast<std::uint32_t>(b);
        blob.push_back(static_cast<std::uint8_t>(u & 0xff));
        blob.push_back(static_cast<std::uint8_t>((u >> 8) & 0xff));
        blob.push_back(static_cast<std::uint8_t>((u >> 16) & 0xff));
        blob.push_back(static_cast<std::uint8_t>((u >> 24) & 0xff));
    }
}

void read_layer_blob(QuantizedLinear& l, const std::uint8_t*& p) {
    const std::size_t n = static_cast<std::size_t>(l.in_dim) * l.out_dim;
    l.weights.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        l.weights[i] = static_cast<std::int8_t>(*p++);
    l.bias.resize(static_cast<std::size_t>(l.out_dim));
    for (auto& b : l.bias) {
        std::uint32_t u = static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
                          (static_cast<std::uint32_t>(p[2]) << 16) |
                          (static_cast<std::uint32_t>(p[3]) << 24);
        b = static_cast<std::int32_t>(u);
        p += 4;
    }
}

std::int64_t sdraw(std::mt19937_64& rng, std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

// Picks multiplier/shift approximating the real scale, with the multiplier
// normalized into [2^14, 2^15).
void pick_requant(QuantizedLinear& l, double scale) {
    int shift = 0;
    double m = scale;
    while (m < 16384.0 && shift < 30) {
        m *= 2;
        ++shift;
    }
    while (m >= 32768.0 && shift > 0) {
        m /= 2;
        --shift;
    }
    l.requant_multiplier = static_cast<std::int32_t>(std::lround(m));
    l.requant_shift = shift;
}

} // namespace

std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
    std::uint32_t c = 0xFFFFFFFFu;
    for (std::uint8_t b : bytes)
        c = crc_table()[(c ^ b) & 0xff] ^ (c >> 8);
    return c ^ 0xFFFFFFFFu;
}

std::size_t ModelWeights::parameter_count() const {
    std::size_t total = 0;
    for (const QuantizedLinear& l : layers)
        total += l.weights.size() + l.bias.size();
    return total;
}

void ModelWeights::validate(const ModelConfig& cfg) const {
    if (cfg.variant != variant)
        throw ConfigError("weight file variant does not match the model config");
    if (layers.size() != 6 || names.size() != 6)
        throw ConfigError("weight file must hold conv1..conv5 and the head");
    for (const QuantizedLinear& l : layers)
        if (l.requant_shift < 0 || l.requant_shift > 31 || l.requant_multiplier < 0)
            throw ConfigError("requant parameters out of range");
    const VariantSpec& spec = variant_spec(variant);
    for (int i = 0; i < 5; ++i) {
        const QuantizedLinear& l = layers[static_cast<std::size_t>(i)];
        if (l.in_dim != spec.conv[static_cast<std::size_t>(i)].in ||
            l.out_dim != spec.conv[static_cast<std::size_t>(i)].out)
            throw ConfigError("layer " + names[static_cast<std::size_t>(i)] +
                              " dimensions do not match the variant table");
        if (l.weights.size() != static_cast<std::size_t>(l.in_dim) * l.out_dim ||
            l.bias.size() != static_cast<std::size_t>(l.out_dim))
            throw ConfigError("layer " + names[static_cast<std::size_t>(i)] +
                              " parameter blob has the wrong size");
    }
    const QuantizedLinear& h = head();
    if (h.in_dim != spec.head_in() || h.out_dim != classes || classes < 1)
        throw ConfigError("head dimensions do not match the variant table");
    if (h.weights.size() != static_cast<std::size_t>(h.in_dim) * h.out_dim ||
        h.bias.size() != static_cast<std::size_t>(h.out_dim))
        throw ConfigError("head parameter blob has the wrong size");
}

ModelWeights gen_weights(Variant variant, int classes, std::uint64_t seed) {
    if (classes < 1)
        throw ConfigError("class count must be at least 1");
    std::mt19937_64 rng(seed);
    const VariantSpec& spec = variant_spec(variant);

    ModelWeights w;
    w.variant = variant;
    w.classes = classes;
    static const char* conv_names[5] = {"conv1", "conv2", "conv3", "conv4", "conv5"};

    for (int i = 0; i < 5; ++i) {
        QuantizedLinear l;
        l.in_dim = spec.conv[static_cast<std::size_t>(i)].in;
        l.out_dim = spec.conv[static_cast<std::size_t>(i)].out;
        l.weights.resize(static_cast<std::size_t>(l.in_dim) * l.out_dim);
        for (auto& v : l.weights)
            v = static_cast<std::int8_t>(sdraw(rng, -127, 127));
        l.bias.resize(static_cast<std::size_t>(l.out_dim));
        for (auto& b : l.bias)
            b = static_cast<std::int32_t>(sdraw(rng, -1024, 1023));

        // Typical accumulator magnitude: random-sign products over the
        // feature columns (mid-range activations, +-1 polarity at conv1)
        // and the three position columns.
        const double x_feat = i == 0 ? 1.0 : 128.0;
        double sq = 0;
        for (int o = 0; o < l.out_dim; ++o) {
            const std::int8_t* row = l.weights.data() + static_cast<std::size_t>(o) * l.in_dim;
            double s = 0;
            for (int k = 0; k < l.in_dim - 3; ++k)
                s += double(row[k]) * row[k] * x_feat * x_feat;
            for (int k = l.in_dim - 3; k < l.in_dim; ++k)
                s += double(row[k]) * row[k] * 2.0 * 2.0;
            sq += std::sqrt(s);
        }
        const double acc_typ = std::max(sq / l.out_dim, 1.0);
        pick_requant(l, 96.0 / acc_typ);
        l.zero_point = 16;
        l.activation_min = 16;
        w.names.push_back(conv_names[i]);
        w.layers.push_back(std::move(l));
    }

    QuantizedLinear head;
    head.in_dim = spec.head_in();
    head.out_dim = classes;
    head.weights.resize(static_cast<std::size_t>(head.in_dim) * head.out_dim);
    for (auto& v : head.weights)
        v = static_cast<std::int8_t>(sdraw(rng, -127, 127));
    head.bias.resize(static_cast<std::size_t>(classes));
    for (auto& b : head.bias)
        b = static_cast<std::int32_t>(sdraw(rng, -1024, 1023));
    w.names.push_back("head");
    w.layers.push_back(std::move(head));
    return w;
}

void save_weights(const ModelWeights& w, std::ostream& out) {
    std::vector<std::uint8_t> blob;
    std::size_t total = 0;
    for (const QuantizedLinear& l : w.layers)
        total += blob_bytes(l);
    blob.reserve(total);
    for (const QuantizedLinear& l : w.layers)
        append_layer_blob(l, blob);

    out << "EVGW1\n";
    out << "variant " << variant_letter(w.variant) << '\n';
    out << "classes " << w.classes << '\n';
    out << "layers " << w.layers.size() << '\n';
    for (std::size_t i = 0; i < w.layers.size(); ++i) {
        const QuantizedLinear& l = w.layers[i];
        out << "layer " << w.names[i] << " in " << l.in_dim << " out " << l.out_dim
            << " mult " << l.requant_multiplier << " shift " << l.requant_shift << " zero "
            << unsigned(l.zero_point) << " amin " << unsigned(l.activation_min) << '\n';
    }
    char crcbuf[16];
    std::snprintf(crcbuf, sizeof crcbuf, "%08x", crc32(blob));
    out << "crc32 " << crcbuf << '\n';
    out << "blob " << blob.size() << '\n';
    out.write(reinterpret_cast<const char*>(blob.data()),
              static_cast<std::streamsize>(blob.size()));
    if (!out)
        throw Error("weight file write failure");
}

ModelWeights load_weights(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != "EVGW1")
        throw ConfigError("not a weight file (missing EVGW1 header)");

    ModelWeights w;
    std::uint32_t stored_crc = 0;
    std::size_t blob_size = 0;
    bool have_blob = false;
    std::size_t layer_count = 0;

    while (!have_blob && std::getline(in, line)) {
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key == "variant") {
            std::string v;
            ls >> v;
            w.variant = parse_variant(v);
        } else if (key == "classes") {
            ls >> w.classes;
        } else if (key == "layers") {
            ls >> layer_count;
        } else if (key == "layer") {
            QuantizedLinear l;
            std::string name, kin, kout, kmult, kshift, kzero, kamin;
            unsigned zero = 0, amin = 0;
            ls >> name >> kin >> l.in_dim >> kout >> l.out_dim >> kmult >>
                l.requant_multiplier >> kshift >> l.requant_shift >> kzero >> zero >> kamin >>
                amin;
            if (!ls || kin != "in" || kout != "out" || kmult != "mult" || kshift != "shift" ||
                kzero != "zero" || kamin != "amin")
                throw ConfigError("malformed layer line: " + line);
            l.zero_point = static_cast<std::uint8_t>(zero);
            l.activation_min = static_cast<std::uint8_t>(amin);
            w.names.push_back(name);
            w.layers.push_back(std::move(l));
        } else if (key == "crc32") {
            std::string hex;
            ls >> hex;
            stored_crc = static_cast<std::uint32_t>(std::stoul(hex, nullptr, 16));
        } else if (key == "blob") {
            ls >> blob_size;
            have_blob = true;
        } else {
            throw ConfigError("unknown weight manifest key: " + key);
        }
    }
    if (!have_blob)
        throw ConfigError("weight file has no blob section");
    if (layer_count != w.layers.size())
        throw ConfigError("layer count does not match the manifest");

    std::size_t expected = 0;
    for (const QuantizedLinear& l : w.layers)
        expected += static_cast<std::size_t>(l.in_dim) * l.out_dim +
                    static_cast<std::size_t>(l.out_dim) * 4;
    if (expected != blob_size)
        throw ConfigError("blob size does not match the manifest dimensions");

    std::vector<std::uint8_t> blob(blob_size);
    in.read(reinterpret_cast<char*>(blob.data()), static_cast<std::streamsize>(blob_size));
    if (static_cast<std::size_t>(in.gcount()) != blob_size)
        throw ConfigError("weight blob is truncated");
    if (crc32(blob) != stored_crc)
        throw ConfigError("weight blob checksum mismatch");

    const std::uint8_t* p = blob.data();
    for (QuantizedLinear& l : w.layers)
        read_layer_blob(l, p);
    return w;
}

void save_weights_file(const ModelWeights& w, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error("cannot open " + path + " for writing");
    save_weights(w, out);
}

ModelWeights load_weights_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("cannot open weight file " + path);
    return load_weights(in);
}

} // namespace evgraph
