#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "evgraph/config.hpp"
#include "evgraph/layers.hpp"

namespace evgraph {

// A complete parameter set: the five convolution layers plus the linear
// head. The head reuses QuantizedLinear but its scores are consumed raw,
// so its requant fields stay at identity.
struct ModelWeights {
    Variant variant = Variant::base;
    int classes = 2;
    std::vector<std::string> names;        // conv1..conv5, head
    std::vector<QuantizedLinear> layers;

    const QuantizedLinear& conv(int i) const { return layers[static_cast<std::size_t>(i)]; }
    const QuantizedLinear& head() const { return layers.back(); }

    std::size_t parameter_count() const;
    // Throws ConfigError when the layer dimensions do not match the variant
    // table or the config.
    void validate(const ModelConfig& cfg) const;
};

// IEEE CRC-32 (reflected, polynomial 0xEDB88320), used to checksum the
// weight blob.
std::uint32_t crc32(std::span<const std::uint8_t> bytes);

// Random but well-scaled test weights: int8 weights, small biases, and
// per-layer requant parameters calibrated so activations spread over the
// 8-bit range without saturating. Deterministic for a fixed seed.
ModelWeights gen_weights(Variant variant, int classes, std::uint64_t seed);

// Weight file: a text manifest (dims and requant parameters per layer,
// blob checksum) followed by a raw binary blob holding, per layer, the
// row-major int8 weights then the little-endian int32 biases.
void save_weights(const ModelWeights& w, std::ostream& out);
ModelWeights load_weights(std::istream& in);
void save_weights_file(const ModelWeights& w, const std::string& path);
ModelWeights load_weights_file(const std::string& path);

} // namespace evgraph
