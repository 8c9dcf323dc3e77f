#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>

#include "evgraph/error.hpp"

namespace evgraph {

enum class Variant { small, base, large };

char variant_letter(Variant v);
Variant parse_variant(const std::string& s); // accepts "S"/"B"/"L" and long names

struct LayerDims {
    int in = 0;  // includes the 3 position inputs
    int out = 0;
};

// Fixed per-variant layer dimensions:
//   conv1 1+3->16, pool 4^3, conv2 16+3->32, conv3, pool 2^3, conv4, conv5,
//   4x4 spatial readout, linear head 16*dim5 -> classes.
struct VariantSpec {
    std::array<LayerDims, 5> conv;

    int head_in() const { return 16 * conv[4].out; }
    // Weights plus biases of the five conv layers and the head.
    std::size_t parameter_count(int classes) const;
};

const VariantSpec& variant_spec(Variant v);

// Full architecture configuration. The supported hardware operating points
// pair beta 128 with a 100 ms window and beta 256 with a 50 ms window.
struct ModelConfig {
    Variant variant = Variant::base;
    std::uint16_t beta = 128;
    std::uint32_t time_window_us = 100000;
    int radius = 3;

    void validate() const;

    const VariantSpec& spec() const { return variant_spec(variant); }
    int size_after_pool1() const { return beta / 4; }
    int size_after_pool2() const { return beta / 8; }
    // Spatial/temporal kernel of the final readout stage; keeps the retained
    // grid at 4x4 for both beta configurations.
    int pool_out_kernel() const { return size_after_pool2() / 4; }
    std::uint32_t prediction_period_us() const { return time_window_us / 4; }
};

// Structured-text config format: "variant B", "beta 128",
// "time_window_us 100000", "radius 3" lines in any order.
ModelConfig load_model_config(std::istream& in);
ModelConfig load_model_config_file(const std::string& path);
void save_model_config(const ModelConfig& cfg, std::ostream& out);

} // namespace evgraph
