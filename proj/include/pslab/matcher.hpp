#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pslab/rng.hpp"
#include "pslab/value.hpp"

namespace pslab::matcher {

enum class Mode { DIRECT, TINYNET };

Mode mode_from_string(const std::string& s);
const char* mode_name(Mode m);

struct TinyNetConfig {
    int features = 4;      // channels of the two shared feature convs
    int agg_channels = 8;  // hidden channels of the aggregation convs
    double tau = 1.0;      // soft-argmin temperature
};

struct NamedParam {
    std::string name;
    diff::Value value;
};

// Disparity estimators behind one interface.
//
// TINYNET: two shared 3x3 conv feature layers per view, a correlation cost
// volume over D_max+1 integer shifts, two 3x3 aggregation convs, and a
// soft-argmin readout. DIRECT: a per-sample latent field mapped through
// D_max * sigmoid(latent), ignoring the images; it exists to exercise the
// rendering and loss stack without learning dynamics.
class Estimator {
public:
    Estimator(Mode mode, int d_max, int channels, std::uint64_t seed, TinyNetConfig net = {});

    Estimator(const Estimator&) = delete;
    Estimator& operator=(const Estimator&) = delete;
    Estimator(Estimator&&) = default;
    Estimator& operator=(Estimator&&) = default;

    // Disparity aligned with `left`, values in [0, d_max]. `latent_key`
    // selects the DIRECT-mode field (created on first use) and is ignored
    // by TINYNET.
    diff::Value estimate(const diff::Array& left, const diff::Array& right,
                         const std::string& latent_key = "sample");

    // Flip both views, swap their roles, estimate, flip the output back:
    // a disparity aligned with `right`.
    diff::Value estimate_right(const diff::Array& left, const diff::Array& right,
                               const std::string& latent_key = "sample");

    Mode mode() const { return mode_; }
    int d_max() const { return d_max_; }
    int channels() const { return channels_; }
    std::uint64_t seed() const { return seed_; }
    const TinyNetConfig& net() const { return net_; }

    std::vector<NamedParam>& params() { return params_; }
    const std::vector<NamedParam>& params() const { return params_; }
    std::size_t param_count() const;  // total scalar count
    void zero_grads();

    // JSON checkpoint; round-trips bitwise (values and serialized bytes).
    std::string serialize() const;
    static Estimator deserialize(const std::string& text, const std::string& context);
    void save(const std::string& path) const;
    static Estimator load(const std::string& path);

private:
    struct ConvLayer {
        std::size_t first_kernel = 0;  // params_ index of kernel 0
        std::size_t first_bias = 0;
        int in_ch = 0, out_ch = 0;
    };

    ConvLayer add_conv_layer(const std::string& name, int in_ch, int out_ch, Rng& rng);
    diff::Value conv_layer(const ConvLayer& l, const diff::Value& in, bool tanh_act);
    diff::Value features(const diff::Value& im);
    diff::Value tinynet_forward(const diff::Array& left, const diff::Array& right);
    diff::Value direct_forward(int height, int width, const std::string& key);

    Mode mode_;
    int d_max_;
    int channels_;
    std::uint64_t seed_;
    TinyNetConfig net_;
    std::vector<NamedParam> params_;
    std::map<std::string, std::size_t> latents_;  // DIRECT key -> params_ index
    ConvLayer conv1_, conv2_, agg1_, agg2_;
};

}  // namespace pslab::matcher
