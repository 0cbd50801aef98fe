#include "pslab/matcher.hpp"

#include <cmath>
#include <fstream>
#include <iterator>

#include <json.hpp>

#include "pslab/errors.hpp"

namespace pslab::matcher {

using diff::Array;
using diff::Value;
using nlohmann::json;

namespace {

constexpr std::uint64_t kInitStream = 9;
constexpr double kLogitClamp = 25.0;

Value vtanh(const Value& x) {
    // exp-based composite; the clamp saturates where tanh is flat anyway
    Value e = vexp(scale(clamp(x, -15.0, 15.0), 2.0));
    return (e - 1.0) / (e + 1.0);
}

Value vsigmoid(const Value& x) {
    Value e = vexp(neg(clamp(x, -30.0, 30.0)));
    return Value::scalar(1.0) / (e + 1.0);
}

}  // namespace

Mode mode_from_string(const std::string& s) {
    if (s == "direct") return Mode::DIRECT;
    if (s == "tinynet") return Mode::TINYNET;
    throw ValidationError("estimator mode must be 'direct' or 'tinynet', got '" + s + "'");
}

const char* mode_name(Mode m) {
    return m == Mode::DIRECT ? "direct" : "tinynet";
}

Estimator::Estimator(Mode mode, int d_max, int channels, std::uint64_t seed, TinyNetConfig net)
    : mode_(mode), d_max_(d_max), channels_(channels), seed_(seed), net_(net) {
    if (d_max_ < 1) throw ValidationError("estimator: d_max must be >= 1");
    if (channels_ != 1 && channels_ != 3)
        throw ValidationError("estimator: channels must be 1 or 3");
    if (mode_ == Mode::TINYNET) {
        if (net_.features < 1 || net_.agg_channels < 1)
            throw ValidationError("estimator: tinynet channel counts must be >= 1");
        if (net_.tau <= 0.0) throw ValidationError("estimator: tau must be positive");
        Rng rng(seed_, 0, kInitStream, 0);
        conv1_ = add_conv_layer("conv1", channels_, net_.features, rng);
        conv2_ = add_conv_layer("conv2", net_.features, net_.features, rng);
        agg1_ = add_conv_layer("agg1", d_max_ + 1, net_.agg_channels, rng);
        agg2_ = add_conv_layer("agg2", net_.agg_channels, d_max_ + 1, rng);
    }
}

Estimator::ConvLayer Estimator::add_conv_layer(const std::string& name, int in_ch, int out_ch,
                                               Rng& rng) {
    ConvLayer l;
    l.in_ch = in_ch;
    l.out_ch = out_ch;
    l.first_kernel = params_.size();
    const double bound = 1.0 / std::sqrt(9.0 * in_ch);
    for (int o = 0; o < out_ch; ++o) {
        Array k(3, 3, in_ch);
        for (double& v : k.vec()) v = (rng.uniform() * 2.0 - 1.0) * bound;
        params_.push_back({name + "/k" + std::to_string(o), Value::param(std::move(k))});
    }
    l.first_bias = params_.size();
    for (int o = 0; o < out_ch; ++o)
        params_.push_back({name + "/b" + std::to_string(o), Value::scalar(0.0, true)});
    return l;
}

Value Estimator::conv_layer(const ConvLayer& l, const Value& in, bool tanh_act) {
    std::vector<Value> outs;
    outs.reserve(l.out_ch);
    for (int o = 0; o < l.out_ch; ++o) {
        Value c = conv2d(in, params_[l.first_kernel + o].value, 1, 1);
        outs.push_back(c + params_[l.first_bias + o].value);
    }
    Value v = l.out_ch == 1 ? outs[0] : stack_channels(outs);
    return tanh_act ? vtanh(v) : v;
}

Value Estimator::features(const Value& im) {
    Value g = conv_layer(conv2_, conv_layer(conv1_, im, true), true);
    // Subtract the local mean so the correlation responds to structure
    // instead of the DC level the random init puts into every channel.
    return g - avg_pool3(g);
}

Value Estimator::tinynet_forward(const Array& left, const Array& right) {
    const int h = left.height(), w = left.width();
    Value fl = features(Value::constant(left));
    Value fr = features(Value::constant(right));

    // Correlation volume: channel d holds <f_L(x), f_R(x - d)>, zero where
    // the shifted coordinate leaves the image.
    std::vector<Value> corr;
    corr.reserve(d_max_ + 1);
    for (int d = 0; d <= d_max_; ++d) {
        Array coords(h, w, 1);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) coords.at(y, x) = x - d;
        diff::Sampled s = diff::hsample(fr, Value::constant(std::move(coords)));
        corr.push_back(channel_mean(fl * s.out));
    }
    Value volume = stack_channels(corr);
    // Standardize the volume per pixel so the readout contrast does not
    // depend on the feature scale, then let the aggregation convs refine a
    // residual on top of the raw correlation instead of replacing it.
    Value centered = volume - channel_broadcast(channel_mean(volume), d_max_ + 1);
    Value norm = offset(channel_mean(vabs(centered)), 1e-4);
    Value vn = centered / channel_broadcast(norm, d_max_ + 1);
    Value cost = conv_layer(agg2_, conv_layer(agg1_, vn, true), false) - vn;

    // Soft-argmin readout.
    Value e = vexp(clamp(scale(cost, -1.0 / net_.tau), -kLogitClamp, kLogitClamp));
    Value denom = channel_broadcast(scale(channel_mean(e), d_max_ + 1.0), d_max_ + 1);
    Value p = e / denom;
    Array dvals(h, w, d_max_ + 1);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int d = 0; d <= d_max_; ++d) dvals.at(y, x, d) = d;
    Value disp = scale(channel_mean(p * Value::constant(std::move(dvals))), d_max_ + 1.0);
    return clamp(disp, 0.0, static_cast<double>(d_max_));
}

Value Estimator::direct_forward(int height, int width, const std::string& key) {
    auto it = latents_.find(key);
    if (it == latents_.end()) {
        params_.push_back({"latent/" + key, Value::param(Array(height, width, 1, 0.0))});
        it = latents_.emplace(key, params_.size() - 1).first;
    }
    const Value& latent = params_[it->second].value;
    if (latent.height() != height || latent.width() != width)
        throw ValidationError("estimator: latent '" + key + "' is " +
                              latent.value().shape_str() + ", inputs are " +
                              std::to_string(height) + "x" + std::to_string(width));
    return scale(vsigmoid(latent), static_cast<double>(d_max_));
}

Value Estimator::estimate(const Array& left, const Array& right, const std::string& latent_key) {
    if (left.height() != right.height() || left.width() != right.width() ||
        left.channels() != right.channels())
        throw ValidationError("estimator: left " + left.shape_str() + " vs right " +
                              right.shape_str());
    if (left.channels() != channels_)
        throw ValidationError("estimator: built for " + std::to_string(channels_) +
                              "-channel images, got " + std::to_string(left.channels()));
    if (left.width() <= d_max_)
        throw ValidationError("estimator: image width " + std::to_string(left.width()) +
                              " must exceed d_max " + std::to_string(d_max_));
    return mode_ == Mode::DIRECT ? direct_forward(left.height(), left.width(), latent_key)
                                 : tinynet_forward(left, right);
}

Value Estimator::estimate_right(const Array& left, const Array& right,
                                const std::string& latent_key) {
    return diff::hflip(estimate(diff::hflip(right), diff::hflip(left), latent_key));
}

std::size_t Estimator::param_count() const {
    std::size_t n = 0;
    for (const NamedParam& p : params_) n += p.value.value().size();
    return n;
}

void Estimator::zero_grads() {
    for (NamedParam& p : params_) p.value.node()->grad_allocated = false;
}

std::string Estimator::serialize() const {
    json j;
    j["format"] = 1;
    j["mode"] = mode_name(mode_);
    j["d_max"] = d_max_;
    j["channels"] = channels_;
    j["seed"] = seed_;
    j["net"] = {{"features", net_.features},
                {"agg_channels", net_.agg_channels},
                {"tau", net_.tau}};
    json params = json::array();
    for (const NamedParam& p : params_) {
        const Array& a = p.value.value();
        params.push_back({{"name", p.name},
                          {"h", a.height()},
                          {"w", a.width()},
                          {"c", a.channels()},
                          {"data", a.vec()}});
    }
    j["params"] = std::move(params);
    return j.dump(1);
}

Estimator Estimator::deserialize(const std::string& text, const std::string& context) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw IoError("checkpoint: bad JSON in " + context + ": " + e.what());
    }
    try {
        if (j.at("format").get<int>() != 1)
            throw IoError("checkpoint: unsupported format version in " + context);
        TinyNetConfig net;
        net.features = j.at("net").at("features").get<int>();
        net.agg_channels = j.at("net").at("agg_channels").get<int>();
        net.tau = j.at("net").at("tau").get<double>();
        Estimator est(mode_from_string(j.at("mode").get<std::string>()),
                      j.at("d_max").get<int>(), j.at("channels").get<int>(),
                      j.at("seed").get<std::uint64_t>(), net);
        std::size_t fresh = est.params_.size();
        std::size_t i = 0;
        for (const json& p : j.at("params")) {
            const std::string name = p.at("name").get<std::string>();
            Array a = Array::from_data(p.at("h").get<int>(), p.at("w").get<int>(),
                                       p.at("c").get<int>(),
                                       p.at("data").get<std::vector<double>>());
            if (i < fresh) {
                if (est.params_[i].name != name)
                    throw IoError("checkpoint: parameter order mismatch in " + context +
                                  " at '" + name + "'");
                if (!est.params_[i].value.value().same_shape(a))
                    throw IoError("checkpoint: shape mismatch for '" + name + "' in " + context);
                est.params_[i].value.node()->value = std::move(a);
            } else {
                if (name.rfind("latent/", 0) != 0)
                    throw IoError("checkpoint: unexpected extra parameter '" + name + "' in " +
                                  context);
                est.params_.push_back({name, Value::param(std::move(a))});
                est.latents_.emplace(name.substr(7), est.params_.size() - 1);
            }
            ++i;
        }
        if (i < fresh) throw IoError("checkpoint: missing parameters in " + context);
        return est;
    } catch (const json::exception& e) {
        throw IoError("checkpoint: missing fields in " + context + ": " + e.what());
    }
}

void Estimator::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("checkpoint: cannot open " + path + " for writing");
    out << serialize() << "\n";
    if (!out) throw IoError("checkpoint: write failed for " + path);
}

Estimator Estimator::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("checkpoint: cannot open " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize(text, path);
}

}  // namespace pslab::matcher
