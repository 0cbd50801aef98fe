#include "pslab/loss.hpp"

#include <cmath>
#include <string>

#include "pslab/errors.hpp"

namespace pslab::loss {

using diff::Array;
using diff::Value;

void LossConfig::validate() const {
    if (alpha < 0.0 || alpha > 1.0)
        throw ValidationError("loss config: alpha must lie in [0, 1]");
    if (branch_probability < 0.0 || branch_probability > 1.0)
        throw ValidationError("loss config: branch probability must lie in [0, 1]");
    if (lambda_start > lambda_end)
        throw ValidationError("loss config: lambda_start above lambda_end");
    if (lambda_ramp_iters < 1) throw ValidationError("loss config: lambda ramp needs >= 1 iter");
    if (ssim_c1 <= 0.0 || ssim_c2 <= 0.0)
        throw ValidationError("loss config: SSIM constants must be positive");
}

const char* branch_name(Branch b) {
    switch (b) {
        case Branch::LEFT: return "LEFT";
        case Branch::RIGHT: return "RIGHT";
        case Branch::REAL: return "REAL";
    }
    return "?";
}

Warped backward_warp(const Value& source, const Value& disp, int sign) {
    if (sign != 1 && sign != -1) throw ValidationError("backward_warp: sign must be +1 or -1");
    if (disp.height() != source.height() || disp.width() != source.width() ||
        disp.channels() != 1)
        throw ValidationError("backward_warp: disparity shape " +
                              disp.value().shape_str() + " does not match source " +
                              source.value().shape_str());
    Array grid(disp.height(), disp.width(), 1);
    for (int y = 0; y < grid.height(); ++y)
        for (int x = 0; x < grid.width(); ++x) grid.at(y, x) = x;
    Value coords = add(Value::constant(std::move(grid)), scale(disp, sign));
    diff::Sampled s = diff::hsample(source, coords);
    return {s.out, s.validity};
}

Value ssim_map(const Value& a, const Value& b, const LossConfig& cfg) {
    if (!a.value().same_shape(b.value()))
        throw ValidationError("ssim_map: shape mismatch " + a.value().shape_str() + " vs " +
                              b.value().shape_str());
    Value mu_a = avg_pool3(a);
    Value mu_b = avg_pool3(b);
    Value var_a = avg_pool3(a * a) - mu_a * mu_a;
    Value var_b = avg_pool3(b * b) - mu_b * mu_b;
    Value cov = avg_pool3(a * b) - mu_a * mu_b;

    Value num = (mu_a * mu_b * 2.0 + cfg.ssim_c1) * (cov * 2.0 + cfg.ssim_c2);
    Value den = (mu_a * mu_a + mu_b * mu_b + cfg.ssim_c1) * (var_a + var_b + cfg.ssim_c2);
    return channel_mean(num / den);
}

Value pe(const Value& a, const Value& b, const LossConfig& cfg) {
    Value ssim_term = scale(offset(neg(ssim_map(a, b, cfg)), 1.0), cfg.alpha / 2.0);
    Value l1_term = scale(channel_mean(vabs(a - b)), 1.0 - cfg.alpha);
    return ssim_term + l1_term;
}

Value photometric_loss(const data::Image& target, const Value& warped,
                       const data::OcclusionMask& occ, const Array& validity,
                       const LossConfig& cfg) {
    if (target.height() != warped.height() || target.width() != warped.width() ||
        target.channels() != warped.channels())
        throw ValidationError("photometric_loss: target/warped shape mismatch");
    if (occ.height() != target.height() || occ.width() != target.width() ||
        validity.height() != target.height() || validity.width() != target.width())
        throw ValidationError("photometric_loss: mask shape mismatch");

    Array mask(target.height(), target.width(), 1);
    std::size_t live = 0;
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x) {
            const double m = occ.at(y, x) * validity.at(y, x);
            mask.at(y, x) = m;
            if (m != 0.0) ++live;
        }
    if (live == 0)
        throw ValidationError("photometric_loss: mask excludes every pixel (degenerate sample)");

    Value err = pe(Value::constant(target.array()), warped, cfg);
    return reduce_mean(err, &mask);
}

Value normalize_disparity(const Value& disp, bool detach_mean) {
    Value m = reduce_mean(disp);
    if (std::abs(m.item()) < 1e-9)
        throw ValidationError("normalize_disparity: mean disparity " + std::to_string(m.item()) +
                              " is too close to zero");
    return disp / (detach_mean ? detach(m) : m);
}

Value smoothness_loss(const Value& disp, const data::Image& guide, const LossConfig& cfg) {
    if (disp.height() != guide.height() || disp.width() != guide.width() || disp.channels() != 1)
        throw ValidationError("smoothness_loss: disparity shape " + disp.value().shape_str() +
                              " does not match guide " + guide.array().shape_str());
    const int h = disp.height(), w = disp.width();

    Value dn = normalize_disparity(disp, cfg.detach_normalization_mean);

    // Edge weights from the (constant) guide image.
    Array wx(h, w, 1), wy(h, w, 1);
    const Array& g = guide.array();
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double gx = 0.0, gy = 0.0;
            for (int c = 0; c < g.channels(); ++c) {
                if (x + 1 < w) gx += std::abs(g.at(y, x + 1, c) - g.at(y, x, c));
                if (y + 1 < h) gy += std::abs(g.at(y + 1, x, c) - g.at(y, x, c));
            }
            wx.at(y, x) = std::exp(-gx / g.channels());
            wy.at(y, x) = std::exp(-gy / g.channels());
        }

    Array mask_x(h, w, 1, 1.0), mask_y(h, w, 1, 1.0);
    for (int y = 0; y < h; ++y) mask_x.at(y, w - 1) = 0.0;
    for (int x = 0; x < w; ++x) mask_y.at(h - 1, x) = 0.0;

    Value term_x = reduce_mean(vabs(diff_x(dn)) * Value::constant(std::move(wx)), &mask_x);
    Value term_y = reduce_mean(vabs(diff_y(dn)) * Value::constant(std::move(wy)), &mask_y);
    return term_x + term_y;
}

double lambda_at(long iter, const LossConfig& cfg) {
    if (iter < 0) throw ValidationError("lambda_at: negative iteration");
    const double t = std::min(static_cast<double>(iter) / cfg.lambda_ramp_iters, 1.0);
    return cfg.lambda_start + (cfg.lambda_end - cfg.lambda_start) * t;
}

Value total_loss(const Value& lp, const Value& ls, double lambda) {
    return lp + scale(ls, lambda);
}

}  // namespace pslab::loss
