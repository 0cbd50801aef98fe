#include "pslab/scene.hpp"

#include <algorithm>
#include <cmath>

#include "pslab/errors.hpp"
#include "pslab/noise.hpp"
#include "pslab/rng.hpp"

namespace pslab::data {

namespace {

// Scatter visibility of one row of a disparity field: a source pixel is
// visible unless its rounded target is off-canvas or another source claims
// the same target with larger disparity (ties keep the smaller source x).
// Quadratic per-pixel search, deliberately independent of the renderer.
void scatter_visibility_row(const diff::Array& disp, int y, diff::Array& occ) {
    const int w = disp.width();
    for (int x = 0; x < w; ++x) {
        const long t = std::lround(static_cast<double>(x) - disp.at(y, x));
        if (t < 0 || t >= w) {
            occ.at(y, x) = 0.0;
            continue;
        }
        bool visible = true;
        for (int o = 0; o < w; ++o) {
            if (o == x) continue;
            if (std::lround(static_cast<double>(o) - disp.at(y, o)) != t) continue;
            if (disp.at(y, o) > disp.at(y, x) ||
                (disp.at(y, o) == disp.at(y, x) && o < x)) {
                visible = false;
                break;
            }
        }
        occ.at(y, x) = visible ? 1.0 : 0.0;
    }
}

}  // namespace

SceneWorld::SceneWorld(const SceneConfig& config) : cfg_(config) {
    cfg_.validate();
    const double dmax = cfg_.max_disparity;
    tex_seed_ = mix64(cfg_.seed ^ 0x7ea1c0de5eedULL);
    bg_seed_ = mix64(cfg_.seed ^ 0xba5eba11ULL);

    bg_lo_ = 0.1 * dmax;
    bg_hi_ = 0.4 * dmax;
    bg_cell_ = std::max(24.0, 4.0 * dmax);

    Rng rng(cfg_.seed, 0, 17);
    if (cfg_.constant_background_disparity) {
        bg_constant_ = *cfg_.constant_background_disparity;
        if (cfg_.integer_disparities) bg_constant_ = std::floor(bg_constant_ + 0.5);
    } else if (cfg_.integer_disparities) {
        const int lo = std::max(1, static_cast<int>(std::ceil(bg_lo_)));
        const int hi = std::max(lo, static_cast<int>(std::floor(bg_hi_)));
        bg_constant_ = rng.range_int(lo, hi);
    }

    // Foreground placement: rejection-sample shapes whose padded bounding
    // boxes are disjoint in left-view coordinates and in their right-view
    // projections, so no foreground point is ever hidden behind another
    // foreground layer in either view.
    const double w = cfg_.width, h = cfg_.height;
    const double pad = 2.5;
    Rng shape_rng(cfg_.seed, 0, 23);
    for (int k = 0; k < cfg_.num_foreground_layers; ++k) {
        bool placed = false;
        for (int attempt = 0; attempt < 60 && !placed; ++attempt) {
            Shape s;
            s.ellipse = shape_rng.bernoulli(0.5);
            s.hx = std::max(3.0, shape_rng.uniform(0.07, 0.16) * w);
            s.hy = std::max(3.0, shape_rng.uniform(0.10, 0.22) * h);
            if (2.0 * s.hx > w - 6.0 || 2.0 * s.hy > h - 6.0) continue;
            s.cx = shape_rng.uniform(s.hx + 1.0, w - s.hx - 2.0);
            s.cy = shape_rng.uniform(s.hy + 1.0, h - s.hy - 2.0);
            if (cfg_.integer_disparities) {
                const int lo = static_cast<int>(std::floor(bg_hi_)) + 1;
                const int hi = std::max(lo, cfg_.max_disparity);
                s.disparity = shape_rng.range_int(lo, hi);
            } else {
                s.disparity = shape_rng.uniform(0.45 * dmax, dmax);
            }
            // Keep the shape inside the right view as well; an occluder
            // clipped from one canvas would make visibility read differently
            // in the two views.
            if (s.cx - s.hx - s.disparity < 1.0) continue;
            bool clash = false;
            for (const Shape& o : shapes_) {
                const bool y_apart = std::fabs(s.cy - o.cy) > s.hy + o.hy + pad;
                const bool x_apart = std::fabs(s.cx - o.cx) > s.hx + o.hx + pad;
                const bool xr_apart =
                    std::fabs((s.cx - s.disparity) - (o.cx - o.disparity)) > s.hx + o.hx + pad;
                if (!(y_apart || (x_apart && xr_apart))) {
                    clash = true;
                    break;
                }
            }
            if (!clash) {
                shapes_.push_back(s);
                placed = true;
            }
        }
    }
}

bool SceneWorld::covers(const Shape& s, double x, double y) const {
    const double dx = x - s.cx, dy = y - s.cy;
    if (s.ellipse) {
        const double nx = dx / s.hx, ny = dy / s.hy;
        return nx * nx + ny * ny <= 1.0;
    }
    return std::fabs(dx) <= s.hx && std::fabs(dy) <= s.hy;
}

double SceneWorld::background_disparity(double x, double y) const {
    if (bg_constant_ >= 0.0) return bg_constant_;
    const double n = 0.75 * value_noise(bg_seed_, x, y, bg_cell_) +
                     0.25 * value_noise(bg_seed_ ^ 0x5ca1ab1eULL, x, y, bg_cell_ * 0.5);
    double d = bg_lo_ + (bg_hi_ - bg_lo_) * n;
    if (cfg_.integer_disparities) d = std::floor(d + 0.5);
    return d;
}

double SceneWorld::texture(int layer, double x, double y, int channel) const {
    const std::uint64_t seed =
        mix64(tex_seed_ ^ (static_cast<std::uint64_t>(layer + 2) * 0x9e3779b97f4a7c15ULL) ^
              (static_cast<std::uint64_t>(channel + 1) * 0xc2b2ae3d27d4eb4fULL));
    const double n = octave_noise(seed, x, y, 14.0, cfg_.texture_octaves);
    return 0.5 + cfg_.texture_contrast * (n - 0.5);
}

// Background left-view coordinate whose right-view projection is `target`.
// x - d(x) is strictly increasing (the noise slope is well below 1), so the
// root is unique and bisection converges.
double SceneWorld::solve_background_src(double target, int y) const {
    if (bg_constant_ >= 0.0) return target + bg_constant_;
    double lo = target;
    double hi = target + cfg_.max_disparity + 1.0;
    for (int it = 0; it < 64; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid - background_disparity(mid, y) < target)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

SceneWorld::Surface SceneWorld::winner(int view, double x, int y) const {
    Surface best;
    if (view == kLeft) {
        best = {-1, x, background_disparity(x, y)};
        for (int k = 0; k < foreground_count(); ++k) {
            const Shape& s = shapes_[k];
            if (!covers(s, x, y)) continue;
            if (s.disparity > best.disparity) best = {k, x, s.disparity};
        }
        return best;
    }
    const double bg_src = solve_background_src(x, y);
    best = {-1, bg_src, background_disparity(bg_src, y)};
    for (int k = 0; k < foreground_count(); ++k) {
        const Shape& s = shapes_[k];
        const double src = x + s.disparity;
        if (!covers(s, src, y)) continue;
        if (s.disparity > best.disparity ||
            (s.disparity == best.disparity && src < best.src_x))
            best = {k, src, s.disparity};
    }
    return best;
}

SceneSample generate_scene(const SceneConfig& config) {
    SceneWorld world(config);
    const int w = config.width, h = config.height, ch = config.channels;

    diff::Array left(h, w, ch), right(h, w, ch);
    diff::Array dl(h, w, 1), dr(h, w, 1);
    diff::Array ol(h, w, 1), orr(h, w, 1);

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const auto wl = world.winner(SceneWorld::kLeft, x, y);
            dl.at(y, x) = wl.disparity;
            for (int c = 0; c < ch; ++c)
                left.at(y, x, c) = world.texture(wl.layer, wl.src_x, y, c);

            const auto wr = world.winner(SceneWorld::kRight, x, y);
            dr.at(y, x) = wr.disparity;
            for (int c = 0; c < ch; ++c)
                right.at(y, x, c) = world.texture(wr.layer, wr.src_x, y, c);
        }
    }

    // A pixel is occluded when its match is not visible in the other view.
    // The left view projects toward the right view directly; the right view's
    // projection runs in horizontally flipped coordinates, which is the
    // orientation in which a (right, left) pair is again a stereo pair.
    for (int y = 0; y < h; ++y) scatter_visibility_row(dl, y, ol);
    diff::Array dr_flip = diff::hflip(dr);
    diff::Array or_flip(h, w, 1);
    for (int y = 0; y < h; ++y) scatter_visibility_row(dr_flip, y, or_flip);
    orr = diff::hflip(or_flip);

    SceneSample s;
    s.left = Image(std::move(left));
    s.right = Image(std::move(right));
    s.disp_left = DisparityField(std::move(dl));
    s.disp_right = DisparityField(std::move(dr));
    s.occ_left = OcclusionMask(std::move(ol));
    s.occ_right = OcclusionMask(std::move(orr));
    return s;
}

}  // namespace pslab::data
