#include "pslab/render.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "pslab/errors.hpp"

namespace pslab::render {

namespace {

// Per-row z-buffer pass. Returns, for each target column, the winning source
// column or -1, and clears occ for discarded and displaced sources.
void scatter_row(const DisparityField& disp, int y, int canvas_width,
                 std::vector<int>& winners, diff::Array& occ) {
    winners.assign(canvas_width, -1);
    for (int x = 0; x < disp.width(); ++x) {
        const double d = disp.at(y, x);
        const long t = std::lround(static_cast<double>(x) - d);
        if (t < 0 || t >= canvas_width) {
            occ.at(y, x) = 0.0;
            continue;
        }
        const int incumbent = winners[t];
        if (incumbent < 0) {
            winners[t] = x;
        } else if (d > disp.at(y, incumbent)) {
            occ.at(y, incumbent) = 0.0;
            winners[t] = x;
        } else {
            occ.at(y, x) = 0.0;
        }
    }
}

void check_render_pre(int ref_h, int ref_w, const DisparityField& disp, int canvas_width) {
    if (disp.height() != ref_h || disp.width() != ref_w)
        throw ValidationError("forward_render: disparity " + disp.array().shape_str() +
                              " does not match reference " + std::to_string(ref_h) + "x" +
                              std::to_string(ref_w));
    if (canvas_width < ref_w)
        throw ValidationError("forward_render: canvas width " + std::to_string(canvas_width) +
                              " is narrower than the reference (" + std::to_string(ref_w) + ")");
    if (disp.max_value() >= canvas_width)
        throw ValidationError("forward_render: disparity reaches " +
                              std::to_string(disp.max_value()) + ", canvas holds only " +
                              std::to_string(canvas_width) + " columns");
}

}  // namespace

RenderResult forward_render(const Image& reference, const DisparityField& disp,
                            int canvas_width) {
    const int h = reference.height();
    const int w = reference.width();
    const int c = reference.channels();
    check_render_pre(h, w, disp, canvas_width);

    diff::Array pseudo(h, canvas_width, c);
    diff::Array hole_mask(h, canvas_width, 1);
    diff::Array occ(h, w, 1, 1.0);
    diff::Array zbuf(h, canvas_width, 1);

    std::vector<int> winners;
    for (int y = 0; y < h; ++y) {
        scatter_row(disp, y, canvas_width, winners, occ);
        for (int t = 0; t < canvas_width; ++t) {
            const int x = winners[t];
            if (x < 0) continue;
            hole_mask.at(y, t) = 1.0;
            zbuf.at(y, t) = disp.at(y, x);
            for (int ch = 0; ch < c; ++ch) pseudo.at(y, t, ch) = reference.at(y, x, ch);
        }
    }
    return {Image(std::move(pseudo)), std::move(hole_mask), OcclusionMask(std::move(occ)),
            DisparityField(std::move(zbuf))};
}

Image fill_holes(const RenderResult& result) {
    const diff::Array& src = result.pseudo.array();
    const int h = src.height(), w = src.width(), c = src.channels();

    std::size_t holes = 0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (result.hole_mask.at(y, x) == 0.0) ++holes;
    if (holes == static_cast<std::size_t>(h) * w)
        throw ValidationError("fill_holes: canvas has no rendered pixels");
    if (holes == 0) return result.pseudo;

    diff::Array img = src;
    diff::Array filled = result.hole_mask;
    diff::Array next_img = img;
    diff::Array next_filled = filled;
    while (holes > 0) {
        std::size_t progressed = 0;
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                if (filled.at(y, x) != 0.0) continue;
                const int ny[4] = {y - 1, y + 1, y, y};
                const int nx[4] = {x, x, x - 1, x + 1};
                int count = 0;
                double sum[3] = {0, 0, 0};
                for (int k = 0; k < 4; ++k) {
                    if (ny[k] < 0 || ny[k] >= h || nx[k] < 0 || nx[k] >= w) continue;
                    if (filled.at(ny[k], nx[k]) == 0.0) continue;
                    ++count;
                    for (int ch = 0; ch < c; ++ch) sum[ch] += img.at(ny[k], nx[k], ch);
                }
                if (count == 0) continue;
                for (int ch = 0; ch < c; ++ch) next_img.at(y, x, ch) = sum[ch] / count;
                next_filled.at(y, x) = 1.0;
                ++progressed;
            }
        }
        if (progressed == 0)
            throw ValidationError("fill_holes: pass made no progress");  // unreachable on a grid
        img = next_img;
        filled = next_filled;
        holes -= progressed;
    }
    return Image(std::move(img));
}

PseudoPair generate_pseudo_pair(const Image& reference_wide, const DisparityField& disp_wide,
                                int crop_width) {
    if (crop_width < 1 || crop_width > reference_wide.width())
        throw ValidationError("generate_pseudo_pair: crop width " + std::to_string(crop_width) +
                              " outside [1, " + std::to_string(reference_wide.width()) + "]");
    const int margin = static_cast<int>(std::ceil(disp_wide.max_value()));
    if (reference_wide.width() < crop_width + margin)
        throw ValidationError("generate_pseudo_pair: wide image must carry a margin of at least " +
                              std::to_string(margin) + " columns beyond the crop width, has " +
                              std::to_string(reference_wide.width() - crop_width));

    RenderResult r = forward_render(reference_wide, disp_wide, reference_wide.width());
    Image filled = fill_holes(r);

    const int h = reference_wide.height();
    PseudoPair out;
    out.ref = Image(diff::crop(reference_wide.array(), 0, 0, h, crop_width));
    out.pseudo = Image(diff::crop(filled.array(), 0, 0, h, crop_width));
    out.occ = OcclusionMask(diff::crop(r.occ.array(), 0, 0, h, crop_width));
    return out;
}

OcclusionMask occlusion_mask(const DisparityField& disp, int canvas_width) {
    check_render_pre(disp.height(), disp.width(), disp, canvas_width);
    diff::Array occ(disp.height(), disp.width(), 1, 1.0);
    std::vector<int> winners;
    for (int y = 0; y < disp.height(); ++y) scatter_row(disp, y, canvas_width, winners, occ);
    return OcclusionMask(std::move(occ));
}

}  // namespace pslab::render
