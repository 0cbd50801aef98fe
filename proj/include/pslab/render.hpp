#pragma once

#include "pslab/types.hpp"

namespace pslab::render {

using data::DisparityField;
using data::Image;
using data::OcclusionMask;

// Output of one forward scatter. `pseudo` lives on the target canvas and is
// zero at holes; `hole_mask` is 1 where a source pixel landed; `occ` is
// aligned with the reference and is 0 where the source pixel left the canvas
// or lost the z-buffer; `zbuffer` records the winning disparity per target
// (0 at holes).
struct RenderResult {
    Image pseudo;
    diff::Array hole_mask;
    OcclusionMask occ;
    DisparityField zbuffer;
};

// Scatter each reference pixel (x, y) to (round(x - disp(x, y)), y) on a
// canvas of the given width. Collisions keep the strictly larger disparity;
// on an exact tie the incumbent (smaller source x) stays.
RenderResult forward_render(const Image& reference, const DisparityField& disp,
                            int canvas_width);

// Repeated synchronous passes: every hole with at least one non-hole
// 4-neighbor becomes the mean of those neighbors. Converges on any canvas
// with at least one rendered pixel.
Image fill_holes(const RenderResult& result);

struct PseudoPair {
    Image ref;
    Image pseudo;
    OcclusionMask occ;
};

// Render on the full wide support, fill holes, then crop columns
// [0, crop_width) of the reference, the filled pseudo-image and the
// occlusion mask. The wide image must carry at least ceil(max disparity)
// columns of margin so the crop has no right-edge hole band.
PseudoPair generate_pseudo_pair(const Image& reference_wide, const DisparityField& disp_wide,
                                int crop_width);

// The occ field of forward_render without materializing the image.
OcclusionMask occlusion_mask(const DisparityField& disp, int canvas_width);

}  // namespace pslab::render
