#pragma once

#include "pslab/types.hpp"
#include "pslab/value.hpp"

namespace pslab::loss {

struct LossConfig {
    double alpha = 0.85;
    double branch_probability = 0.5;
    double lambda_start = 0.001;
    double lambda_end = 0.5;
    int lambda_ramp_iters = 10000;
    double ssim_c1 = 1e-4;
    double ssim_c2 = 9e-4;
    // Compare the reference against a warp of the pseudo input instead of the
    // real counterpart image (ablation of the feedback source).
    bool feedback_pseudo = false;
    // Treat mean(D) in the smoothness normalization as a constant.
    bool detach_normalization_mean = false;

    void validate() const;
};

enum class Branch { LEFT, RIGHT, REAL };

const char* branch_name(Branch b);

struct LossBreakdown {
    double lp = 0.0;
    double ls = 0.0;
    double lambda = 0.0;
    double total = 0.0;
    Branch branch_taken = Branch::REAL;
};

struct Warped {
    diff::Value image;
    diff::Array validity;  // H x W, 1 where the horizontal sample stayed in range
};

// Sample `source` at x + sign*disp per pixel. sign is +1 when the source view
// lies physically left of the target view, -1 when right.
Warped backward_warp(const diff::Value& source, const diff::Value& disp, int sign);

// Per-pixel SSIM with 3x3 box-filter statistics, averaged over channels.
diff::Value ssim_map(const diff::Value& a, const diff::Value& b, const LossConfig& cfg);

// (alpha/2) * (1 - SSIM) + (1 - alpha) * mean_c |a - b|.
diff::Value pe(const diff::Value& a, const diff::Value& b, const LossConfig& cfg);

// Mean of pe(target, warped) over pixels with occ = 1 and validity = 1.
diff::Value photometric_loss(const data::Image& target, const diff::Value& warped,
                             const data::OcclusionMask& occ, const diff::Array& validity,
                             const LossConfig& cfg);

// Edge-aware smoothness of mean-normalized disparity: forward differences,
// the x term skips the last column and the y term the last row.
diff::Value smoothness_loss(const diff::Value& disp, const data::Image& guide,
                            const LossConfig& cfg);

// Mean-normalized disparity node D / mean(D); rejects near-zero means.
diff::Value normalize_disparity(const diff::Value& disp, bool detach_mean);

double lambda_at(long iter, const LossConfig& cfg);

diff::Value total_loss(const diff::Value& lp, const diff::Value& ls, double lambda);

}  // namespace pslab::loss
