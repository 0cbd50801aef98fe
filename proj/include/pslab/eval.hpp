#pragma once

#include <cstddef>

#include "pslab/dataset.hpp"
#include "pslab/matcher.hpp"
#include "pslab/types.hpp"

namespace pslab::eval {

// Pixel sets: ALL = every pixel, NOC = mask 1 (match visible in the other
// view), OCC = mask 0.
enum class Region { ALL, NOC, OCC };

// Mean absolute disparity error over the region.
double epe(const data::DisparityField& pred, const data::DisparityField& gt,
           const data::OcclusionMask& occ, Region region);

// Percentage of region pixels with error > 3 px and > 5% of the gt value.
double d1(const data::DisparityField& pred, const data::DisparityField& gt,
          const data::OcclusionMask& occ, Region region);

// Percentage of region pixels with error > n px.
double bad_n(const data::DisparityField& pred, const data::DisparityField& gt,
             const data::OcclusionMask& occ, Region region, double n);

struct MetricReport {
    double epe_all = 0, epe_noc = 0, epe_occ = 0;
    double d1_all = 0, d1_noc = 0, d1_occ = 0;  // percent
    double bad3_all = 0, bad3_noc = 0;          // percent
    std::size_t n_all = 0, n_noc = 0, n_occ = 0;
};

// All metrics of one prediction. Regions with no pixels report zeros and a
// zero count rather than erroring, so occlusion-free scenes stay usable.
MetricReport evaluate_sample(const data::DisparityField& pred, const data::DisparityField& gt,
                             const data::OcclusionMask& occ);

// Left-view predictions for every sample, pooled over all pixels of the
// dataset (not averaged per scene).
MetricReport evaluate_dataset(matcher::Estimator& est, const data::Dataset& ds);

}  // namespace pslab::eval
