#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pslab/types.hpp"

namespace pslab::data {

// Flat directory of `<name>_L.png` / `<name>_R.png` pairs, no ground truth.
std::vector<StereoPair> load_stereo_dir(const std::string& dir);

// On-disk dataset with ground truth:
//   left/ right/        8-bit PNG images
//   disp_left/ disp_right/   PFM disparities
//   occ_left/ occ_right/     0/255 PNG masks
//   manifest.json            dimensions, max disparity, per-sample seeds
struct Dataset {
    int width = 0;
    int height = 0;
    int max_disparity = 0;
    int channels = 1;
    std::vector<std::uint64_t> seeds;
    std::vector<SceneSample> samples;
};

Dataset generate_dataset(const SceneConfig& base, int count, std::uint64_t seed);
void write_dataset(const std::string& dir, const Dataset& ds, bool force);
Dataset load_dataset(const std::string& dir);

}  // namespace pslab::data
