#pragma once

#include <cstdint>
#include <optional>

#include "pslab/array.hpp"

namespace pslab::data {

// H x W x C image, C in {1, 3}, values in [0, 1].
class Image {
public:
    Image() = default;
    explicit Image(diff::Array a);

    const diff::Array& array() const { return a_; }
    int height() const { return a_.height(); }
    int width() const { return a_.width(); }
    int channels() const { return a_.channels(); }
    double at(int y, int x, int c = 0) const { return a_.at(y, x, c); }

private:
    diff::Array a_;
};

// H x W disparity map, non-negative, strictly below the image width.
class DisparityField {
public:
    DisparityField() = default;
    explicit DisparityField(diff::Array a);

    const diff::Array& array() const { return a_; }
    int height() const { return a_.height(); }
    int width() const { return a_.width(); }
    double at(int y, int x) const { return a_.at(y, x); }
    double max_value() const { return a_.max_value(); }

private:
    diff::Array a_;
};

// H x W mask of {0, 1}; 1 means the pixel's match is visible in the other view.
class OcclusionMask {
public:
    OcclusionMask() = default;
    explicit OcclusionMask(diff::Array a);

    const diff::Array& array() const { return a_; }
    int height() const { return a_.height(); }
    int width() const { return a_.width(); }
    double at(int y, int x) const { return a_.at(y, x); }
    std::size_t count_visible() const;

private:
    diff::Array a_;
};

struct StereoPair {
    Image left;
    Image right;
};

struct SceneSample {
    Image left;
    Image right;
    DisparityField disp_left;
    DisparityField disp_right;
    OcclusionMask occ_left;
    OcclusionMask occ_right;
};

struct SceneConfig {
    int width = 96;
    int height = 64;
    int max_disparity = 16;
    int num_foreground_layers = 3;
    int texture_octaves = 3;
    double texture_contrast = 0.8;
    std::uint64_t seed = 0;
    int channels = 1;
    // Quantize all disparities to integers (background becomes a constant).
    bool integer_disparities = false;
    // Force a flat background at this disparity (test scenes).
    std::optional<double> constant_background_disparity;

    void validate() const;  // throws ValidationError
};

SceneSample generate_scene(const SceneConfig& config);

Image hflip(const Image& im);
DisparityField hflip(const DisparityField& d);
OcclusionMask hflip(const OcclusionMask& m);

}  // namespace pslab::data
