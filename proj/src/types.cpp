#include "pslab/types.hpp"

#include "pslab/errors.hpp"

namespace pslab::data {

Image::Image(diff::Array a) : a_(std::move(a)) {
    if (a_.channels() != 1 && a_.channels() != 3)
        throw ValidationError("Image: channels must be 1 or 3, got " +
                              std::to_string(a_.channels()));
    if (a_.width() < 2 || a_.height() < 1)
        throw ValidationError("Image: needs width >= 2 and height >= 1, got " + a_.shape_str());
    for (double v : a_.vec())
        if (v < 0.0 || v > 1.0)
            throw ValidationError("Image: value " + std::to_string(v) + " outside [0, 1]");
}

DisparityField::DisparityField(diff::Array a) : a_(std::move(a)) {
    if (a_.channels() != 1)
        throw ValidationError("DisparityField: must be single-channel, got " + a_.shape_str());
    for (double v : a_.vec()) {
        if (v < 0.0) throw ValidationError("DisparityField: negative disparity");
        if (v >= a_.width())
            throw ValidationError("DisparityField: disparity " + std::to_string(v) +
                                  " >= width " + std::to_string(a_.width()));
    }
}

OcclusionMask::OcclusionMask(diff::Array a) : a_(std::move(a)) {
    if (a_.channels() != 1)
        throw ValidationError("OcclusionMask: must be single-channel, got " + a_.shape_str());
    for (double v : a_.vec())
        if (v != 0.0 && v != 1.0)
            throw ValidationError("OcclusionMask: values must be exactly 0 or 1");
}

std::size_t OcclusionMask::count_visible() const {
    std::size_t n = 0;
    for (double v : a_.vec())
        if (v == 1.0) ++n;
    return n;
}

void SceneConfig::validate() const {
    if (width < 8 || height < 8)
        throw ValidationError("SceneConfig: width and height must be >= 8");
    if (max_disparity < 1) throw ValidationError("SceneConfig: max_disparity must be >= 1");
    if (max_disparity > width / 4)
        throw ValidationError("SceneConfig: max_disparity " + std::to_string(max_disparity) +
                              " exceeds width/4 = " + std::to_string(width / 4));
    if (num_foreground_layers < 0)
        throw ValidationError("SceneConfig: num_foreground_layers must be >= 0");
    if (texture_octaves < 1 || texture_octaves > 8)
        throw ValidationError("SceneConfig: texture_octaves must be in [1, 8]");
    if (texture_contrast <= 0.0 || texture_contrast > 1.0)
        throw ValidationError("SceneConfig: texture_contrast must be in (0, 1]");
    if (channels != 1 && channels != 3)
        throw ValidationError("SceneConfig: channels must be 1 or 3");
    if (constant_background_disparity) {
        const double v = *constant_background_disparity;
        if (v < 0.0 || v > max_disparity)
            throw ValidationError(
                "SceneConfig: constant_background_disparity outside [0, max_disparity]");
    }
}

Image hflip(const Image& im) {
    return Image(diff::hflip(im.array()));
}
DisparityField hflip(const DisparityField& d) {
    return DisparityField(diff::hflip(d.array()));
}
OcclusionMask hflip(const OcclusionMask& m) {
    return OcclusionMask(diff::hflip(m.array()));
}

}  // namespace pslab::data
