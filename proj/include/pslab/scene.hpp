#pragma once

#include <vector>

#include "pslab/types.hpp"

namespace pslab::data {

// Procedural layered world behind a generated scene: a background sheet with
// (optionally) smoothly varying disparity, plus constant-disparity foreground
// shapes whose bounding boxes are disjoint in both views. Visibility at any
// position is answered by querying every surface, so ground truth never
// depends on the forward renderer.
class SceneWorld {
public:
    explicit SceneWorld(const SceneConfig& config);

    struct Surface {
        int layer;         // -1 is the background
        double src_x;      // left-view x coordinate of the surface point
        double disparity;
    };

    static constexpr int kLeft = 0;
    static constexpr int kRight = 1;

    // Nearest surface seen at continuous column x of the given view.
    Surface winner(int view, double x, int y) const;

    double background_disparity(double x, double y) const;
    double texture(int layer, double x, double y, int channel) const;
    int foreground_count() const { return static_cast<int>(shapes_.size()); }
    const SceneConfig& config() const { return cfg_; }

private:
    struct Shape {
        bool ellipse;
        double cx, cy, hx, hy;
        double disparity;
    };
    bool covers(const Shape& s, double x, double y) const;
    double solve_background_src(double target, int y) const;

    SceneConfig cfg_;
    std::vector<Shape> shapes_;
    double bg_lo_ = 0.0, bg_hi_ = 0.0;
    double bg_cell_ = 32.0;
    double bg_constant_ = -1.0;  // >= 0 when the background is flat
    std::uint64_t tex_seed_ = 0, bg_seed_ = 0;
};

}  // namespace pslab::data
