#pragma once

#include <cmath>
#include <cstdint>

#include "pslab/rng.hpp"

namespace pslab::data {

// Smoothstep-interpolated lattice value noise in [0, 1], evaluable at any
// real coordinate (the lattice values come from a stateless hash).
inline double value_noise(std::uint64_t seed, double x, double y, double cell) {
    const double u = x / cell;
    const double v = y / cell;
    const auto i = static_cast<std::int64_t>(std::floor(u));
    const auto j = static_cast<std::int64_t>(std::floor(v));
    double fx = u - static_cast<double>(i);
    double fy = v - static_cast<double>(j);
    fx = fx * fx * (3.0 - 2.0 * fx);
    fy = fy * fy * (3.0 - 2.0 * fy);
    const double v00 = hash01(seed, i, j);
    const double v10 = hash01(seed, i + 1, j);
    const double v01 = hash01(seed, i, j + 1);
    const double v11 = hash01(seed, i + 1, j + 1);
    const double a = v00 + (v10 - v00) * fx;
    const double b = v01 + (v11 - v01) * fx;
    return a + (b - a) * fy;
}

// Sum of halving octaves, normalized back into [0, 1].
inline double octave_noise(std::uint64_t seed, double x, double y, double base_cell,
                           int octaves) {
    double sum = 0.0, norm = 0.0, amp = 1.0, cell = base_cell;
    for (int o = 0; o < octaves; ++o) {
        sum += amp * value_noise(seed + 0x51ed2701u * static_cast<std::uint64_t>(o + 1), x, y,
                                 cell);
        norm += amp;
        amp *= 0.5;
        cell = cell > 2.0 ? cell * 0.5 : cell;
    }
    return sum / norm;
}

}  // namespace pslab::data
