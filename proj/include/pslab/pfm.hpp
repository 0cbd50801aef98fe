#pragma once

#include <string>

#include "pslab/array.hpp"

namespace pslab::data {

// Grayscale PFM ("Pf"). Written little-endian (scale -1.0) with bottom-up
// row order; the reader also accepts big-endian files (positive scale) and
// byte-swaps. PFM stores float32, so writing casts from float64.
diff::Array read_pfm(const std::string& path);
void write_pfm(const std::string& path, const diff::Array& a);

}  // namespace pslab::data
