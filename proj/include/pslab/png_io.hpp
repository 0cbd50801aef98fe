#pragma once

#include <string>

#include "pslab/array.hpp"

namespace pslab::data {

// 8-bit grayscale or RGB PNG. Values map [0,1] <-> [0,255]; writing rounds
// half up (0.5 becomes 128), so a round trip never moves a value by more
// than 1/255. Bit depths other than 8 are rejected.
diff::Array read_png(const std::string& path);
void write_png(const std::string& path, const diff::Array& a);

}  // namespace pslab::data
