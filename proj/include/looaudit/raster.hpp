#pragma once

#include <string>

#include "looaudit/matrix.hpp"

namespace looaudit {

// P6 pixmap bytes for a value grid. Probability mode maps [0, 1] through a
// blue-white-red diverging ramp centered at 0.5; difference mode maps
// [-1, 1] through the same ramp centered at 0. Row 0 renders at the top.
std::string raster_ppm_probability(const Matrix& values);
std::string raster_ppm_difference(const Matrix& values);

void write_binary_file(const std::string& path, const std::string& bytes);

}  // namespace looaudit
