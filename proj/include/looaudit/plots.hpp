#pragma once

#include <string>

#include "looaudit/metrics.hpp"

namespace looaudit {

// Line plot of expected LUF against the confidence threshold grid.
std::string confidence_curve_svg(const LufReport& report);

// Bar plot of the flip-fraction histogram (share of predictions flipped per
// left-out point).
std::string flip_histogram_svg(const LufReport& report);

// Writes confidence_curve.svg and flip_histogram.svg; no-op with a warning
// on an empty report.
void emit_plots(const LufReport& report, const std::string& out_dir);

}  // namespace looaudit
