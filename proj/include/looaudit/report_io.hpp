#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "looaudit/metrics.hpp"

namespace looaudit {

// Shortest round-trip decimal form of a double; the single formatter used by
// every text artifact so outputs are byte-stable.
std::string format_double(double v);

nlohmann::ordered_json report_to_json(const LufReport& report);

// Writes report.json, per_point.csv, flip_histogram.csv and
// confidence_curve.csv under out_dir.
void write_report_files(const LufReport& report, const std::string& out_dir);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace looaudit
