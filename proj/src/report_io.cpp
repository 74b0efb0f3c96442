#include "looaudit/report_io.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "looaudit/errors.hpp"

namespace looaudit {

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) {
        throw NumericError("cannot format value", -1);
    }
    return std::string(buf, ptr);
}

nlohmann::ordered_json report_to_json(const LufReport& report) {
    nlohmann::ordered_json j;
    j["schema"] = "looaudit-report-v1";
    j["mode"] = report.mode;
    j["rule"] = report.rule_description;
    j["rule_seed"] = report.rule_seed;
    j["split_seed"] = report.split_seed;
    j["num_classes"] = report.num_classes;
    j["num_eval_points"] = report.baseline.size();
    j["num_leave_out_models"] = report.flip_fractions.size();
    if (report.trials > 0) {
        j["trials"] = report.trials;
        j["standard_error_bound"] = report.se_bound;
    }
    j["expected_luf"] = report.expected_luf;

    nlohmann::ordered_json points = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < report.baseline.size(); ++i) {
        const PredictionRecord& rec = report.baseline[i];
        const LufEstimate& est = report.estimates[i];
        nlohmann::ordered_json p;
        p["point_id"] = rec.point_id;
        p["probs"] = rec.probs;
        p["label"] = rec.label;
        p["confidence"] = rec.confidence;
        p["luf"] = est.luf_value;
        p["responsible_removed_id"] = est.responsible_removed_id;
        points.push_back(std::move(p));
    }
    j["per_point"] = std::move(points);

    nlohmann::ordered_json curve = nlohmann::ordered_json::array();
    for (const ConfidencePoint& pt : report.confidence_curve) {
        curve.push_back({{"threshold", pt.threshold},
                         {"expected_luf", pt.value},
                         {"count", pt.count}});
    }
    j["confidence_curve"] = std::move(curve);

    nlohmann::ordered_json flips = nlohmann::ordered_json::array();
    for (const FlipFraction& f : report.flip_fractions) {
        flips.push_back({{"removed_id", f.removed_id}, {"fraction", f.fraction}});
    }
    j["flip_fractions"] = std::move(flips);

    j["flip_histogram"] = {{"edges", report.histogram_edges},
                           {"counts", report.histogram_counts}};
    return j;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw ArgumentError("cannot write file: " + path);
    }
    out << content;
    if (!out) {
        throw ArgumentError("short write on file: " + path);
    }
}

void write_report_files(const LufReport& report, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    std::filesystem::path dir(out_dir);

    write_text_file((dir / "report.json").string(), report_to_json(report).dump(2) + "\n");

    std::ostringstream per_point;
    per_point << "point_id,confidence,luf_value,responsible_removed_id\n";
    for (std::size_t i = 0; i < report.baseline.size(); ++i) {
        per_point << report.baseline[i].point_id << ','
                  << format_double(report.baseline[i].confidence) << ','
                  << format_double(report.estimates[i].luf_value) << ','
                  << report.estimates[i].responsible_removed_id << '\n';
    }
    write_text_file((dir / "per_point.csv").string(), per_point.str());

    std::ostringstream flips;
    flips << "removed_id,flip_fraction\n";
    for (const FlipFraction& f : report.flip_fractions) {
        flips << f.removed_id << ',' << format_double(f.fraction) << '\n';
    }
    write_text_file((dir / "flip_histogram.csv").string(), flips.str());

    std::ostringstream curve;
    curve << "threshold,expected_luf,count\n";
    for (const ConfidencePoint& pt : report.confidence_curve) {
        curve << format_double(pt.threshold) << ',' << format_double(pt.value) << ','
              << pt.count << '\n';
    }
    write_text_file((dir / "confidence_curve.csv").string(), curve.str());
}

}  // namespace looaudit
