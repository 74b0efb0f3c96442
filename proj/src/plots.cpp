#include "looaudit/plots.hpp"

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "looaudit/report_io.hpp"

namespace looaudit {
namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 480.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 610.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 420.0;

std::string num(double v) {
    return format_double(v);
}

void svg_header(std::ostringstream& out) {
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(kWidth)
        << "\" height=\"" << num(kHeight) << "\" viewBox=\"0 0 " << num(kWidth) << ' '
        << num(kHeight) << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

void axes(std::ostringstream& out, const std::string& x_label, const std::string& y_label) {
    out << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(kBottom) << "\" x2=\""
        << num(kRight) << "\" y2=\"" << num(kBottom)
        << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
    out << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(kTop) << "\" x2=\""
        << num(kLeft) << "\" y2=\"" << num(kBottom)
        << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
    out << "<text x=\"" << num((kLeft + kRight) / 2.0) << "\" y=\"" << num(kHeight - 14.0)
        << "\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\">"
        << x_label << "</text>\n";
    out << "<text x=\"18\" y=\"" << num((kTop + kBottom) / 2.0)
        << "\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\" "
        << "transform=\"rotate(-90 18 " << num((kTop + kBottom) / 2.0) << ")\">" << y_label
        << "</text>\n";
}

void tick_x(std::ostringstream& out, double px, const std::string& label) {
    out << "<line x1=\"" << num(px) << "\" y1=\"" << num(kBottom) << "\" x2=\"" << num(px)
        << "\" y2=\"" << num(kBottom + 5.0) << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
    out << "<text x=\"" << num(px) << "\" y=\"" << num(kBottom + 20.0)
        << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">" << label
        << "</text>\n";
}

void tick_y(std::ostringstream& out, double py, const std::string& label) {
    out << "<line x1=\"" << num(kLeft - 5.0) << "\" y1=\"" << num(py) << "\" x2=\""
        << num(kLeft) << "\" y2=\"" << num(py) << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
    out << "<text x=\"" << num(kLeft - 9.0) << "\" y=\"" << num(py + 4.0)
        << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"end\">" << label
        << "</text>\n";
}

std::string percent_label(double fraction) {
    std::ostringstream out;
    out.precision(6);
    out << fraction * 100.0;
    return out.str();
}

}  // namespace

std::string confidence_curve_svg(const LufReport& report) {
    std::ostringstream out;
    svg_header(out);
    axes(out, "prediction confidence", "% of points experiencing LUF");

    double x_max = (report.num_classes == 2) ? 0.5 : 1.0;
    auto px = [&](double c) { return kLeft + (kRight - kLeft) * (c / x_max); };
    auto py = [&](double v) { return kBottom - (kBottom - kTop) * v; };

    for (int t = 0; t <= 5; ++t) {
        double c = x_max * static_cast<double>(t) / 5.0;
        tick_x(out, px(c), num(c));
    }
    for (int t = 0; t <= 5; ++t) {
        double v = static_cast<double>(t) / 5.0;
        tick_y(out, py(v), percent_label(v));
    }

    std::ostringstream pts;
    for (std::size_t i = 0; i < report.confidence_curve.size(); ++i) {
        const ConfidencePoint& pt = report.confidence_curve[i];
        pts << (i ? " " : "") << num(px(pt.threshold)) << ',' << num(py(pt.value));
    }
    out << "<polyline points=\"" << pts.str()
        << "\" fill=\"none\" stroke=\"#1f4e8c\" stroke-width=\"2\"/>\n";
    for (const ConfidencePoint& pt : report.confidence_curve) {
        out << "<circle cx=\"" << num(px(pt.threshold)) << "\" cy=\"" << num(py(pt.value))
            << "\" r=\"3\" fill=\"#1f4e8c\"/>\n";
    }
    out << "</svg>\n";
    return out.str();
}

std::string flip_histogram_svg(const LufReport& report) {
    std::ostringstream out;
    svg_header(out);
    axes(out, "% of predictions flipped", "number of left-out points");

    std::size_t bins = report.histogram_counts.size();
    std::size_t max_count = 1;
    for (std::size_t c : report.histogram_counts) {
        max_count = std::max(max_count, c);
    }
    double lo = report.histogram_edges.front();
    double hi = report.histogram_edges.back();
    double span = (hi > lo) ? hi - lo : 1.0;
    auto px = [&](double f) { return kLeft + (kRight - kLeft) * ((f - lo) / span); };
    auto py = [&](double count) {
        return kBottom - (kBottom - kTop) * (count / static_cast<double>(max_count));
    };

    for (std::size_t b = 0; b < report.histogram_edges.size(); b += 2) {
        tick_x(out, px(report.histogram_edges[b]), percent_label(report.histogram_edges[b]));
    }
    for (int t = 0; t <= 4; ++t) {
        double v = static_cast<double>(max_count) * static_cast<double>(t) / 4.0;
        tick_y(out, py(v), num(v));
    }

    for (std::size_t b = 0; b < bins; ++b) {
        double x0 = px(report.histogram_edges[b]);
        double x1 = px(report.histogram_edges[b + 1]);
        double top = py(static_cast<double>(report.histogram_counts[b]));
        out << "<rect x=\"" << num(x0 + 1.0) << "\" y=\"" << num(top) << "\" width=\""
            << num(std::max(x1 - x0 - 2.0, 0.5)) << "\" height=\"" << num(kBottom - top)
            << "\" fill=\"#c23b22\" stroke=\"black\" stroke-width=\"0.5\"/>\n";
    }
    out << "</svg>\n";
    return out.str();
}

void emit_plots(const LufReport& report, const std::string& out_dir) {
    if (report.baseline.empty()) {
        std::cerr << "warning: empty report, no plots emitted\n";
        return;
    }
    std::filesystem::create_directories(out_dir);
    std::filesystem::path dir(out_dir);
    write_text_file((dir / "confidence_curve.svg").string(), confidence_curve_svg(report));
    write_text_file((dir / "flip_histogram.svg").string(), flip_histogram_svg(report));
}

}  // namespace looaudit
