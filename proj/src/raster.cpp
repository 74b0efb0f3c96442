#include "looaudit/raster.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "looaudit/errors.hpp"

namespace looaudit {
namespace {

// t in [-1, 1]: -1 blue, 0 white, +1 red.
void diverging(double t, unsigned char* rgb) {
    t = std::min(std::max(t, -1.0), 1.0);
    double r, g, b;
    if (t >= 0.0) {
        r = 1.0;
        g = 1.0 - t;
        b = 1.0 - t;
    } else {
        r = 1.0 + t;
        g = 1.0 + t;
        b = 1.0;
    }
    rgb[0] = static_cast<unsigned char>(std::lround(r * 255.0));
    rgb[1] = static_cast<unsigned char>(std::lround(g * 255.0));
    rgb[2] = static_cast<unsigned char>(std::lround(b * 255.0));
}

std::string render(const Matrix& values, double center, double half_span) {
    std::string out = "P6\n" + std::to_string(values.cols()) + " " +
                      std::to_string(values.rows()) + "\n255\n";
    out.reserve(out.size() + values.rows() * values.cols() * 3);
    unsigned char rgb[3];
    for (std::size_t i = 0; i < values.rows(); ++i) {
        for (std::size_t j = 0; j < values.cols(); ++j) {
            diverging((values.at(i, j) - center) / half_span, rgb);
            out.append(reinterpret_cast<const char*>(rgb), 3);
        }
    }
    return out;
}

}  // namespace

std::string raster_ppm_probability(const Matrix& values) {
    return render(values, 0.5, 0.5);
}

std::string raster_ppm_difference(const Matrix& values) {
    return render(values, 0.0, 1.0);
}

void write_binary_file(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw ArgumentError("cannot write file: " + path);
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw ArgumentError("short write on file: " + path);
    }
}

}  // namespace looaudit
