#include "looaudit/matrix.hpp"

#include <cmath>
#include <string>
#include <utility>

namespace looaudit {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
        throw DimensionError("matrix data length " + std::to_string(data_.size()) +
                             " does not equal rows*cols = " + std::to_string(rows_ * cols_));
    }
}

bool Matrix::all_finite() const {
    for (double v : data_) {
        if (!std::isfinite(v)) {
            return false;
        }
    }
    return true;
}

Matrix affine_transposed(const Matrix& a, const Matrix& b, const std::vector<double>& bias) {
    if (a.cols() != b.cols()) {
        throw DimensionError("affine_transposed: inner dims differ (" +
                             std::to_string(a.cols()) + " vs " + std::to_string(b.cols()) + ")");
    }
    if (bias.size() != b.rows()) {
        throw DimensionError("affine_transposed: bias length mismatch");
    }
    Matrix out(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* ai = a.row_ptr(i);
        for (std::size_t j = 0; j < b.rows(); ++j) {
            const double* bj = b.row_ptr(j);
            double acc = bias[j];
            for (std::size_t k = 0; k < a.cols(); ++k) {
                acc += ai[k] * bj[k];
            }
            out.at(i, j) = acc;
        }
    }
    return out;
}

Matrix multiply(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw DimensionError("multiply: inner dims differ (" + std::to_string(a.cols()) +
                             " vs " + std::to_string(b.rows()) + ")");
    }
    Matrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < b.cols(); ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) {
                acc += a.at(i, k) * b.at(k, j);
            }
            out.at(i, j) = acc;
        }
    }
    return out;
}

}  // namespace looaudit
