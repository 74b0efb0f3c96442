#pragma once

#include <cstddef>
#include <vector>

#include "looaudit/errors.hpp"

namespace looaudit {

// Dense row-major matrix of 64-bit floats. All products accumulate
// sequentially in row-major order so repeated runs are bit-identical.
class Matrix {
public:
    Matrix() : rows_(0), cols_(0) {}
    Matrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    double* row_ptr(std::size_t r) { return data_.data() + r * cols_; }
    const double* row_ptr(std::size_t r) const { return data_.data() + r * cols_; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::size_t size() const { return data_.size(); }

    const std::vector<double>& values() const { return data_; }

    bool same_shape(const Matrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    bool all_finite() const;

private:
    std::size_t rows_;
    std::size_t cols_;
    std::vector<double> data_;
};

// out = a * b^T + bias broadcast over rows; b is (m x k), a is (n x k).
Matrix affine_transposed(const Matrix& a, const Matrix& b, const std::vector<double>& bias);

// Plain product a (n x k) * b (k x m).
Matrix multiply(const Matrix& a, const Matrix& b);

}  // namespace looaudit
