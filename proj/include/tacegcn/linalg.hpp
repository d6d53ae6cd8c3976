#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "tacegcn/common.hpp"

namespace tacegcn {

// Dense row-major matrix. Cohorts top out around a thousand nodes, so dense
// storage with fixed-order accumulation keeps every result bit-deterministic.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(int r, int c, double fill = 0.0)
        : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, fill) {}

    double& operator()(int i, int j) { return data[static_cast<std::size_t>(i) * cols + j]; }
    double operator()(int i, int j) const { return data[static_cast<std::size_t>(i) * cols + j]; }

    std::span<const double> row(int i) const {
        return {data.data() + static_cast<std::size_t>(i) * cols, static_cast<std::size_t>(cols)};
    }
    std::span<double> row(int i) {
        return {data.data() + static_cast<std::size_t>(i) * cols, static_cast<std::size_t>(cols)};
    }

    static Matrix identity(int n) {
        Matrix m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
};

inline bool all_finite(const Matrix& m) {
    for (double v : m.data)
        if (!std::isfinite(v)) return false;
    return true;
}

// C = A * B with the k-loop in the middle: each C(i,j) accumulates in a
// fixed order regardless of call site.
inline Matrix matmul(const Matrix& a, const Matrix& b) {
    require(a.cols == b.rows, ErrorCode::ShapeMismatch,
            "matmul: " + std::to_string(a.rows) + "x" + std::to_string(a.cols) + " * " +
                std::to_string(b.rows) + "x" + std::to_string(b.cols));
    Matrix c(a.rows, b.cols);
    for (int i = 0; i < a.rows; ++i) {
        const double* arow = a.data.data() + static_cast<std::size_t>(i) * a.cols;
        double* crow = c.data.data() + static_cast<std::size_t>(i) * c.cols;
        for (int k = 0; k < a.cols; ++k) {
            double aik = arow[k];
            const double* brow = b.data.data() + static_cast<std::size_t>(k) * b.cols;
            for (int j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
        }
    }
    return c;
}

// C = A^T * B without materializing the transpose.
inline Matrix matmul_transpose_a(const Matrix& a, const Matrix& b) {
    require(a.rows == b.rows, ErrorCode::ShapeMismatch, "matmul_transpose_a: row mismatch");
    Matrix c(a.cols, b.cols);
    for (int k = 0; k < a.rows; ++k) {
        const double* arow = a.data.data() + static_cast<std::size_t>(k) * a.cols;
        const double* brow = b.data.data() + static_cast<std::size_t>(k) * b.cols;
        for (int i = 0; i < a.cols; ++i) {
            double aki = arow[i];
            double* crow = c.data.data() + static_cast<std::size_t>(i) * c.cols;
            for (int j = 0; j < b.cols; ++j) crow[j] += aki * brow[j];
        }
    }
    return c;
}

// C = A * B^T.
inline Matrix matmul_transpose_b(const Matrix& a, const Matrix& b) {
    require(a.cols == b.cols, ErrorCode::ShapeMismatch, "matmul_transpose_b: col mismatch");
    Matrix c(a.rows, b.rows);
    for (int i = 0; i < a.rows; ++i) {
        const double* arow = a.data.data() + static_cast<std::size_t>(i) * a.cols;
        for (int j = 0; j < b.rows; ++j) {
            const double* brow = b.data.data() + static_cast<std::size_t>(j) * b.cols;
            double acc = 0.0;
            for (int k = 0; k < a.cols; ++k) acc += arow[k] * brow[k];
            c(i, j) = acc;
        }
    }
    return c;
}

inline Matrix transpose(const Matrix& a) {
    Matrix t(a.cols, a.rows);
    for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < a.cols; ++j) t(j, i) = a(i, j);
    return t;
}

inline double frobenius_norm_squared(const Matrix& a) {
    double acc = 0.0;
    for (double v : a.data) acc += v * v;
    return acc;
}

}  // namespace tacegcn
