#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <vector>

#include "s3c2/error.hpp"

namespace s3c2 {

/// Dense row-major matrix of 64-bit reals; the only numeric container used
/// for data batches, weights, activations and gradients.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double value = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, value) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) {
        assert(i < rows_ && j < cols_);
        return data_[i * cols_ + j];
    }
    double operator()(std::size_t i, std::size_t j) const {
        assert(i < rows_ && j < cols_);
        return data_[i * cols_ + j];
    }

    double* row_ptr(std::size_t i) { return data_.data() + i * cols_; }
    const double* row_ptr(std::size_t i) const { return data_.data() + i * cols_; }

    std::vector<double>& data() noexcept { return data_; }
    const std::vector<double>& data() const noexcept { return data_; }

    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

    bool same_shape(const Matrix& other) const noexcept {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    bool all_finite() const noexcept {
        for (double v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// C = A * B. ikj order: row k of B streams through row i of C, which keeps
// the inner loop unit-stride and lets the compiler vectorize it.
inline Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows())
        fail(ErrKind::Dimension, "matmul: ", a.rows(), "x", a.cols(), " * ",
             b.rows(), "x", b.cols());
    Matrix c(a.rows(), b.cols());
    const std::size_t n = b.cols();
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* arow = a.row_ptr(i);
        double* crow = c.row_ptr(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double av = arow[k];
            if (av == 0.0) continue;
            const double* brow = b.row_ptr(k);
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
    return c;
}

// C = A^T * B, without materializing the transpose.
inline Matrix matmul_at_b(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows())
        fail(ErrKind::Dimension, "matmul_at_b: ", a.rows(), "x", a.cols(),
             "^T * ", b.rows(), "x", b.cols());
    Matrix c(a.cols(), b.cols());
    const std::size_t n = b.cols();
    for (std::size_t r = 0; r < a.rows(); ++r) {
        const double* arow = a.row_ptr(r);
        const double* brow = b.row_ptr(r);
        for (std::size_t i = 0; i < a.cols(); ++i) {
            const double av = arow[i];
            if (av == 0.0) continue;
            double* crow = c.row_ptr(i);
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
    return c;
}

// C = A * B^T. Row-by-row dot products; both sides unit-stride.
inline Matrix matmul_a_bt(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols())
        fail(ErrKind::Dimension, "matmul_a_bt: ", a.rows(), "x", a.cols(),
             " * ", b.rows(), "x", b.cols(), "^T");
    Matrix c(a.rows(), b.rows());
    const std::size_t k = a.cols();
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* arow = a.row_ptr(i);
        double* crow = c.row_ptr(i);
        for (std::size_t j = 0; j < b.rows(); ++j) {
            const double* brow = b.row_ptr(j);
            double acc = 0.0;
            for (std::size_t t = 0; t < k; ++t) acc += arow[t] * brow[t];
            crow[j] = acc;
        }
    }
    return c;
}

inline Matrix transpose(const Matrix& a) {
    Matrix t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    return t;
}

inline Matrix gather_rows(const Matrix& src, const std::vector<std::size_t>& rows) {
    Matrix out(rows.size(), src.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] >= src.rows())
            fail(ErrKind::InvalidArgument, "gather_rows: index ", rows[i],
                 " out of range (", src.rows(), " rows)");
        const double* s = src.row_ptr(rows[i]);
        std::copy(s, s + src.cols(), out.row_ptr(i));
    }
    return out;
}

/// Per-row L2 norm of the difference between paired rows.
inline std::vector<double> euclidean_pair_distance(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b))
        fail(ErrKind::Dimension, "euclidean_pair_distance: ", a.rows(), "x",
             a.cols(), " vs ", b.rows(), "x", b.cols());
    std::vector<double> d(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* ar = a.row_ptr(i);
        const double* br = b.row_ptr(i);
        double acc = 0.0;
        for (std::size_t j = 0; j < a.cols(); ++j) {
            const double diff = ar[j] - br[j];
            acc += diff * diff;
        }
        d[i] = std::sqrt(acc);
    }
    return d;
}

}  // namespace s3c2
