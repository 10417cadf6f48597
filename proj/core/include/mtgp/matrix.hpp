// Copyright (c) 2026, The mtgp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace mtgp {

/// Dense row-major matrix of doubles. Plain value type.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

    static Matrix row_vector(std::span<const double> values);
    static Matrix identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::vector<double>& values() { return data_; }
    const std::vector<double>& values() const { return data_; }
    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    bool same_shape(const Matrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }
    bool all_finite() const;

    /// Scalar value of a 1x1 matrix.
    double item() const;

    std::string shape_string() const;

    friend bool operator==(const Matrix& a, const Matrix& b) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Compressed sparse row matrix. Used for constant operands (normalized
/// adjacency, node features, pooling operators).
class CsrMatrix {
public:
    struct Entry {
        std::size_t row;
        std::size_t col;
        double value;
    };

    CsrMatrix() = default;
    CsrMatrix(std::size_t rows, std::size_t cols);

    /// Entries may arrive in any order; duplicates are summed.
    static CsrMatrix from_entries(std::size_t rows, std::size_t cols, std::vector<Entry> entries);
    /// Keeps the exact nonzero entries of a dense matrix.
    static CsrMatrix from_dense(const Matrix& dense);
    /// Row r of the result averages the listed rows of the operand.
    static CsrMatrix row_means(std::size_t cols, const std::vector<std::vector<std::size_t>>& groups);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t nnz() const { return values_.size(); }

    std::span<const std::size_t> row_cols(std::size_t r) const {
        return {col_index_.data() + row_ptr_[r], row_ptr_[r + 1] - row_ptr_[r]};
    }
    std::span<const double> row_values(std::size_t r) const {
        return {values_.data() + row_ptr_[r], row_ptr_[r + 1] - row_ptr_[r]};
    }
    double at(std::size_t r, std::size_t c) const;

    Matrix to_dense() const;

    /// Submatrix on the given (sorted, unique) row and column sets; entries
    /// keep their stored values.
    CsrMatrix select(std::span<const std::size_t> rows, std::span<const std::size_t> cols) const;
    /// Rows reordered so that result row i is operand row order[i].
    CsrMatrix permute_rows(std::span<const std::size_t> order) const;

    friend bool operator==(const CsrMatrix& a, const CsrMatrix& b) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<std::size_t> row_ptr_{0};
    std::vector<std::size_t> col_index_;
    std::vector<double> values_;
};

}  // namespace mtgp
