// Copyright (c) 2026, The mtgp Authors
// SPDX-License-Identifier: Apache-2.0

#include "mtgp/matrix.hpp"

#include <algorithm>
#include <cmath>

#include "mtgp/errors.hpp"

namespace mtgp {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), data_(std::move(values)) {
    if (data_.size() != rows * cols) {
        throw DimensionError("matrix " + shape_string() + " given " + std::to_string(data_.size()) +
                             " values");
    }
}

Matrix Matrix::row_vector(std::span<const double> values) {
    return Matrix(1, values.size(), std::vector<double>(values.begin(), values.end()));
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

bool Matrix::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

double Matrix::item() const {
    if (rows_ != 1 || cols_ != 1) throw DimensionError("item() on " + shape_string() + " matrix");
    return data_[0];
}

std::string Matrix::shape_string() const {
    return std::to_string(rows_) + "x" + std::to_string(cols_);
}

CsrMatrix::CsrMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), row_ptr_(rows + 1, 0) {}

CsrMatrix CsrMatrix::from_entries(std::size_t rows, std::size_t cols, std::vector<Entry> entries) {
    for (const auto& e : entries) {
        if (e.row >= rows || e.col >= cols) {
            throw IndexError("sparse entry (" + std::to_string(e.row) + "," + std::to_string(e.col) +
                             ") outside " + std::to_string(rows) + "x" + std::to_string(cols));
        }
    }
    std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
        return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    CsrMatrix m(rows, cols);
    for (std::size_t i = 0; i < entries.size();) {
        std::size_t j = i;
        double v = 0.0;
        while (j < entries.size() && entries[j].row == entries[i].row && entries[j].col == entries[i].col) {
            v += entries[j].value;
            ++j;
        }
        m.col_index_.push_back(entries[i].col);
        m.values_.push_back(v);
        ++m.row_ptr_[entries[i].row + 1];
        i = j;
    }
    for (std::size_t r = 0; r < rows; ++r) m.row_ptr_[r + 1] += m.row_ptr_[r];
    return m;
}

CsrMatrix CsrMatrix::from_dense(const Matrix& dense) {
    CsrMatrix m(dense.rows(), dense.cols());
    for (std::size_t r = 0; r < dense.rows(); ++r) {
        for (std::size_t c = 0; c < dense.cols(); ++c) {
            double v = dense(r, c);
            if (v != 0.0) {
                m.col_index_.push_back(c);
                m.values_.push_back(v);
            }
        }
        m.row_ptr_[r + 1] = m.values_.size();
    }
    return m;
}

CsrMatrix CsrMatrix::row_means(std::size_t cols, const std::vector<std::vector<std::size_t>>& groups) {
    std::vector<Entry> entries;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        if (groups[g].empty()) throw ValidationError("mean over an empty row group");
        double w = 1.0 / static_cast<double>(groups[g].size());
        for (std::size_t r : groups[g]) entries.push_back({g, r, w});
    }
    return from_entries(groups.size(), cols, std::move(entries));
}

double CsrMatrix::at(std::size_t r, std::size_t c) const {
    auto cs = row_cols(r);
    auto it = std::lower_bound(cs.begin(), cs.end(), c);
    if (it == cs.end() || *it != c) return 0.0;
    return values_[row_ptr_[r] + static_cast<std::size_t>(it - cs.begin())];
}

Matrix CsrMatrix::to_dense() const {
    Matrix d(rows_, cols_);
    for (std::size_t r = 0; r < rows_; ++r) {
        auto cs = row_cols(r);
        auto vs = row_values(r);
        for (std::size_t i = 0; i < cs.size(); ++i) d(r, cs[i]) = vs[i];
    }
    return d;
}

CsrMatrix CsrMatrix::select(std::span<const std::size_t> rows, std::span<const std::size_t> cols) const {
    std::vector<std::size_t> col_map(cols_, SIZE_MAX);
    for (std::size_t i = 0; i < cols.size(); ++i) {
        if (cols[i] >= cols_) throw IndexError("column selection out of range");
        col_map[cols[i]] = i;
    }
    CsrMatrix m(rows.size(), cols.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] >= rows_) throw IndexError("row selection out of range");
        auto cs = row_cols(rows[i]);
        auto vs = row_values(rows[i]);
        for (std::size_t k = 0; k < cs.size(); ++k) {
            std::size_t mapped = col_map[cs[k]];
            if (mapped == SIZE_MAX) continue;
            m.col_index_.push_back(mapped);
            m.values_.push_back(vs[k]);
        }
        m.row_ptr_[i + 1] = m.values_.size();
    }
    return m;
}

CsrMatrix CsrMatrix::permute_rows(std::span<const std::size_t> order) const {
    if (order.size() != rows_) throw DimensionError("row permutation has wrong length");
    CsrMatrix m(rows_, cols_);
    for (std::size_t i = 0; i < rows_; ++i) {
        if (order[i] >= rows_) throw IndexError("row permutation out of range");
        auto cs = row_cols(order[i]);
        auto vs = row_values(order[i]);
        m.col_index_.insert(m.col_index_.end(), cs.begin(), cs.end());
        m.values_.insert(m.values_.end(), vs.begin(), vs.end());
        m.row_ptr_[i + 1] = m.values_.size();
    }
    return m;
}

}  // namespace mtgp
