#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace randpivot {

/// Dense real matrix with column-major storage.
class Matrix {
public:
    Matrix() = default;

    /// Zero matrix of the given shape.
    Matrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(checked_size(rows, cols), 0.0) {}

    /// Takes ownership of a column-major entry buffer. All entries must be finite.
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> column_major)
        : rows_(rows), cols_(cols), data_(std::move(column_major)) {
        checked_size(rows, cols);
        if (data_.size() != rows * cols)
            throw std::invalid_argument("Matrix: entry count does not match dimensions");
        for (double v : data_)
            if (!std::isfinite(v))
                throw std::invalid_argument("Matrix: entries must be finite");
    }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    /// Row-major nested-list constructor, convenient for literals in tests and tools.
    static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
        const std::size_t r = rows.size();
        if (r == 0) throw std::invalid_argument("Matrix: empty row list");
        const std::size_t c = rows.begin()->size();
        Matrix m(r, c);
        std::size_t i = 0;
        for (const auto& row : rows) {
            if (row.size() != c)
                throw std::invalid_argument("Matrix: ragged row list");
            std::size_t j = 0;
            for (double v : row) {
                if (!std::isfinite(v))
                    throw std::invalid_argument("Matrix: entries must be finite");
                m(i, j++) = v;
            }
            ++i;
        }
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t r, std::size_t c) { return data_[c * rows_ + r]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[c * rows_ + r]; }

    const std::vector<double>& data() const { return data_; }

    double frobenius_norm() const {
        double s = 0.0;
        for (double v : data_) s += v * v;
        return std::sqrt(s);
    }

    double column_norm(std::size_t j) const {
        double s = 0.0;
        for (std::size_t i = 0; i < rows_; ++i) s += (*this)(i, j) * (*this)(i, j);
        return std::sqrt(s);
    }

    bool same_shape(const Matrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

private:
    static std::size_t checked_size(std::size_t rows, std::size_t cols) {
        if (rows == 0 || cols == 0)
            throw std::invalid_argument("Matrix: dimensions must be at least 1x1");
        return rows * cols;
    }

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Symmetric matrix stored as a full square with mirrored writes, so that
/// b(i,j) == b(j,i) holds bit-exactly at all times. Mutation goes through
/// set(), which writes both triangles.
class SymmetricMatrix {
public:
    SymmetricMatrix() = default;

    explicit SymmetricMatrix(std::size_t n) : full_(n, n) {}

    static SymmetricMatrix identity(std::size_t n) {
        SymmetricMatrix b(n);
        for (std::size_t i = 0; i < n; ++i) b.set(i, i, 1.0);
        return b;
    }

    static SymmetricMatrix diagonal(const std::vector<double>& d) {
        SymmetricMatrix b(d.size());
        for (std::size_t i = 0; i < d.size(); ++i) {
            if (!std::isfinite(d[i]))
                throw std::invalid_argument("SymmetricMatrix: entries must be finite");
            b.set(i, i, d[i]);
        }
        return b;
    }

    /// Validates that the given full matrix is bit-exactly symmetric.
    static SymmetricMatrix from_matrix(const Matrix& m) {
        if (m.rows() != m.cols())
            throw std::invalid_argument("SymmetricMatrix: matrix is not square");
        for (std::size_t j = 0; j < m.cols(); ++j)
            for (std::size_t i = 0; i < j; ++i)
                if (m(i, j) != m(j, i))
                    throw std::invalid_argument(
                        "SymmetricMatrix: asymmetric entry at (" + std::to_string(i) + "," +
                        std::to_string(j) + ")");
        SymmetricMatrix b;
        b.full_ = m;
        return b;
    }

    static SymmetricMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
        return from_matrix(Matrix::from_rows(rows));
    }

    std::size_t order() const { return full_.rows(); }

    double operator()(std::size_t i, std::size_t j) const { return full_(i, j); }

    void set(std::size_t i, std::size_t j, double v) {
        full_(i, j) = v;
        full_(j, i) = v;
    }

    const Matrix& as_matrix() const { return full_; }

    double frobenius_norm() const { return full_.frobenius_norm(); }

private:
    Matrix full_;
};

/// Sorted index subset J of the columns/rows touched by one iteration, |J| >= 2.
class PivotSet {
public:
    explicit PivotSet(std::vector<std::size_t> indices) : indices_(std::move(indices)) {
        if (indices_.size() < 2)
            throw std::invalid_argument("PivotSet: needs at least two indices");
        for (std::size_t m = 1; m < indices_.size(); ++m)
            if (indices_[m - 1] >= indices_[m])
                throw std::invalid_argument("PivotSet: indices must be strictly increasing");
    }

    static PivotSet pair(std::size_t i, std::size_t j) {
        if (i > j) std::swap(i, j);
        return PivotSet({i, j});
    }

    static PivotSet full(std::size_t n) {
        std::vector<std::size_t> idx(n);
        for (std::size_t i = 0; i < n; ++i) idx[i] = i;
        return PivotSet(std::move(idx));
    }

    std::size_t size() const { return indices_.size(); }
    std::size_t operator[](std::size_t m) const { return indices_[m]; }
    const std::vector<std::size_t>& indices() const { return indices_; }

    auto begin() const { return indices_.begin(); }
    auto end() const { return indices_.end(); }

    void validate_for(std::size_t n) const {
        if (indices_.back() >= n)
            throw std::invalid_argument("PivotSet: index " + std::to_string(indices_.back()) +
                                        " out of range for order " + std::to_string(n));
    }

    std::string to_string() const {
        std::string s;
        for (std::size_t m = 0; m < indices_.size(); ++m) {
            if (m) s += '-';
            s += std::to_string(indices_[m]);
        }
        return s;
    }

private:
    std::vector<std::size_t> indices_;
};

/// d x k matrix whose m-th column is column J[m] of A.
inline Matrix extract_columns(const Matrix& a, const PivotSet& j) {
    j.validate_for(a.cols());
    Matrix out(a.rows(), j.size());
    for (std::size_t c = 0; c < j.size(); ++c)
        for (std::size_t r = 0; r < a.rows(); ++r)
            out(r, c) = a(r, j[c]);
    return out;
}

/// k x k principal submatrix of B at rows/columns J.
inline SymmetricMatrix extract_principal_submatrix(const SymmetricMatrix& b, const PivotSet& j) {
    j.validate_for(b.order());
    SymmetricMatrix out(j.size());
    for (std::size_t c = 0; c < j.size(); ++c)
        for (std::size_t r = 0; r <= c; ++r)
            out.set(r, c, b(j[r], j[c]));
    return out;
}

/// Unit-diagonal rescaling: entry (i,j) becomes b_ij / sqrt(b_ii b_jj).
/// The diagonal of the result is exactly 1.
inline SymmetricMatrix diagonal_normalize(const SymmetricMatrix& b) {
    const std::size_t n = b.order();
    std::vector<double> scale(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(b(i, i) > 0.0))
            throw std::domain_error("diagonal_normalize: nonpositive diagonal entry at index " +
                                    std::to_string(i));
        scale[i] = std::sqrt(b(i, i));
    }
    SymmetricMatrix out(n);
    for (std::size_t j = 0; j < n; ++j) {
        out.set(j, j, 1.0);
        for (std::size_t i = 0; i < j; ++i)
            out.set(i, j, b(i, j) / (scale[i] * scale[j]));
    }
    return out;
}

/// Columns J of A are replaced by (old A_J) * S; all other columns are untouched.
inline void apply_one_sided_update(Matrix& a, const PivotSet& j, const Matrix& s) {
    const std::size_t k = j.size();
    j.validate_for(a.cols());
    if (s.rows() != k || s.cols() != k)
        throw std::invalid_argument("apply_one_sided_update: transform shape mismatch");
    const Matrix old = extract_columns(a, j);
    for (std::size_t c = 0; c < k; ++c) {
        for (std::size_t r = 0; r < a.rows(); ++r) {
            double acc = 0.0;
            for (std::size_t m = 0; m < k; ++m) acc += old(r, m) * s(m, c);
            a(r, j[c]) = acc;
        }
    }
}

/// Congruence by the embedding of S at J: B becomes T^T B T where T is the
/// identity with S in the (J,J) block. Entries with neither index in J are
/// untouched; symmetry is preserved bit-exactly through mirrored writes.
inline void apply_two_sided_update(SymmetricMatrix& b, const PivotSet& j, const Matrix& s) {
    const std::size_t n = b.order();
    const std::size_t k = j.size();
    j.validate_for(n);
    if (s.rows() != k || s.cols() != k)
        throw std::invalid_argument("apply_two_sided_update: transform shape mismatch");

    // G = B(:, J) * S, read entirely from the old values.
    Matrix g(n, k);
    for (std::size_t c = 0; c < k; ++c)
        for (std::size_t r = 0; r < n; ++r) {
            double acc = 0.0;
            for (std::size_t m = 0; m < k; ++m) acc += b(r, j[m]) * s(m, c);
            g(r, c) = acc;
        }

    // New pivot block S^T (B_JJ S), upper triangle then mirror.
    Matrix block(k, k);
    for (std::size_t c = 0; c < k; ++c)
        for (std::size_t r = 0; r <= c; ++r) {
            double acc = 0.0;
            for (std::size_t m = 0; m < k; ++m) acc += s(m, r) * g(j[m], c);
            block(r, c) = acc;
            block(c, r) = acc;
        }

    std::vector<bool> in_j(n, false);
    for (std::size_t m = 0; m < k; ++m) in_j[j[m]] = true;

    for (std::size_t c = 0; c < k; ++c)
        for (std::size_t r = 0; r < n; ++r)
            if (!in_j[r]) b.set(r, j[c], g(r, c));
    for (std::size_t c = 0; c < k; ++c)
        for (std::size_t r = 0; r <= c; ++r)
            b.set(j[r], j[c], block(r, c));
}

}  // namespace randpivot
