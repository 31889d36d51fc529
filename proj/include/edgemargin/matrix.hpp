#pragma once

#include <complex>
#include <initializer_list>
#include <span>
#include <vector>

namespace edgemargin {

using Complex = std::complex<double>;

/// Dense real matrix, row-major. Small sizes only; every operation is a
/// plain loop. Entries are validated to be finite when constructed from
/// user-supplied data.
class Matrix {
public:
    Matrix() = default;

    /// rows x cols zero matrix.
    Matrix(int rows, int cols);

    /// From row-major entries; throws std::invalid_argument on size
    /// mismatch or non-finite entries.
    Matrix(int rows, int cols, std::vector<double> entries);

    /// Brace construction from rows, e.g. Matrix{{1,2},{3,4}}.
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    static Matrix identity(int n);
    static Matrix diagonal(std::span<const double> d);
    static Matrix column_vector(std::span<const double> v);
    static Matrix row_vector(std::span<const double> v);

    int rows() const { return rows_; }
    int cols() const { return cols_; }

    double& operator()(int i, int j) { return data_[static_cast<size_t>(i) * cols_ + j]; }
    double operator()(int i, int j) const { return data_[static_cast<size_t>(i) * cols_ + j]; }

    std::span<const double> data() const { return data_; }

    Matrix transposed() const;
    Matrix operator*(const Matrix& rhs) const;
    Matrix operator+(const Matrix& rhs) const;
    Matrix operator-(const Matrix& rhs) const;
    Matrix scaled(double s) const;

    /// Largest absolute entry.
    double max_abs() const;

    /// Column with the largest Euclidean norm; 0 for an empty matrix.
    double largest_column_norm() const;

    Matrix sub_block(int row0, int col0, int nrows, int ncols) const;

    bool all_finite() const;

    bool empty() const { return rows_ == 0 || cols_ == 0; }

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> data_;
};

Matrix operator*(double s, const Matrix& m);

/// Matrix times vector; a.cols() must equal x.size().
std::vector<double> mat_vec(const Matrix& a, std::span<const double> x);

} // namespace edgemargin
