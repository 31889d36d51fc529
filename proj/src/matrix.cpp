#include "edgemargin/matrix.hpp"

#include <cmath>
#include <cstddef>
#include <stdexcept>

namespace edgemargin {

Matrix::Matrix(int rows, int cols)
    : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows) * cols, 0.0) {
    if (rows < 0 || cols < 0)
        throw std::invalid_argument("matrix dimensions must be non-negative");
}

Matrix::Matrix(int rows, int cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), data_(std::move(entries)) {
    if (rows < 0 || cols < 0)
        throw std::invalid_argument("matrix dimensions must be non-negative");
    if (data_.size() != static_cast<size_t>(rows) * cols)
        throw std::invalid_argument("entry count does not match rows*cols");
    if (!all_finite())
        throw std::invalid_argument("matrix entries must be finite");
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = static_cast<int>(rows.size());
    cols_ = rows_ > 0 ? static_cast<int>(rows.begin()->size()) : 0;
    data_.reserve(static_cast<size_t>(rows_) * cols_);
    for (const auto& r : rows) {
        if (static_cast<int>(r.size()) != cols_)
            throw std::invalid_argument("ragged initializer rows");
        for (double v : r) data_.push_back(v);
    }
    if (!all_finite())
        throw std::invalid_argument("matrix entries must be finite");
}

Matrix Matrix::identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::diagonal(std::span<const double> d) {
    Matrix m(static_cast<int>(d.size()), static_cast<int>(d.size()));
    for (size_t i = 0; i < d.size(); ++i) m(static_cast<int>(i), static_cast<int>(i)) = d[i];
    return m;
}

Matrix Matrix::column_vector(std::span<const double> v) {
    Matrix m(static_cast<int>(v.size()), 1);
    for (size_t i = 0; i < v.size(); ++i) m(static_cast<int>(i), 0) = v[i];
    return m;
}

Matrix Matrix::row_vector(std::span<const double> v) {
    Matrix m(1, static_cast<int>(v.size()));
    for (size_t i = 0; i < v.size(); ++i) m(0, static_cast<int>(i)) = v[i];
    return m;
}

Matrix Matrix::transposed() const {
    Matrix t(cols_, rows_);
    for (int i = 0; i < rows_; ++i)
        for (int j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

Matrix Matrix::operator*(const Matrix& rhs) const {
    if (cols_ != rhs.rows_)
        throw std::invalid_argument("matrix product dimension mismatch");
    Matrix p(rows_, rhs.cols_);
    for (int i = 0; i < rows_; ++i)
        for (int k = 0; k < cols_; ++k) {
            const double a = (*this)(i, k);
            if (a == 0.0) continue;
            for (int j = 0; j < rhs.cols_; ++j) p(i, j) += a * rhs(k, j);
        }
    return p;
}

Matrix Matrix::operator+(const Matrix& rhs) const {
    if (rows_ != rhs.rows_ || cols_ != rhs.cols_)
        throw std::invalid_argument("matrix sum dimension mismatch");
    Matrix s(rows_, cols_);
    for (size_t i = 0; i < data_.size(); ++i) s.data_[i] = data_[i] + rhs.data_[i];
    return s;
}

Matrix Matrix::operator-(const Matrix& rhs) const {
    if (rows_ != rhs.rows_ || cols_ != rhs.cols_)
        throw std::invalid_argument("matrix difference dimension mismatch");
    Matrix s(rows_, cols_);
    for (size_t i = 0; i < data_.size(); ++i) s.data_[i] = data_[i] - rhs.data_[i];
    return s;
}

Matrix Matrix::scaled(double s) const {
    Matrix m(rows_, cols_);
    for (size_t i = 0; i < data_.size(); ++i) m.data_[i] = s * data_[i];
    return m;
}

double Matrix::max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::fabs(v));
    return m;
}

double Matrix::largest_column_norm() const {
    double best = 0.0;
    for (int j = 0; j < cols_; ++j) {
        double s = 0.0;
        for (int i = 0; i < rows_; ++i) s += (*this)(i, j) * (*this)(i, j);
        best = std::max(best, std::sqrt(s));
    }
    return best;
}

Matrix Matrix::sub_block(int row0, int col0, int nrows, int ncols) const {
    if (row0 < 0 || col0 < 0 || row0 + nrows > rows_ || col0 + ncols > cols_)
        throw std::invalid_argument("sub_block out of range");
    Matrix b(nrows, ncols);
    for (int i = 0; i < nrows; ++i)
        for (int j = 0; j < ncols; ++j) b(i, j) = (*this)(row0 + i, col0 + j);
    return b;
}

bool Matrix::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

Matrix operator*(double s, const Matrix& m) { return m.scaled(s); }

std::vector<double> mat_vec(const Matrix& a, std::span<const double> x) {
    if (a.cols() != static_cast<int>(x.size()))
        throw std::invalid_argument("mat_vec dimension mismatch");
    std::vector<double> y(a.rows(), 0.0);
    for (int i = 0; i < a.rows(); ++i) {
        double s = 0.0;
        for (int j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
        y[i] = s;
    }
    return y;
}

} // namespace edgemargin
