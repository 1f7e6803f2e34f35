#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <utility>
#include <vector>

#include "woodbury/errors.hpp"
#include "woodbury/tolerance.hpp"

namespace woodbury {

// Dense complex matrix, row-major storage. R is the underlying real
// precision; entries are std::complex<R>. Zero-dimensional matrices are
// legal values (they fall out of rank-0 perturbations) and every
// operation treats them consistently.
template <typename R = double>
class Matrix {
public:
    using real_type = R;
    using value_type = std::complex<R>;

    Matrix() = default;

    Matrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols, value_type(0)) {}

    Matrix(std::size_t rows, std::size_t cols, std::vector<value_type> data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (data_.size() != rows_ * cols_)
            throw dimension_error("Matrix: data length does not match rows*cols");
    }

    Matrix(std::initializer_list<std::initializer_list<value_type>> init) {
        rows_ = init.size();
        cols_ = rows_ ? init.begin()->size() : 0;
        data_.reserve(rows_ * cols_);
        for (const auto& row : init) {
            if (row.size() != cols_)
                throw dimension_error("Matrix: ragged initializer");
            data_.insert(data_.end(), row.begin(), row.end());
        }
    }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = value_type(1);
        return m;
    }

    static Matrix zero(std::size_t rows, std::size_t cols) { return Matrix(rows, cols); }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    value_type& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    const value_type& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    const std::vector<value_type>& data() const { return data_; }
    std::vector<value_type>& data() { return data_; }

    bool same_shape(const Matrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    bool is_square() const { return rows_ == cols_; }

    bool is_finite() const {
        for (const auto& z : data_)
            if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
        return true;
    }

    Matrix& operator+=(const Matrix& other) {
        require_same_shape(other, "operator+=");
        for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += other.data_[k];
        return *this;
    }

    Matrix& operator-=(const Matrix& other) {
        require_same_shape(other, "operator-=");
        for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= other.data_[k];
        return *this;
    }

    Matrix& operator*=(value_type s) {
        for (auto& z : data_) z *= s;
        return *this;
    }

    friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
    friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
    friend Matrix operator*(Matrix a, value_type s) { return a *= s; }
    friend Matrix operator*(value_type s, Matrix a) { return a *= s; }

    friend Matrix operator*(const Matrix& a, const Matrix& b) {
        if (a.cols_ != b.rows_)
            throw dimension_error("operator*: inner dimensions disagree");
        Matrix c(a.rows_, b.cols_);
        for (std::size_t i = 0; i < a.rows_; ++i) {
            for (std::size_t k = 0; k < a.cols_; ++k) {
                const value_type aik = a(i, k);
                if (aik == value_type(0)) continue;
                for (std::size_t j = 0; j < b.cols_; ++j) c(i, j) += aik * b(k, j);
            }
        }
        return c;
    }

    friend bool operator==(const Matrix& a, const Matrix& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
    }

private:
    void require_same_shape(const Matrix& other, const char* op) const {
        if (!same_shape(other))
            throw dimension_error(std::string(op) + ": shapes disagree");
    }

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<value_type> data_;
};

// Conjugate transpose. result(i, j) = conj(m(j, i)).
template <typename R>
Matrix<R> adjoint(const Matrix<R>& m) {
    Matrix<R> a(m.cols(), m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) a(j, i) = std::conj(m(i, j));
    return a;
}

template <typename R>
R frobenius_norm(const Matrix<R>& m) {
    R sum(0);
    for (const auto& z : m.data()) sum += std::norm(z);
    return std::sqrt(sum);
}

template <typename R>
R max_abs(const Matrix<R>& m) {
    R best(0);
    for (const auto& z : m.data()) best = std::max(best, std::abs(z));
    return best;
}

// [a | b]
template <typename R>
Matrix<R> hcat(const Matrix<R>& a, const Matrix<R>& b) {
    if (a.rows() != b.rows()) throw dimension_error("hcat: row counts disagree");
    Matrix<R> c(a.rows(), a.cols() + b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) c(i, j) = a(i, j);
        for (std::size_t j = 0; j < b.cols(); ++j) c(i, a.cols() + j) = b(i, j);
    }
    return c;
}

// [a ; b]
template <typename R>
Matrix<R> vcat(const Matrix<R>& a, const Matrix<R>& b) {
    if (a.cols() != b.cols()) throw dimension_error("vcat: column counts disagree");
    Matrix<R> c(a.rows() + b.rows(), a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) c(i, j) = a(i, j);
    for (std::size_t i = 0; i < b.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) c(a.rows() + i, j) = b(i, j);
    return c;
}

// ||p - q||_F <= eq_rtol * max(1, ||p||_F, ||q||_F)
template <typename R>
bool approx_equal(const Matrix<R>& p, const Matrix<R>& q, const TolerancePolicy<R>& tol = {}) {
    if (!p.same_shape(q)) throw dimension_error("approx_equal: shapes disagree");
    const R scale = std::max({R(1), frobenius_norm(p), frobenius_norm(q)});
    return frobenius_norm(p - q) <= tol.eq_rtol * scale;
}

// ||p - q||_F / max(1, ||q||_F); the floor keeps near-zero references stable.
template <typename R>
R relative_deviation(const Matrix<R>& p, const Matrix<R>& q) {
    if (!p.same_shape(q)) throw dimension_error("relative_deviation: shapes disagree");
    return frobenius_norm(p - q) / std::max(R(1), frobenius_norm(q));
}

template <typename R>
void require_finite(const Matrix<R>& m, const char* who) {
    if (!m.is_finite())
        throw numerical_error(std::string(who) + ": input has non-finite entries");
}

} // namespace woodbury
