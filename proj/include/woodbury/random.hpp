#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>

#include "woodbury/decomp.hpp"
#include "woodbury/errors.hpp"
#include "woodbury/matrix.hpp"

namespace woodbury {

// Deterministic random source. Conversions from engine bits to doubles are
// done by hand (rather than via std distributions, whose output is
// implementation-defined) so that a seed reproduces the same stream on any
// standard library.
template <typename R = double>
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    R uniform() {  // [0, 1)
        return static_cast<R>(eng_() >> 11) * static_cast<R>(0x1.0p-53);
    }

    R uniform(R lo, R hi) { return lo + (hi - lo) * uniform(); }

    R gaussian() {  // Box-Muller
        const R u1 = R(1) - uniform();  // (0, 1]
        const R u2 = uniform();
        return std::sqrt(R(-2) * std::log(u1)) *
               std::cos(R(2) * std::numbers::pi_v<R> * u2);
    }

    std::complex<R> cgaussian() {
        const R re = gaussian();
        const R im = gaussian();
        return {re * std::numbers::sqrt2_v<R> / R(2), im * std::numbers::sqrt2_v<R> / R(2)};
    }

    std::uint64_t bits() { return eng_(); }

private:
    std::mt19937_64 eng_;
};

template <typename R>
Matrix<R> gaussian_matrix(Rng<R>& rng, std::size_t rows, std::size_t cols) {
    Matrix<R> m(rows, cols);
    for (auto& z : m.data()) z = rng.cgaussian();
    return m;
}

// dim x k with orthonormal columns: Gaussian draw followed by modified
// Gram-Schmidt with one re-orthogonalization pass.
template <typename R>
Matrix<R> orthonormal_columns(Rng<R>& rng, std::size_t dim, std::size_t k) {
    if (k > dim) throw precondition_error("orthonormal_columns: k exceeds dim");
    Matrix<R> q(dim, k);
    for (std::size_t j = 0; j < k; ++j) {
        for (int attempt = 0; attempt < 64; ++attempt) {
            for (std::size_t i = 0; i < dim; ++i) q(i, j) = rng.cgaussian();
            for (int pass = 0; pass < 2; ++pass) {
                for (std::size_t prev = 0; prev < j; ++prev) {
                    std::complex<R> dot(0);
                    for (std::size_t i = 0; i < dim; ++i) dot += std::conj(q(i, prev)) * q(i, j);
                    for (std::size_t i = 0; i < dim; ++i) q(i, j) -= dot * q(i, prev);
                }
            }
            R norm(0);
            for (std::size_t i = 0; i < dim; ++i) norm += std::norm(q(i, j));
            norm = std::sqrt(norm);
            if (norm > R(1e-6)) {
                for (std::size_t i = 0; i < dim; ++i) q(i, j) /= norm;
                break;
            }
        }
    }
    return q;
}

// Square n x n matrix of the given rank with singular values spread in
// [sigma_lo, sigma_hi]; the clean spectral gap keeps numerical rank
// decisions unambiguous in the test families.
template <typename R>
Matrix<R> random_rank_matrix(Rng<R>& rng, std::size_t n, std::size_t rank,
                             R sigma_lo = R(0.5), R sigma_hi = R(2)) {
    if (rank > n) throw precondition_error("random_rank_matrix: rank exceeds dimension");
    if (rank == 0) return Matrix<R>(n, n);
    const Matrix<R> u = orthonormal_columns(rng, n, rank);
    const Matrix<R> v = orthonormal_columns(rng, n, rank);
    Matrix<R> us = u;
    for (std::size_t j = 0; j < rank; ++j) {
        const R s = rng.uniform(sigma_lo, sigma_hi);
        for (std::size_t i = 0; i < n; ++i) us(i, j) *= s;
    }
    return us * adjoint(v);
}

// Oblique idempotent of the given rank: V diag(I_rank, 0) V^{-1} with the
// similarity V rejection-sampled below cond_bound. Non-Hermitian almost
// surely, which is the regime where the resolvent projector is nontrivial.
template <typename R>
Matrix<R> random_idempotent(Rng<R>& rng, std::size_t n, std::size_t rank,
                            R cond_bound = R(1e3)) {
    if (rank > n) throw precondition_error("random_idempotent: rank exceeds dimension");
    for (int attempt = 0; attempt < 1000; ++attempt) {
        const Matrix<R> v = gaussian_matrix(rng, n, n);
        if (!(condition_number(v) < cond_bound)) continue;
        Matrix<R> core(n, n);
        for (std::size_t i = 0; i < rank; ++i) core(i, i) = R(1);
        return v * core * inverse(v);
    }
    throw numerical_error("random_idempotent: rejection sampling exhausted");
}

// Inner inverse of t sampled around the pseudoinverse:
// b = t^+ + (I - t^+ t) g (I - t t^+), which satisfies t b t = t for any g.
template <typename R>
Matrix<R> random_inner_inverse(Rng<R>& rng, const Matrix<R>& t,
                               const TolerancePolicy<R>& tol = {}) {
    if (!t.is_square()) throw dimension_error("random_inner_inverse: t must be square");
    const std::size_t n = t.rows();
    const Matrix<R> tp = pinv(t, tol);
    const Matrix<R> eye = Matrix<R>::identity(n);
    const Matrix<R> g = gaussian_matrix(rng, n, n);
    return tp + (eye - tp * t) * g * (eye - t * tp);
}

} // namespace woodbury
