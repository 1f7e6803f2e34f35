#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numeric>
#include <vector>

#include "woodbury/errors.hpp"
#include "woodbury/matrix.hpp"
#include "woodbury/tolerance.hpp"

namespace woodbury {

// Thin singular value decomposition m ~= u * diag(sigma) * adjoint(v),
// sigma sorted descending. Columns of u belonging to zero singular values
// are left as zero vectors; only the range part is ever consumed.
template <typename R>
struct SvdResult {
    Matrix<R> u;           // rows x k
    std::vector<R> sigma;  // k = min(rows, cols), descending
    Matrix<R> v;           // cols x k

    R sigma_max() const { return sigma.empty() ? R(0) : sigma.front(); }
    R sigma_min() const { return sigma.empty() ? R(0) : sigma.back(); }
};

namespace detail {

// One-sided Jacobi on a matrix with rows >= cols: rotate column pairs until
// they are mutually orthogonal. Unitary 2x2 rotations, so the accumulated v
// stays unitary and singular values come out as column norms. Columns whose
// norm has collapsed to roundoff level (relative to the whole matrix) are
// frozen: they carry singular values below any truncation threshold, and
// chasing their couplings with the relative test would cycle forever.
template <typename R>
SvdResult<R> jacobi_svd_tall(Matrix<R> a) {
    using C = std::complex<R>;
    const std::size_t m = a.rows(), n = a.cols();
    Matrix<R> v = Matrix<R>::identity(n);

    const R conv = R(16) * std::numeric_limits<R>::epsilon();
    const R col_floor = std::numeric_limits<R>::epsilon() * frobenius_norm(a);
    const int max_sweeps = 64;
    bool converged = (n < 2);
    for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
        converged = true;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                R alpha(0), beta(0);
                C gamma(0);
                for (std::size_t i = 0; i < m; ++i) {
                    alpha += std::norm(a(i, p));
                    beta += std::norm(a(i, q));
                    gamma += std::conj(a(i, p)) * a(i, q);
                }
                if (std::sqrt(alpha) <= col_floor || std::sqrt(beta) <= col_floor) continue;
                const R gnorm = std::abs(gamma);
                const R scale = std::sqrt(alpha * beta);
                if (gnorm <= conv * scale || scale == R(0)) continue;
                converged = false;

                const C phase = gamma / gnorm;  // e^{i phi}
                const R zeta = (beta - alpha) / (R(2) * gnorm);
                const R t = (zeta >= R(0) ? R(1) : R(-1)) /
                            (std::abs(zeta) + std::sqrt(R(1) + zeta * zeta));
                const R c = R(1) / std::sqrt(R(1) + t * t);
                const R s = c * t;
                const C sp = s * std::conj(phase);
                const C cp = c * std::conj(phase);

                for (std::size_t i = 0; i < m; ++i) {
                    const C ap = a(i, p), aq = a(i, q);
                    a(i, p) = c * ap - sp * aq;
                    a(i, q) = s * ap + cp * aq;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const C vp = v(i, p), vq = v(i, q);
                    v(i, p) = c * vp - sp * vq;
                    v(i, q) = s * vp + cp * vq;
                }
            }
        }
    }
    if (!converged)
        throw numerical_error("svd: Jacobi sweeps did not converge");

    std::vector<R> sigma(n);
    for (std::size_t j = 0; j < n; ++j) {
        R sum(0);
        for (std::size_t i = 0; i < m; ++i) sum += std::norm(a(i, j));
        sigma[j] = std::sqrt(sum);
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return sigma[x] > sigma[y]; });

    SvdResult<R> out;
    out.u = Matrix<R>(m, n);
    out.v = Matrix<R>(n, n);
    out.sigma.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t src = order[j];
        out.sigma[j] = sigma[src];
        if (sigma[src] > R(0)) {
            const R inv = R(1) / sigma[src];
            for (std::size_t i = 0; i < m; ++i) out.u(i, j) = a(i, src) * inv;
        }
        for (std::size_t i = 0; i < n; ++i) out.v(i, j) = v(i, src);
    }
    return out;
}

} // namespace detail

template <typename R>
SvdResult<R> svd(const Matrix<R>& m, const char* who = "svd") {
    require_finite(m, who);
    if (m.rows() >= m.cols()) return detail::jacobi_svd_tall(m);
    SvdResult<R> t = detail::jacobi_svd_tall(adjoint(m));
    return SvdResult<R>{std::move(t.v), std::move(t.sigma), std::move(t.u)};
}

namespace detail {

// v diag(1/sigma) u* over the singular values strictly above the absolute
// cutoff; rows/cols are those of the original matrix.
template <typename R>
Matrix<R> pinv_from_svd(const SvdResult<R>& f, std::size_t rows, std::size_t cols, R cutoff) {
    Matrix<R> b(cols, rows);
    for (std::size_t j = 0; j < f.sigma.size(); ++j) {
        if (!(f.sigma[j] > cutoff)) break;  // sorted descending
        const R inv = R(1) / f.sigma[j];
        for (std::size_t i = 0; i < cols; ++i) {
            const auto vij = f.v(i, j) * inv;
            if (vij == typename Matrix<R>::value_type(0)) continue;
            for (std::size_t l = 0; l < rows; ++l) b(i, l) += vij * std::conj(f.u(l, j));
        }
    }
    return b;
}

} // namespace detail

// Moore-Penrose pseudoinverse via SVD truncation: singular values at or
// below rank_cutoff * sigma_max are dropped. Independent of the closed-form
// update routes, which makes it the ground truth they are checked against.
template <typename R>
Matrix<R> pinv(const Matrix<R>& m, const TolerancePolicy<R>& tol = {}) {
    tol.validate();
    const SvdResult<R> f = svd(m, "pinv");
    const R cutoff = tol.rank_cutoff(m.rows(), m.cols()) * f.sigma_max();
    return detail::pinv_from_svd(f, m.rows(), m.cols(), cutoff);
}

// Count of singular values strictly above rank_cutoff * sigma_max.
template <typename R>
std::size_t numerical_rank(const Matrix<R>& m, const TolerancePolicy<R>& tol = {}) {
    tol.validate();
    const SvdResult<R> f = svd(m, "numerical_rank");
    const R cutoff = tol.rank_cutoff(m.rows(), m.cols()) * f.sigma_max();
    std::size_t r = 0;
    while (r < f.sigma.size() && f.sigma[r] > cutoff) ++r;
    return r;
}

// sigma_max / sigma_min over all min(rows, cols) singular values;
// +inf when the smallest is exactly zero, 1 for empty matrices.
template <typename R>
R condition_number(const Matrix<R>& m) {
    const SvdResult<R> f = svd(m, "condition_number");
    if (f.sigma.empty()) return R(1);
    if (f.sigma_min() == R(0)) return std::numeric_limits<R>::infinity();
    return f.sigma_max() / f.sigma_min();
}

// Gauss-Jordan with partial pivoting. Callers gate on condition_number
// first when they need the cond_max semantics; the pivot check here only
// catches hard breakdown.
template <typename R>
Matrix<R> inverse(const Matrix<R>& m) {
    if (!m.is_square()) throw dimension_error("inverse: matrix is not square");
    require_finite(m, "inverse");
    const std::size_t n = m.rows();
    Matrix<R> a = m;
    Matrix<R> inv = Matrix<R>::identity(n);
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        R best = std::abs(a(col, col));
        for (std::size_t i = col + 1; i < n; ++i) {
            const R cand = std::abs(a(i, col));
            if (cand > best) { best = cand; piv = i; }
        }
        if (best == R(0))
            throw numerical_error("inverse: matrix is singular");
        if (piv != col) {
            for (std::size_t j = 0; j < n; ++j) {
                std::swap(a(col, j), a(piv, j));
                std::swap(inv(col, j), inv(piv, j));
            }
        }
        const auto pivot = a(col, col);
        for (std::size_t j = 0; j < n; ++j) {
            a(col, j) /= pivot;
            inv(col, j) /= pivot;
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (i == col) continue;
            const auto factor = a(i, col);
            if (factor == typename Matrix<R>::value_type(0)) continue;
            for (std::size_t j = 0; j < n; ++j) {
                a(i, j) -= factor * a(col, j);
                inv(i, j) -= factor * inv(col, j);
            }
        }
    }
    return inv;
}

// Normalized defects of the four defining equations of the pseudoinverse.
// The first two are relative to ||a|| and ||b||, the Hermitian-symmetry
// defects use a 1 + ||.|| floor; zero denominators fall back to absolute.
template <typename R>
struct PenroseResiduals {
    R aba;      // ||a b a - a|| / ||a||
    R bab;      // ||b a b - b|| / ||b||
    R ab_herm;  // ||(a b)* - a b|| / (1 + ||a b||)
    R ba_herm;  // ||(b a)* - b a|| / (1 + ||b a||)

    R max() const { return std::max({aba, bab, ab_herm, ba_herm}); }
};

template <typename R>
PenroseResiduals<R> penrose_residuals(const Matrix<R>& a, const Matrix<R>& b) {
    if (b.rows() != a.cols() || b.cols() != a.rows())
        throw dimension_error("penrose_residuals: b must have the transposed shape of a");
    const Matrix<R> ab = a * b;
    const Matrix<R> ba = b * a;
    const R na = frobenius_norm(a);
    const R nb = frobenius_norm(b);
    PenroseResiduals<R> r;
    r.aba = frobenius_norm(ab * a - a) / (na > R(0) ? na : R(1));
    r.bab = frobenius_norm(ba * b - b) / (nb > R(0) ? nb : R(1));
    r.ab_herm = frobenius_norm(adjoint(ab) - ab) / (R(1) + frobenius_norm(ab));
    r.ba_herm = frobenius_norm(adjoint(ba) - ba) / (R(1) + frobenius_norm(ba));
    return r;
}

} // namespace woodbury
