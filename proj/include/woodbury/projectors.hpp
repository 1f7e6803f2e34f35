#pragma once

#include <algorithm>
#include <cmath>

#include "woodbury/decomp.hpp"
#include "woodbury/errors.hpp"
#include "woodbury/matrix.hpp"
#include "woodbury/tolerance.hpp"

namespace woodbury {

// ||s^2 - s||_F <= eq_rtol * max(1, ||s||_F^2); the squared scale matches
// the quadratic growth of the defect under rescaling of s.
template <typename R>
bool is_idempotent(const Matrix<R>& s, const TolerancePolicy<R>& tol = {}) {
    if (!s.is_square()) throw dimension_error("is_idempotent: matrix is not square");
    const R ns = frobenius_norm(s);
    return frobenius_norm(s * s - s) <= tol.eq_rtol * std::max(R(1), ns * ns);
}

namespace detail {

template <typename R>
void require_idempotent(const Matrix<R>& s, const TolerancePolicy<R>& tol, const char* who) {
    if (!is_idempotent(s, tol))
        throw precondition_error(std::string(who) + ": input is not idempotent at eq_rtol");
}

} // namespace detail

// Orthogonal projector onto range(s) for an idempotent s, computed through
// the resolvent identity  P = -s (I - s - s*)^{-1}.  One linear solve, no
// decomposition. I - s - s* is invertible whenever s is exactly idempotent;
// a condition number at or above cond_max means the idempotency tolerance
// let something through that is too far from idempotent to trust.
template <typename R>
Matrix<R> range_projector(const Matrix<R>& s, const TolerancePolicy<R>& tol = {}) {
    detail::require_idempotent(s, tol, "range_projector");
    const Matrix<R> core = Matrix<R>::identity(s.rows()) - s - adjoint(s);
    const R cond = condition_number(core);
    if (!(cond < tol.cond_max))
        throw numerical_error("range_projector: I - s - s* is numerically singular");
    Matrix<R> p = s * inverse(core);
    p *= typename Matrix<R>::value_type(-1);
    return p;
}

// Same projector by the pseudoinverse route, P = s s^+. Used as the
// cross-check partner of range_projector; the test suite asserts the two
// agree on every idempotent it draws.
template <typename R>
Matrix<R> range_projector_via_pinv(const Matrix<R>& s, const TolerancePolicy<R>& tol = {}) {
    detail::require_idempotent(s, tol, "range_projector_via_pinv");
    return s * pinv(s, tol);
}

// Orthogonal projector onto ker(s) = range(I - s) for idempotent s,
// computed as I - s^+ s.
template <typename R>
Matrix<R> kernel_projector(const Matrix<R>& s, const TolerancePolicy<R>& tol = {}) {
    detail::require_idempotent(s, tol, "kernel_projector");
    return Matrix<R>::identity(s.cols()) - pinv(s, tol) * s;
}

// Moore-Penrose inverse of t recovered from any inner inverse b (t b t = t):
//
//     t^+ = (I - P_ker) b P_range,
//     P_ker = projector onto range(I - b t), P_range = projector onto range(t b).
//
// Both b t and t b are idempotent once t b t = t, so the resolvent route
// applies to each factor.
template <typename R>
Matrix<R> pinv_from_inner_inverse(const Matrix<R>& t, const Matrix<R>& b,
                                  const TolerancePolicy<R>& tol = {}) {
    if (!t.is_square() || !b.is_square() || t.rows() != b.rows())
        throw dimension_error("pinv_from_inner_inverse: t and b must be square with equal dims");
    const R defect = frobenius_norm(t * b * t - t);
    if (defect > tol.eq_rtol * std::max(R(1), frobenius_norm(t)))
        throw precondition_error("pinv_from_inner_inverse: b is not an inner inverse of t");
    const Matrix<R> eye = Matrix<R>::identity(t.rows());
    const Matrix<R> left = eye - range_projector(eye - b * t, tol);
    const Matrix<R> right = range_projector(t * b, tol);
    return left * b * right;
}

} // namespace woodbury
