#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>

#include "woodbury/decomp.hpp"
#include "woodbury/errors.hpp"
#include "woodbury/matrix.hpp"
#include "woodbury/random.hpp"
#include "woodbury/update.hpp"

namespace woodbury {

// Families of (a, x, y) triples for the property suites, one per
// hypothesis regime plus two deliberately violating ones.
enum class InstanceKind {
    smw_regular,      // ranges included, core I - y* a+ x well conditioned
    inner_regular,    // x y* a+ x y* = x y*, core singular by construction
    special_pair,     // x y* a+ x = x and y* a+ x y* = y* (forces y* a+ x = I)
    range_violating,  // x has a component outside range(a)
    inner_violating   // ranges included but x y* a+ x y* != x y* decisively
};

inline const char* instance_kind_name(InstanceKind k) {
    switch (k) {
        case InstanceKind::smw_regular: return "smw_regular";
        case InstanceKind::inner_regular: return "inner_regular";
        case InstanceKind::special_pair: return "special_pair";
        case InstanceKind::range_violating: return "range_violating";
        case InstanceKind::inner_violating: return "inner_violating";
    }
    return "?";
}

inline std::optional<InstanceKind> parse_instance_kind(const std::string& s) {
    if (s == "smw_regular") return InstanceKind::smw_regular;
    if (s == "inner_regular") return InstanceKind::inner_regular;
    if (s == "special_pair") return InstanceKind::special_pair;
    if (s == "range_violating") return InstanceKind::range_violating;
    if (s == "inner_violating") return InstanceKind::inner_violating;
    return std::nullopt;
}

template <typename R>
struct Instance {
    Matrix<R> a;
    Matrix<R> x;
    Matrix<R> y;
};

namespace detail {

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t kind, std::uint64_t m,
                              std::uint64_t n, std::uint64_t r) {
    std::uint64_t h = seed;
    for (std::uint64_t v : {kind, m, n, r})
        h ^= v + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
    return h;
}

template <typename R>
Matrix<R> scaled_gaussian(Rng<R>& rng, std::size_t rows, std::size_t cols) {
    Matrix<R> g = gaussian_matrix(rng, rows, cols);
    g *= typename Matrix<R>::value_type(R(1) / std::sqrt(static_cast<R>(std::max<std::size_t>(rows, 1))));
    return g;
}

} // namespace detail

// Deterministic in (kind, m, n, r, seed). Every construction is certified
// against check_conditions before it is returned; a construction that
// cannot be certified within the iteration cap reports the parameters as
// infeasible.
template <typename R = double>
Instance<R> generate_instance(InstanceKind kind, std::size_t m, std::size_t n, std::size_t r,
                              std::uint64_t seed) {
    if (m == 0 || r == 0 || r > m)
        throw precondition_error("generate_instance: need 1 <= r <= m");
    if (n == 0 && kind != InstanceKind::smw_regular)
        throw precondition_error("generate_instance: n = 0 is only meaningful for smw_regular");
    if (kind == InstanceKind::special_pair && n > r)
        throw precondition_error("generate_instance: special_pair needs n <= r");
    if (kind == InstanceKind::range_violating && r >= m)
        throw precondition_error("generate_instance: range_violating needs r < m");

    Rng<R> rng(detail::mix_seed(seed, static_cast<std::uint64_t>(kind), m, n, r));
    const TolerancePolicy<R> tol{};
    const Matrix<R> a = random_rank_matrix(rng, m, r);
    const Matrix<R> ap = pinv(a, tol);
    const Matrix<R> eye = Matrix<R>::identity(m);
    const int cap = 500;

    switch (kind) {
        case InstanceKind::smw_regular: {
            for (int it = 0; it < cap; ++it) {
                const Matrix<R> x = a * detail::scaled_gaussian(rng, m, n);
                const Matrix<R> y = adjoint(a) * detail::scaled_gaussian(rng, m, n);
                const auto rep = detail::build_report(a, ap, x, y, tol);
                if (rep.range_x_ok && rep.range_y_ok && rep.smw_core_invertible &&
                    rep.smw_core_condition < R(1e4))
                    return {a, x, y};
            }
            break;
        }
        case InstanceKind::inner_regular: {
            // Perturbation x y* = a q for an oblique idempotent q supported
            // inside range(a*): then (a q) a+ (a q) = a q exactly. For n >= 2
            // the factorization is inflated with extra range(a) columns in x
            // (matched by zero columns in y) so the special pair genuinely
            // fails while x y* is unchanged. The idempotent's rank stays
            // strictly below r: at full rank q is the identity on range(a*),
            // x y* collapses to a itself and the perturbed matrix to zero.
            // r = 1 admits only the zero perturbation (s = 0), which is still
            // inner-regular and is factored as nonzero x against zero y.
            const std::size_t s = std::min<std::size_t>(n >= 2 ? n - 1 : 1, r - 1);
            const SvdResult<R> fa = svd(a);
            Matrix<R> basis(m, r);  // orthonormal basis of range(a*)
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < r; ++j) basis(i, j) = fa.v(i, j);
            for (int it = 0; it < cap; ++it) {
                const Matrix<R> qk = random_idempotent(rng, r, s, R(100));
                const Matrix<R> q = basis * qk * adjoint(basis);
                const Matrix<R> b = a * q;
                const SvdResult<R> fb = svd(b);
                Matrix<R> x(m, n), y(m, n);
                for (std::size_t j = 0; j < s; ++j)
                    for (std::size_t i = 0; i < m; ++i) {
                        x(i, j) = fb.u(i, j) * fb.sigma[j];
                        y(i, j) = fb.v(i, j);
                    }
                if (n > s) {
                    const Matrix<R> extra = a * detail::scaled_gaussian(rng, m, n - s);
                    for (std::size_t j = s; j < n; ++j)
                        for (std::size_t i = 0; i < m; ++i) x(i, j) = extra(i, j - s);
                }
                const auto rep = detail::build_report(a, ap, x, y, tol);
                const bool decisive_special =
                    (n < 2) || rep.special_x_residual > R(1e-4);
                if (rep.range_x_ok && rep.range_y_ok && rep.inner_regular && decisive_special)
                    return {a, x, y};
            }
            break;
        }
        case InstanceKind::special_pair: {
            // x = a w with a+ a w of full column rank, y* = (a+ a w)+, which
            // pins y* a+ x = I and with it both special identities.
            for (int it = 0; it < cap; ++it) {
                const Matrix<R> w = detail::scaled_gaussian(rng, m, n);
                const Matrix<R> x = a * w;
                const Matrix<R> px = ap * x;
                const SvdResult<R> f = svd(px);
                if (f.sigma_min() < R(0.01) || !(f.sigma_max() < R(100) * f.sigma_min()))
                    continue;
                const Matrix<R> y = adjoint(pinv(px, tol));
                const auto rep = detail::build_report(a, ap, x, y, tol);
                if (rep.range_x_ok && rep.range_y_ok && rep.special_pair)
                    return {a, x, y};
            }
            break;
        }
        case InstanceKind::range_violating: {
            const Matrix<R> complement = eye - a * ap;  // projector onto range(a)^perp
            for (int it = 0; it < cap; ++it) {
                const Matrix<R> x0 = a * detail::scaled_gaussian(rng, m, n);
                Matrix<R> leak = complement * detail::scaled_gaussian(rng, m, n);
                const R ln = frobenius_norm(leak);
                if (ln < R(1e-8)) continue;
                leak *= typename Matrix<R>::value_type(
                    R(0.5) * std::max(R(1), frobenius_norm(x0)) / ln);
                const Matrix<R> x = x0 + leak;
                const Matrix<R> y = adjoint(a) * detail::scaled_gaussian(rng, m, n);
                const auto rep = detail::build_report(a, ap, x, y, tol);
                if (!rep.range_x_ok && rep.range_x_residual > R(1e-3) && rep.range_y_ok)
                    return {a, x, y};
            }
            break;
        }
        case InstanceKind::inner_violating: {
            // For 2 <= n <= r, start from the special construction (which
            // pins y* a+ x = I) and replace the last column of y with a
            // generic range(a*) vector: rows 1..n-1 of y* a+ x stay rows of
            // the identity, so the core I - y* a+ x keeps an exact zero
            // eigenvalue (no formula path applies), while x y* a+ x y* = x y*
            // is decisively broken. Outside that parameter window the factors
            // are plain smw-style draws redrawn until inner regularity fails;
            // the core is then whatever it is.
            const bool surgery = (n >= 2 && n <= r);
            for (int it = 0; it < cap; ++it) {
                Matrix<R> x, y;
                if (surgery) {
                    const Matrix<R> w = detail::scaled_gaussian(rng, m, n);
                    x = a * w;
                    const Matrix<R> px = ap * x;
                    const SvdResult<R> f = svd(px);
                    if (f.sigma_min() < R(0.01) || !(f.sigma_max() < R(100) * f.sigma_min()))
                        continue;
                    y = adjoint(pinv(px, tol));
                    const Matrix<R> g = adjoint(a) * detail::scaled_gaussian(rng, m, 1);
                    for (std::size_t i = 0; i < m; ++i) y(i, n - 1) = g(i, 0);
                } else {
                    x = a * detail::scaled_gaussian(rng, m, n);
                    y = adjoint(a) * detail::scaled_gaussian(rng, m, n);
                }
                const auto rep = detail::build_report(a, ap, x, y, tol);
                const bool core_ok = !surgery || !rep.smw_core_invertible;
                if (rep.range_x_ok && rep.range_y_ok && rep.inner_residual > R(1e-3) && core_ok)
                    return {a, x, y};
            }
            break;
        }
    }
    throw numerical_error(
        "generate_instance: rejection sampling exceeded the iteration cap; "
        "parameters are likely infeasible for this kind");
}

} // namespace woodbury
