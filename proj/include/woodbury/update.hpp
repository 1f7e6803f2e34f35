#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>

#include "woodbury/decomp.hpp"
#include "woodbury/errors.hpp"
#include "woodbury/matrix.hpp"
#include "woodbury/tolerance.hpp"

namespace woodbury {

// Which route produced a pseudoinverse of a - x y*.
//
//   smw       core-inverse update, needs I - y* a+ x invertible
//   special   thin-factor projector form, needs x y* a+ x = x and y* a+ x y* = y*
//   general   projector-sandwich form, needs x y* a+ x y* = x y*
//   oracle    direct SVD of the perturbed matrix
enum class Formula { smw, special, general, oracle_fallback };

inline const char* formula_name(Formula f) {
    switch (f) {
        case Formula::smw: return "smw";
        case Formula::special: return "special";
        case Formula::general: return "general";
        case Formula::oracle_fallback: return "oracle_fallback";
    }
    return "?";
}

// Which of the update hypotheses hold for (a, x, y), with the defect
// magnitudes behind each boolean. Residuals are relative Frobenius norms
// with a max(1, .) floor; "invertible" means condition number below
// cond_max.
template <typename R>
struct ConditionReport {
    bool range_x_ok = false;          // a a+ x = x, i.e. range(x) inside range(a)
    R range_x_residual = R(0);
    bool range_y_ok = false;          // y* a+ a = y*, i.e. range(y) inside range(a*)
    R range_y_residual = R(0);
    bool smw_core_invertible = false;
    R smw_core_condition = R(0);      // cond of I - y* a+ x
    bool inner_regular = false;       // x y* a+ x y* = x y*
    R inner_residual = R(0);
    bool special_pair = false;        // x y* a+ x = x and y* a+ x y* = y*
    R special_x_residual = R(0);
    R special_y_residual = R(0);
};

template <typename R>
struct UpdateResult {
    Formula formula_used = Formula::oracle_fallback;
    Matrix<R> pseudoinverse;
    PenroseResiduals<R> penrose{};
    std::optional<R> oracle_deviation;  // populated when verification was requested
    ConditionReport<R> report;
    bool escalated = false;  // formula output failed the Penrose gate, recomputed via SVD
    std::string note;

    // Byproducts of the chosen route, kept for reporting.
    Matrix<R> a_pinv;
    Matrix<R> xy_star;
    std::optional<Matrix<R>> left_factor_pinv;   // (a+ x y*)+ resp. (a+ x)+
    std::optional<Matrix<R>> right_factor_pinv;  // (x y* a+)+ resp. (y* a+)+
};

namespace detail {

template <typename R>
void require_update_shapes(const Matrix<R>& a, const Matrix<R>& x, const Matrix<R>& y,
                           const char* who) {
    if (!a.is_square())
        throw dimension_error(std::string(who) + ": a must be square");
    if (x.rows() != a.rows() || y.rows() != a.rows() || x.cols() != y.cols())
        throw dimension_error(std::string(who) + ": x and y must both be rows(a) x n");
    require_finite(a, who);
    require_finite(x, who);
    require_finite(y, who);
}

template <typename R>
R floored_relative(const Matrix<R>& defect, const Matrix<R>& reference) {
    return frobenius_norm(defect) / std::max(R(1), frobenius_norm(reference));
}

template <typename R>
ConditionReport<R> build_report(const Matrix<R>& a, const Matrix<R>& a_pinv,
                                const Matrix<R>& x, const Matrix<R>& y,
                                const TolerancePolicy<R>& tol) {
    ConditionReport<R> rep;
    const Matrix<R> y_adj = adjoint(y);
    const Matrix<R> w = x * y_adj;
    const Matrix<R> ap_x = a_pinv * x;
    const Matrix<R> yh_ap = y_adj * a_pinv;

    rep.range_x_residual = floored_relative(a * ap_x - x, x);
    rep.range_x_ok = rep.range_x_residual <= tol.eq_rtol;
    rep.range_y_residual = floored_relative(yh_ap * a - y_adj, y_adj);
    rep.range_y_ok = rep.range_y_residual <= tol.eq_rtol;

    // The core comes from the identity, so its condition is floored at
    // scale 1: a core that is pure rounding noise (sigma_max ~ eps) must
    // read as singular even though the raw sigma ratio can be small.
    const Matrix<R> core = Matrix<R>::identity(x.cols()) - y_adj * ap_x;
    const SvdResult<R> fc = svd(core);
    if (fc.sigma.empty())
        rep.smw_core_condition = R(1);
    else if (fc.sigma_min() == R(0))
        rep.smw_core_condition = std::numeric_limits<R>::infinity();
    else
        rep.smw_core_condition = std::max(R(1), fc.sigma_max()) / fc.sigma_min();
    rep.smw_core_invertible = rep.smw_core_condition < tol.cond_max;

    rep.inner_residual = floored_relative(w * a_pinv * w - w, w);
    rep.inner_regular = rep.inner_residual <= tol.eq_rtol;

    rep.special_x_residual = floored_relative(w * ap_x - x, x);
    rep.special_y_residual = floored_relative(yh_ap * w - y_adj, y_adj);
    rep.special_pair =
        rep.special_x_residual <= tol.eq_rtol && rep.special_y_residual <= tol.eq_rtol;
    return rep;
}

// a+ + a+ x (I - y* a+ x)^{-1} y* a+ ; caller is responsible for the
// invertibility of the core.
template <typename R>
Matrix<R> smw_formula(const Matrix<R>& a_pinv, const Matrix<R>& x, const Matrix<R>& y) {
    const Matrix<R> y_adj = adjoint(y);
    const Matrix<R> ap_x = a_pinv * x;
    const Matrix<R> yh_ap = y_adj * a_pinv;
    const Matrix<R> core = Matrix<R>::identity(x.cols()) - y_adj * ap_x;
    return a_pinv + ap_x * inverse(core) * yh_ap;
}

// (I - w1 w1+) a+ (I - w2+ w2) with w1 = a+ x y*, w2 = x y* a+.
template <typename R>
Matrix<R> general_formula(const Matrix<R>& a_pinv, const Matrix<R>& xy_star,
                          const TolerancePolicy<R>& tol,
                          Matrix<R>* left_pinv_out = nullptr,
                          Matrix<R>* right_pinv_out = nullptr) {
    const std::size_t m = a_pinv.rows();
    const Matrix<R> eye = Matrix<R>::identity(m);
    const Matrix<R> w1 = a_pinv * xy_star;
    const Matrix<R> w2 = xy_star * a_pinv;
    const Matrix<R> w1p = pinv(w1, tol);
    const Matrix<R> w2p = pinv(w2, tol);
    if (left_pinv_out) *left_pinv_out = w1p;
    if (right_pinv_out) *right_pinv_out = w2p;
    return (eye - w1 * w1p) * a_pinv * (eye - w2p * w2);
}

// (I - (a+ x)(a+ x)+) a+ (I - (y* a+)+ (y* a+)); thin m x n factors in
// place of the m x m products of the general form.
template <typename R>
Matrix<R> special_formula(const Matrix<R>& a_pinv, const Matrix<R>& x, const Matrix<R>& y,
                          const TolerancePolicy<R>& tol,
                          Matrix<R>* left_pinv_out = nullptr,
                          Matrix<R>* right_pinv_out = nullptr) {
    const std::size_t m = a_pinv.rows();
    const Matrix<R> eye = Matrix<R>::identity(m);
    const Matrix<R> ap_x = a_pinv * x;
    const Matrix<R> yh_ap = adjoint(y) * a_pinv;
    const Matrix<R> ap_x_p = pinv(ap_x, tol);
    const Matrix<R> yh_ap_p = pinv(yh_ap, tol);
    if (left_pinv_out) *left_pinv_out = ap_x_p;
    if (right_pinv_out) *right_pinv_out = yh_ap_p;
    return (eye - ap_x * ap_x_p) * a_pinv * (eye - yh_ap_p * yh_ap);
}

template <typename R>
void require_ranges(const ConditionReport<R>& rep, const char* who) {
    if (!rep.range_x_ok)
        throw precondition_error(std::string(who) + ": range(x) is not contained in range(a)");
    if (!rep.range_y_ok)
        throw precondition_error(std::string(who) + ": range(y) is not contained in range(a*)");
}

// a - x y* viewed as a formed difference. Cancellation leaves debris that
// scales with the operands, not with what survives of them, so every
// pseudoinverse of the difference uses a singular-value cutoff floored at
// rank_cutoff * (||a|| + ||x y*||). A difference that sits entirely below
// that floor is the zero matrix for all purposes.
template <typename R>
struct Perturbation {
    Matrix<R> matrix;
    R noise_floor;
    bool effectively_zero;
};

template <typename R>
Perturbation<R> form_perturbation(const Matrix<R>& a, const Matrix<R>& xy_star,
                                  const TolerancePolicy<R>& tol) {
    Perturbation<R> p{a - xy_star, R(0), false};
    p.noise_floor = tol.rank_cutoff(a.rows(), a.cols()) *
                    (frobenius_norm(a) + frobenius_norm(xy_star));
    p.effectively_zero = frobenius_norm(p.matrix) <= p.noise_floor;
    return p;
}

template <typename R>
Matrix<R> pinv_of_perturbation(const Perturbation<R>& p, const TolerancePolicy<R>& tol) {
    if (p.effectively_zero) return Matrix<R>(p.matrix.cols(), p.matrix.rows());
    const SvdResult<R> f = svd(p.matrix, "update");
    const R cutoff = std::max(
        tol.rank_cutoff(p.matrix.rows(), p.matrix.cols()) * f.sigma_max(), p.noise_floor);
    return pinv_from_svd(f, p.matrix.rows(), p.matrix.cols(), cutoff);
}

} // namespace detail

// Hypothesis report for the triple (a, x, y); a+ is computed once and
// reused by every residual.
template <typename R>
ConditionReport<R> check_conditions(const Matrix<R>& a, const Matrix<R>& x, const Matrix<R>& y,
                                    const TolerancePolicy<R>& tol = {}) {
    detail::require_update_shapes(a, x, y, "check_conditions");
    tol.validate();
    return detail::build_report(a, pinv(a, tol), x, y, tol);
}

// Rank route to the same range inclusions:
//   rank([a | x]) == rank(a)   iff range(x) inside range(a)
//   rank([a ; y*]) == rank(a)  iff range(y) inside range(a*)
template <typename R>
std::pair<bool, bool> check_rank_conditions(const Matrix<R>& a, const Matrix<R>& x,
                                            const Matrix<R>& y,
                                            const TolerancePolicy<R>& tol = {}) {
    detail::require_update_shapes(a, x, y, "check_rank_conditions");
    tol.validate();
    const std::size_t base = numerical_rank(a, tol);
    const bool cols_ok = numerical_rank(hcat(a, x), tol) == base;
    const bool rows_ok = numerical_rank(vcat(a, adjoint(y)), tol) == base;
    return {cols_ok, rows_ok};
}

// Core-inverse update. Requires both range inclusions and an invertible
// core I - y* a+ x.
template <typename R>
Matrix<R> update_pinv_smw(const Matrix<R>& a, const Matrix<R>& x, const Matrix<R>& y,
                          const TolerancePolicy<R>& tol = {}) {
    detail::require_update_shapes(a, x, y, "update_pinv_smw");
    tol.validate();
    const Matrix<R> ap = pinv(a, tol);
    const ConditionReport<R> rep = detail::build_report(a, ap, x, y, tol);
    detail::require_ranges(rep, "update_pinv_smw");
    if (!rep.smw_core_invertible)
        throw precondition_error("update_pinv_smw: core I - y* a+ x is numerically singular");
    return detail::smw_formula(ap, x, y);
}

// Projector-sandwich update, valid whenever x y* a+ x y* = x y*.
template <typename R>
Matrix<R> update_pinv_general(const Matrix<R>& a, const Matrix<R>& x, const Matrix<R>& y,
                              const TolerancePolicy<R>& tol = {}) {
    detail::require_update_shapes(a, x, y, "update_pinv_general");
    tol.validate();
    const Matrix<R> ap = pinv(a, tol);
    const ConditionReport<R> rep = detail::build_report(a, ap, x, y, tol);
    detail::require_ranges(rep, "update_pinv_general");
    if (!rep.inner_regular)
        throw precondition_error("update_pinv_general: x y* a+ x y* = x y* does not hold");
    return detail::general_formula(ap, x * adjoint(y), tol);
}

// Thin-factor update, valid under the stronger pair of identities
// x y* a+ x = x and y* a+ x y* = y*.
template <typename R>
Matrix<R> update_pinv_special(const Matrix<R>& a, const Matrix<R>& x, const Matrix<R>& y,
                              const TolerancePolicy<R>& tol = {}) {
    detail::require_update_shapes(a, x, y, "update_pinv_special");
    tol.validate();
    const Matrix<R> ap = pinv(a, tol);
    const ConditionReport<R> rep = detail::build_report(a, ap, x, y, tol);
    detail::require_ranges(rep, "update_pinv_special");
    if (!rep.special_pair)
        throw precondition_error(
            "update_pinv_special: the pair x y* a+ x = x, y* a+ x y* = y* does not hold");
    return detail::special_formula(ap, x, y, tol);
}

// Both directions of the equivalence "the projector-sandwich expression
// equals (a - x y*)+  iff  x y* a+ x y* = x y*", decided numerically:
// first element compares the expression against the SVD pseudoinverse,
// second reports the algebraic condition.
template <typename R>
std::pair<bool, bool> verify_converse_general(const Matrix<R>& a, const Matrix<R>& x,
                                              const Matrix<R>& y,
                                              const TolerancePolicy<R>& tol = {}) {
    detail::require_update_shapes(a, x, y, "verify_converse_general");
    tol.validate();
    const Matrix<R> ap = pinv(a, tol);
    const ConditionReport<R> rep = detail::build_report(a, ap, x, y, tol);
    detail::require_ranges(rep, "verify_converse_general");
    const Matrix<R> w = x * adjoint(y);
    const Matrix<R> expr = detail::general_formula(ap, w, tol);
    const Matrix<R> oracle = detail::pinv_of_perturbation(detail::form_perturbation(a, w, tol), tol);
    return {approx_equal(expr, oracle, tol), rep.inner_regular};
}

// Same equivalence for the thin-factor expression and the special pair.
template <typename R>
std::pair<bool, bool> verify_converse_special(const Matrix<R>& a, const Matrix<R>& x,
                                              const Matrix<R>& y,
                                              const TolerancePolicy<R>& tol = {}) {
    detail::require_update_shapes(a, x, y, "verify_converse_special");
    tol.validate();
    const Matrix<R> ap = pinv(a, tol);
    const ConditionReport<R> rep = detail::build_report(a, ap, x, y, tol);
    detail::require_ranges(rep, "verify_converse_special");
    const Matrix<R> expr = detail::special_formula(ap, x, y, tol);
    const Matrix<R> oracle = detail::pinv_of_perturbation(
        detail::form_perturbation(a, x * adjoint(y), tol), tol);
    return {approx_equal(expr, oracle, tol), rep.special_pair};
}

namespace detail {

template <typename R>
void compute_via(Formula f, UpdateResult<R>& out, const Matrix<R>& x, const Matrix<R>& y,
                 const Perturbation<R>& p, const TolerancePolicy<R>& tol) {
    switch (f) {
        case Formula::smw:
            out.pseudoinverse = smw_formula(out.a_pinv, x, y);
            break;
        case Formula::special: {
            Matrix<R> l, r;
            out.pseudoinverse = special_formula(out.a_pinv, x, y, tol, &l, &r);
            out.left_factor_pinv = std::move(l);
            out.right_factor_pinv = std::move(r);
            break;
        }
        case Formula::general: {
            Matrix<R> l, r;
            out.pseudoinverse = general_formula(out.a_pinv, out.xy_star, tol, &l, &r);
            out.left_factor_pinv = std::move(l);
            out.right_factor_pinv = std::move(r);
            break;
        }
        case Formula::oracle_fallback:
            out.pseudoinverse = pinv_of_perturbation(p, tol);
            break;
    }
    out.formula_used = f;
    out.penrose = penrose_residuals(p.matrix, out.pseudoinverse);
}

} // namespace detail

// Dispatcher. Preference order smw -> special -> general -> direct SVD:
// the cheapest hypothesis that holds wins (one n x n solve, then thin-factor
// pseudoinverses, then m x m ones). Results from a formula route are gated
// on their own Penrose residuals and escalated to the SVD if they fail.
//
// verify          also measure the deviation against the SVD pseudoinverse
// require_formula refuse to fall back: throw when no formula hypothesis holds
template <typename R>
UpdateResult<R> update(const Matrix<R>& a, const Matrix<R>& x, const Matrix<R>& y,
                       const TolerancePolicy<R>& tol = {}, bool verify = false,
                       bool require_formula = false) {
    detail::require_update_shapes(a, x, y, "update");
    tol.validate();
    UpdateResult<R> out;
    out.a_pinv = pinv(a, tol);
    out.xy_star = x * adjoint(y);
    out.report = detail::build_report(a, out.a_pinv, x, y, tol);
    const auto perturbation = detail::form_perturbation(a, out.xy_star, tol);

    if (require_formula)
        detail::require_ranges(out.report, "update");

    if (perturbation.effectively_zero) {
        // the perturbation cancels a down to rounding debris: the
        // pseudoinverse of the (numerically) zero matrix is exactly zero,
        // and no formula or decomposition should be asked to invert noise
        out.formula_used = Formula::oracle_fallback;
        out.pseudoinverse = Matrix<R>(a.cols(), a.rows());
        out.penrose = PenroseResiduals<R>{R(0), R(0), R(0), R(0)};
        out.note = "x y* cancels a at rounding level; the pseudoinverse is the zero matrix";
        if (verify) out.oracle_deviation = R(0);
        return out;
    }

    Formula choice = Formula::oracle_fallback;
    if (!out.report.range_x_ok || !out.report.range_y_ok) {
        out.note = "range inclusion violated; computed directly by SVD";
    } else if (out.report.smw_core_invertible) {
        choice = Formula::smw;
    } else if (out.report.special_pair) {
        choice = Formula::special;
    } else if (out.report.inner_regular) {
        choice = Formula::general;
    } else {
        if (require_formula)
            throw precondition_error("update: no update-formula hypothesis holds");
        out.note = "no update-formula hypothesis holds; computed directly by SVD";
    }

    detail::compute_via(choice, out, x, y, perturbation, tol);
    if (choice != Formula::oracle_fallback && out.penrose.max() > R(10) * tol.eq_rtol) {
        out.escalated = true;
        out.note = "formula result failed the Penrose gate; recomputed directly by SVD";
        detail::compute_via(Formula::oracle_fallback, out, x, y, perturbation, tol);
    }
    if (verify)
        out.oracle_deviation = relative_deviation(
            out.pseudoinverse, detail::pinv_of_perturbation(perturbation, tol));
    return out;
}

// Forced single-formula variant (no dispatch, no fallback): throws
// precondition_error when the requested formula's hypotheses fail.
template <typename R>
UpdateResult<R> update_with_formula(const Matrix<R>& a, const Matrix<R>& x, const Matrix<R>& y,
                                    Formula formula, const TolerancePolicy<R>& tol = {},
                                    bool verify = false) {
    detail::require_update_shapes(a, x, y, "update_with_formula");
    tol.validate();
    UpdateResult<R> out;
    out.a_pinv = pinv(a, tol);
    out.xy_star = x * adjoint(y);
    out.report = detail::build_report(a, out.a_pinv, x, y, tol);
    const auto perturbation = detail::form_perturbation(a, out.xy_star, tol);

    if (formula != Formula::oracle_fallback) {
        detail::require_ranges(out.report, "update_with_formula");
        if (formula == Formula::smw && !out.report.smw_core_invertible)
            throw precondition_error(
                "update_with_formula: core I - y* a+ x is numerically singular");
        if (formula == Formula::special && !out.report.special_pair)
            throw precondition_error(
                "update_with_formula: the special pair of identities does not hold");
        if (formula == Formula::general && !out.report.inner_regular)
            throw precondition_error(
                "update_with_formula: x y* a+ x y* = x y* does not hold");
    }
    detail::compute_via(formula, out, x, y, perturbation, tol);
    if (verify)
        out.oracle_deviation = relative_deviation(
            out.pseudoinverse, detail::pinv_of_perturbation(perturbation, tol));
    return out;
}

} // namespace woodbury
