#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <optional>

#include "woodbury/errors.hpp"

namespace woodbury {

// Numerical semantics for every approximate decision the library makes.
//
//   rank_rtol  relative singular-value cutoff; sigma <= rank_rtol * sigma_max
//              is treated as zero. Unset means 64 * max(rows, cols) * eps:
//              matrices formed as differences a - x y* carry cancellation
//              debris up to ~20 eps * sigma_max in their collapsed
//              directions, so a bare max(rows, cols) * eps cutoff can keep a
//              noise direction and corrupt the pseudoinverse. The factor 64
//              clears that debris while staying far below anything the
//              cond_max ceiling still treats as regular.
//   eq_rtol    relative Frobenius threshold for matrix equality and for all
//              hypothesis residuals.
//   cond_max   condition-number ceiling; a square matrix at or above it is
//              treated as numerically singular.
template <typename R = double>
struct TolerancePolicy {
    static constexpr R default_rank_safety = R(64);

    std::optional<R> rank_rtol{};
    R eq_rtol = R(1e-10);
    R cond_max = R(1e12);

    void validate() const {
        if (rank_rtol && (*rank_rtol < R(0) || *rank_rtol >= R(1)))
            throw precondition_error("TolerancePolicy: rank_rtol must lie in [0, 1)");
        if (eq_rtol < R(0) || eq_rtol >= R(1))
            throw precondition_error("TolerancePolicy: eq_rtol must lie in [0, 1)");
        if (!(cond_max > R(1)))
            throw precondition_error("TolerancePolicy: cond_max must exceed 1");
    }

    // Relative cutoff used for a rows x cols matrix.
    R rank_cutoff(std::size_t rows, std::size_t cols) const {
        if (rank_rtol) return *rank_rtol;
        const auto dim = static_cast<R>(std::max<std::size_t>({rows, cols, 1}));
        return default_rank_safety * dim * std::numeric_limits<R>::epsilon();
    }
};

} // namespace woodbury
