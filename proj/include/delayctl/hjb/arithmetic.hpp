// SPDX-License-Identifier: MIT
#pragma once

#include "delayctl/core/errors.hpp"

#include <cmath>
#include <limits>

namespace delayctl {

/// Discount threshold above which the moment bound E|Y(t)|^m <= C (1+|x|^m) e^{lambda t}
/// makes the cost finite:
///   0                        if m = 0
///   C m + C^2 m / 2          if 0 < m < 2
///   C m + C^2 m (m - 1) / 2  if m >= 2
[[nodiscard]] inline double rho_zero(double C, double m) {
    if (!(C >= 0.0) || !(m >= 0.0)) throw ValidationError("rho_zero: C and m must be non-negative");
    if (m == 0.0) return 0.0;
    if (m < 2.0) return C * m + 0.5 * C * C * m;
    return C * m + 0.5 * C * C * m * (m - 1.0);
}

enum class GrowthCase { Linear, Quadratic };

/// Supremum of the growth exponents k admitted by the uniqueness class.
/// The admissible set is open: every k < bound qualifies.
struct GrowthBound {
    double bound = 0.0;
    GrowthCase active = GrowthCase::Linear;
};

[[nodiscard]] inline GrowthBound admissible_growth_k(double rho, double C) {
    if (!(rho > 0.0) || !(C > 0.0)) throw ValidationError("admissible_growth_k: rho and C must be positive");
    const double ratio = rho / (C + 0.5 * C * C);
    if (ratio <= 2.0) return {ratio, GrowthCase::Linear};
    // C k + C^2 k (k - 1) / 2 < rho  <=>  (C^2/2) k^2 + (C - C^2/2) k - rho < 0
    const double a = 0.5 * C * C;
    const double b = C - 0.5 * C * C;
    const double root = (-b + std::sqrt(b * b + 4.0 * a * rho)) / (2.0 * a);
    return {root, GrowthCase::Quadratic};
}

/// Sufficient discount for Lipschitz continuity of V in |.|_{-1}: C + C^2 |B| / 2.
[[nodiscard]] inline double lipschitz_discount_threshold(double C, double b_norm) {
    if (!(C >= 0.0) || !(b_norm >= 0.0))
        throw ValidationError("lipschitz_discount_threshold: arguments must be non-negative");
    return C + 0.5 * C * C * b_norm;
}

/// Horizon T after which the discounted tail of the cost integral is at most tol:
/// prefactor (1+|x|^m) e^{-(rho-lambda) T} / (rho - lambda) <= tol, lambda = (rho+rho0)/2.
[[nodiscard]] inline double truncation_horizon(double rho, double rho0, double prefactor, double m, double norm_x,
                                               double tol) {
    if (!(rho > rho0))
        throw InadmissibleDiscountError("truncation_horizon: rho = " + std::to_string(rho) +
                                        " does not exceed rho_0 = " + std::to_string(rho0));
    if (!(tol > 0.0)) throw ValidationError("truncation_horizon: tol must be positive");
    const double lambda = 0.5 * (rho + rho0);
    const double gap = rho - lambda;
    const double full = prefactor * (1.0 + std::pow(norm_x, m)) / gap;
    if (full <= tol) return 0.0;
    return std::log(full / tol) / gap;
}

}  // namespace delayctl
