// SPDX-License-Identifier: MIT
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace delayctl {

/// Input rejected before any numerics ran (bad shapes, bad parameters).
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Operands live on different grids or have different state dimensions.
class DimensionError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// A state handed to an operator is outside the operator's domain.
class DomainError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// Something went wrong while computing (NaN, divergence, non-convergence).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Simulation produced a non-finite value.
class NonFiniteStateError : public NumericalError {
public:
    NonFiniteStateError(std::size_t step, const std::string& where)
        : NumericalError(where + ": non-finite state at step " + std::to_string(step)),
          step_(step) {}

    [[nodiscard]] std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

/// Discount too small for the growth estimate to apply (rho <= rho_0).
class InadmissibleDiscountError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Fixed-point iteration hit its iteration cap.
class ConvergenceError : public NumericalError {
public:
    ConvergenceError(const std::string& what, double residual)
        : NumericalError(what + " (residual " + std::to_string(residual) + ")"),
          residual_(residual) {}

    [[nodiscard]] double residual() const noexcept { return residual_; }

private:
    double residual_;
};

}  // namespace delayctl
