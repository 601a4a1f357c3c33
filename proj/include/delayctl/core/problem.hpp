// SPDX-License-Identifier: MIT
#pragma once

#include "delayctl/core/errors.hpp"
#include "delayctl/core/grid.hpp"
#include "delayctl/core/kernel.hpp"

#include <Eigen/Dense>

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace delayctl {

/// Constants the problem datum asserts rather than the library estimating them.
struct DeclaredConstants {
    double C = 1.0;       // linear growth of b0 and sigma0
    double L = 1.0;       // Lipschitz constant of b0 and sigma0
    double K = 1.0;       // growth constant of the running cost
    double m_cost = 1.0;  // growth exponent of the running cost
    std::optional<double> lambda_R;  // ellipticity floor of sigma0 sigma0^T, when declared
    bool cost_lipschitz = false;     // l(., u) globally Lipschitz, uniformly in u
    double moment_constant = 1.0;    // C_lambda in the moment bound E|Y(t)|^m <= C_lambda (1+|x|^m) e^{lambda t}
    double audit_radius = 10.0;      // sampling radius for hypothesis audits
};

using DriftFn = std::function<Eigen::VectorXd(const Eigen::VectorXd& x0, const Eigen::VectorXd& delayed,
                                              const Eigen::VectorXd& u)>;
using DiffusionFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd& x0, const Eigen::VectorXd& delayed,
                                                  const Eigen::VectorXd& u)>;
using CostFn = std::function<double(const Eigen::VectorXd& x0, const Eigen::VectorXd& u)>;

struct Dynamics {
    DriftFn drift;          // b0 : R^n x R^h x U -> R^n
    DiffusionFn diffusion;  // sigma0 : R^n x R^h x U -> M^{n x q}
    CostFn cost;            // l : R^n x U -> R
    bool diffusion_depends_on_control = true;
    bool deterministic = false;  // sigma0 == 0 identically
};

/// Complete datum of a delayed control problem.
struct ProblemSpec {
    int n = 1;  // state dimension
    int q = 1;  // noise dimension
    int p = 1;  // control dimension
    SegmentGrid grid{1.0, 1};
    Kernel a1 = Kernel::zero(SegmentGrid{1.0, 1}, 1, 1);
    Kernel a2 = Kernel::zero(SegmentGrid{1.0, 1}, 1, 1);
    std::string family;
    std::map<std::string, double> parameters;  // resolved model parameters, for manifests
    Dynamics dynamics;
    double rho = 1.0;
    std::vector<Eigen::VectorXd> controls;
    DeclaredConstants constants;
    std::vector<std::string> state_names;  // optional labels for the head components

    /// Label of head component i: the declared name, else "y" (n = 1) or "y<i+1>".
    [[nodiscard]] std::string state_name(int i) const {
        if (i < static_cast<int>(state_names.size())) return state_names[i];
        return n == 1 ? std::string("y") : "y" + std::to_string(i + 1);
    }

    [[nodiscard]] double delay() const noexcept { return grid.delay(); }

    [[nodiscard]] Eigen::VectorXd drift(const Eigen::VectorXd& x0, const Eigen::VectorXd& i1,
                                        const Eigen::VectorXd& u) const {
        return dynamics.drift(x0, i1, u);
    }
    [[nodiscard]] Eigen::MatrixXd diffusion(const Eigen::VectorXd& x0, const Eigen::VectorXd& i2,
                                            const Eigen::VectorXd& u) const {
        return dynamics.diffusion(x0, i2, u);
    }
    [[nodiscard]] double cost(const Eigen::VectorXd& x0, const Eigen::VectorXd& u) const {
        return dynamics.cost(x0, u);
    }

    /// Copy with kernels re-tabulated on another grid of the same delay.
    [[nodiscard]] ProblemSpec on_grid(const SegmentGrid& g) const {
        ProblemSpec s = *this;
        s.grid = g;
        s.a1 = a1.on(g);
        s.a2 = a2.on(g);
        return s;
    }

    void validate() const {
        if (n < 1 || q < 1 || p < 1) throw ValidationError("ProblemSpec: dimensions must be positive");
        if (!(rho > 0.0)) throw ValidationError("ProblemSpec: discount rho must be positive");
        if (controls.empty()) throw ValidationError("ProblemSpec: control set is empty");
        for (const auto& u : controls)
            if (u.size() != p) throw DimensionError("ProblemSpec: control dimension mismatch");
        if (!dynamics.drift || !dynamics.diffusion || !dynamics.cost)
            throw ValidationError("ProblemSpec: dynamics incomplete");
        for (const Kernel* a : {&a1, &a2}) {
            if (a->grid() != grid) throw DimensionError("ProblemSpec: kernel grid differs from problem grid");
            if (a->cols() != n) throw DimensionError("ProblemSpec: kernel columns must equal n");
            const auto report = validate_kernel(*a);
            if (!report.ok) throw ValidationError("ProblemSpec: kernel rejected: " + report.violations.front());
        }
    }
};

}  // namespace delayctl
