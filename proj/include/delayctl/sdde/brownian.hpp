// SPDX-License-Identifier: MIT
#pragma once

#include "delayctl/core/errors.hpp"
#include "delayctl/core/numerics.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>

namespace delayctl {

/// Seeded Wiener increments for one path.
///
/// The stream depends only on (seed, path index), so paths can be simulated
/// in any order or concurrently. With substeps = k each increment is the sum
/// of k draws at step/k, which couples a coarse driver to a fine one built
/// with the same (seed, path) at step/k.
class BrownianDriver {
public:
    BrownianDriver(std::uint64_t seed, std::uint64_t path, int dim, double step, int substeps = 1)
        : seed_(seed), path_(path), dim_(dim), step_(step), substeps_(substeps),
          engine_(mix64(seed ^ mix64(path + 0x632be59bd9b4e019ULL))),
          sub_scale_(std::sqrt(step / substeps)) {
        if (dim < 1) throw ValidationError("BrownianDriver: dimension must be positive");
        if (!(step > 0.0)) throw ValidationError("BrownianDriver: step must be positive");
        if (substeps < 1) throw ValidationError("BrownianDriver: substeps must be >= 1");
    }

    /// Next increment, distributed N(0, step I_q).
    [[nodiscard]] Eigen::VectorXd next() {
        Eigen::VectorXd dw = Eigen::VectorXd::Zero(dim_);
        for (int s = 0; s < substeps_; ++s)
            for (int i = 0; i < dim_; ++i) dw[i] += sub_scale_ * normal_(engine_);
        return dw;
    }

    /// Standard normal draw from the same stream (no step scaling).
    [[nodiscard]] double standard_normal() { return normal_(engine_); }

    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
    [[nodiscard]] std::uint64_t path() const noexcept { return path_; }
    [[nodiscard]] int dim() const noexcept { return dim_; }
    [[nodiscard]] double step() const noexcept { return step_; }
    [[nodiscard]] int substeps() const noexcept { return substeps_; }

private:
    std::uint64_t seed_;
    std::uint64_t path_;
    int dim_;
    double step_;
    int substeps_;
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    double sub_scale_;
};

}  // namespace delayctl
