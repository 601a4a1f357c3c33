// SPDX-License-Identifier: MIT
#pragma once

#include "delayctl/core/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <span>
#include <thread>
#include <vector>

namespace delayctl {

/// Gauss-Hermite rule for E[f(xi)], xi ~ N(0, 1) (probabilists' weight).
struct GaussHermite {
    std::vector<double> nodes;
    std::vector<double> weights;  // sum to 1
};

/// Golub-Welsch: eigen-decomposition of the Jacobi matrix of He_k.
[[nodiscard]] inline GaussHermite gauss_hermite(int points) {
    if (points < 1) throw ValidationError("gauss_hermite: need at least one point");
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(points, points);
    for (int k = 1; k < points; ++k) {
        jacobi(k, k - 1) = std::sqrt(static_cast<double>(k));
        jacobi(k - 1, k) = jacobi(k, k - 1);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
    GaussHermite gh;
    for (int i = 0; i < points; ++i) {
        double x = es.eigenvalues()[i];
        if (std::abs(x) < 1e-14) x = 0.0;
        gh.nodes.push_back(x);
        gh.weights.push_back(es.eigenvectors()(0, i) * es.eigenvectors()(0, i));
    }
    return gh;
}

/// Neumaier-compensated sum, evaluated in index order.
[[nodiscard]] inline double compensated_sum(std::span<const double> xs) {
    double sum = 0.0, comp = 0.0;
    for (double x : xs) {
        const double t = sum + x;
        if (std::abs(sum) >= std::abs(x))
            comp += (sum - t) + x;
        else
            comp += (x - t) + sum;
        sum = t;
    }
    return sum + comp;
}

struct SampleStats {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t count = 0;
};

[[nodiscard]] inline SampleStats sample_stats(std::span<const double> xs) {
    SampleStats s;
    s.count = xs.size();
    if (xs.empty()) return s;
    if (std::all_of(xs.begin(), xs.end(), [&](double v) { return v == xs.front(); })) {
        s.mean = xs.front();
        return s;
    }
    s.mean = compensated_sum(xs) / static_cast<double>(xs.size());
    if (xs.size() < 2) return s;
    std::vector<double> sq(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) sq[i] = (xs[i] - s.mean) * (xs[i] - s.mean);
    const double var = compensated_sum(sq) / static_cast<double>(xs.size() - 1);
    s.std_error = std::sqrt(var / static_cast<double>(xs.size()));
    return s;
}

/// Worker count from DELAYCTL_THREADS (default 1).
[[nodiscard]] inline unsigned thread_count() {
    if (const char* env = std::getenv("DELAYCTL_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<unsigned>(std::min<long>(v, 256));
    }
    return 1;
}

/// Runs body(i) for i in [0, count). Each index is visited exactly once; the
/// body must only write to storage owned by its index.
template <typename Body>
void parallel_for(std::size_t count, Body&& body) {
    const unsigned workers = std::min<std::size_t>(thread_count(), std::max<std::size_t>(count, 1));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < count; i += workers) body(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

/// SplitMix64 finalizer; used to derive per-path stream seeds.
[[nodiscard]] constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace delayctl
