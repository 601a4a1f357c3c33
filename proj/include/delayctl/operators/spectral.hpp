// SPDX-License-Identifier: MIT
#pragma once

#include "delayctl/core/errors.hpp"
#include "delayctl/core/grid.hpp"
#include "delayctl/operators/lifted_ops.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <functional>

namespace delayctl {

// ---------------------------------------------------------------------------
// Flat coordinates: [head; tail(xi_0); ...; tail(xi_m)], length n + n(m+1).
// The X inner product becomes x^T G y with G = diag(I_n, w_0 I_n, ..., w_m I_n).
// ---------------------------------------------------------------------------

[[nodiscard]] inline int flat_size(const SegmentGrid& g, int n) { return n * (g.size() + 1); }

[[nodiscard]] inline Eigen::VectorXd to_flat(const LiftedState& x) {
    const int n = x.dim();
    Eigen::VectorXd v(flat_size(x.grid(), n));
    v.head(n) = x.head();
    v.tail(n * x.grid().size()) = x.tail().values().reshaped();
    return v;
}

[[nodiscard]] inline LiftedState from_flat(const Eigen::VectorXd& v, const SegmentGrid& g, int n) {
    if (v.size() != flat_size(g, n)) throw DimensionError("from_flat: length mismatch");
    Eigen::MatrixXd tail = v.tail(n * g.size()).reshaped(n, g.size());
    return LiftedState(v.head(n), Segment(g, std::move(tail)));
}

/// Diagonal of G.
[[nodiscard]] inline Eigen::VectorXd flat_weights(const SegmentGrid& g, int n) {
    Eigen::VectorXd w(flat_size(g, n));
    w.head(n).setOnes();
    for (int j = 0; j < g.size(); ++j) w.segment(n * (j + 1), n).setConstant(g.weight(j));
    return w;
}

struct OperatorMatrix {
    SegmentGrid grid;
    int n = 1;
    Eigen::MatrixXd matrix;
    bool g_self_adjoint = false;

    [[nodiscard]] LiftedState apply(const LiftedState& x) const {
        return from_flat(matrix * to_flat(x), grid, n);
    }

    /// Max relative asymmetry of G M; the flag promises this is below 1e-10.
    [[nodiscard]] double g_asymmetry() const {
        const Eigen::MatrixXd gm = flat_weights(grid, n).asDiagonal() * matrix;
        return (gm - gm.transpose()).cwiseAbs().maxCoeff() / std::max(gm.cwiseAbs().maxCoeff(), 1e-300);
    }
};

/// Matrix of a linear map on lifted states, assembled column by column.
[[nodiscard]] inline Eigen::MatrixXd assemble_matrix(const SegmentGrid& g, int n,
                                                     const std::function<LiftedState(const LiftedState&)>& op) {
    const int N = flat_size(g, n);
    Eigen::MatrixXd M(N, N);
    Eigen::VectorXd e = Eigen::VectorXd::Zero(N);
    for (int k = 0; k < N; ++k) {
        e[k] = 1.0;
        M.col(k) = to_flat(op(from_flat(e, g, n)));
        e[k] = 0.0;
    }
    return M;
}

[[nodiscard]] inline OperatorMatrix assemble_Atilde_inv(const SegmentGrid& g, int n) {
    return {g, n, assemble_matrix(g, n, [](const LiftedState& x) { return apply_Atilde_inv(x); }), false};
}

/// B = (A~^{-1})^* A~^{-1}, adjoint taken in the G inner product: B = G^{-1} M^T G M.
[[nodiscard]] inline OperatorMatrix assemble_B(const SegmentGrid& g, int n) {
    const Eigen::MatrixXd M = assemble_Atilde_inv(g, n).matrix;
    const Eigen::VectorXd w = flat_weights(g, n);
    const Eigen::MatrixXd GM = w.asDiagonal() * M;
    Eigen::MatrixXd B = w.cwiseInverse().asDiagonal() * (M.transpose() * GM);
    return {g, n, std::move(B), true};
}

enum class Projection { P, Q };

/// Eigenpairs of B, G-orthonormal, eigenvalues descending.
class SpectralDecomposition {
public:
    SpectralDecomposition(SegmentGrid grid, int n, Eigen::VectorXd eigenvalues, Eigen::MatrixXd eigenvectors)
        : grid_(std::move(grid)), n_(n), values_(std::move(eigenvalues)), vectors_(std::move(eigenvectors)),
          weights_(flat_weights(grid_, n_)) {}

    [[nodiscard]] int dim() const noexcept { return static_cast<int>(values_.size()); }
    [[nodiscard]] const SegmentGrid& grid() const noexcept { return grid_; }
    [[nodiscard]] int state_dim() const noexcept { return n_; }
    [[nodiscard]] const Eigen::VectorXd& eigenvalues() const noexcept { return values_; }
    [[nodiscard]] const Eigen::MatrixXd& eigenvectors() const noexcept { return vectors_; }
    [[nodiscard]] const Eigen::VectorXd& weights() const noexcept { return weights_; }

    [[nodiscard]] double largest() const { return values_[0]; }
    [[nodiscard]] double smallest() const { return values_[dim() - 1]; }

    /// f_i as a lifted state (0-based index).
    [[nodiscard]] LiftedState eigenvector(int i) const { return from_flat(vectors_.col(i), grid_, n_); }

    /// Eigenvalues at or below tol * lambda_max. On the nodal grid this is
    /// exactly n: A~^{-1} maps into the codimension-n subspace D(A~), so B
    /// annihilates the grid-scale sawtooth (head 0, tail (-1)^{m-j}).
    [[nodiscard]] int null_dimension(double tol = 1e-12) const {
        int k = 0;
        for (int i = 0; i < dim(); ++i)
            if (values_[i] <= tol * largest()) ++k;
        return k;
    }

    /// Number of eigenvalues above tol * lambda_max.
    [[nodiscard]] int positive_dimension(double tol = 1e-12) const { return dim() - null_dimension(tol); }

    /// e_i = f_i / sqrt(lambda_i), orthonormal for the |.|_{-1} inner product.
    [[nodiscard]] LiftedState rescaled(int i) const {
        if (!(values_[i] > 1e-12 * largest()))
            throw NumericalError("rescaled: eigenvalue " + std::to_string(i) + " is numerically zero");
        return from_flat(vectors_.col(i) / std::sqrt(values_[i]), grid_, n_);
    }

    /// P_N x = sum_{i<N} f_i <f_i, x>_G, Q_N = I - P_N.
    [[nodiscard]] LiftedState project(const LiftedState& x, int N, Projection which) const {
        if (N < 1 || N > dim()) throw ValidationError("project: N out of range [1, " + std::to_string(dim()) + "]");
        if (x.grid() != grid_ || x.dim() != n_) throw DimensionError("project: grid mismatch");
        const Eigen::VectorXd v = to_flat(x);
        const Eigen::VectorXd coeff = vectors_.leftCols(N).transpose() * weights_.cwiseProduct(v);
        Eigen::VectorXd p = vectors_.leftCols(N) * coeff;
        return from_flat(which == Projection::P ? p : Eigen::VectorXd(v - p), grid_, n_);
    }

    /// |B Q_N| in L(X); equals lambda_{N+1}, zero once N reaches the dimension.
    [[nodiscard]] double bq_norm(int N) const {
        if (N < 0 || N > dim()) throw ValidationError("bq_norm: N out of range");
        return N == dim() ? 0.0 : values_[N];
    }

    /// sum_i lambda_i f_i <f_i, .>_G as a matrix.
    [[nodiscard]] Eigen::MatrixXd reconstruct() const {
        return vectors_ * values_.asDiagonal() * vectors_.transpose() * weights_.asDiagonal();
    }

private:
    SegmentGrid grid_;
    int n_;
    Eigen::VectorXd values_;
    Eigen::MatrixXd vectors_;
    Eigen::VectorXd weights_;
};

/// Solves the symmetrized problem G^{1/2} B G^{-1/2} v = lambda v and maps back
/// with f = G^{-1/2} v, which makes the f_i G-orthonormal.
[[nodiscard]] inline SpectralDecomposition spectral_B(const OperatorMatrix& B) {
    const Eigen::VectorXd w = flat_weights(B.grid, B.n);
    const Eigen::VectorXd sw = w.cwiseSqrt();
    Eigen::MatrixXd S = sw.asDiagonal() * B.matrix * sw.cwiseInverse().asDiagonal();
    const double asym = (S - S.transpose()).cwiseAbs().maxCoeff();
    const double scale = S.cwiseAbs().maxCoeff();
    if (!(asym <= 1e-9 * scale))
        throw NumericalError("spectral_B: operator is not G-self-adjoint (asymmetry " + std::to_string(asym / scale) + ")");
    S = 0.5 * (S + S.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
    if (es.info() != Eigen::Success) throw NumericalError("spectral_B: eigensolver failed");
    const int N = static_cast<int>(S.rows());
    Eigen::VectorXd values(N);
    Eigen::MatrixXd vectors(N, N);
    for (int i = 0; i < N; ++i) {
        values[i] = es.eigenvalues()[N - 1 - i];
        vectors.col(i) = sw.cwiseInverse().cwiseProduct(es.eigenvectors().col(N - 1 - i));
    }
    return SpectralDecomposition(B.grid, B.n, std::move(values), std::move(vectors));
}

/// |A~^{-1}| in L(X), i.e. sqrt(lambda_max(B)).
[[nodiscard]] inline double atilde_inv_norm(const SpectralDecomposition& spec) { return std::sqrt(spec.largest()); }

}  // namespace delayctl
