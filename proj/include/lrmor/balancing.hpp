// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Cholesky>

#include "lrmor/equations.hpp"

namespace lrmor
{

enum class BalancingVariant
{
    positive_real,
    bounded_real,
    lqg
};

/// Rewrites the Riccati equations of positive-real, bounded-real or LQG
/// balancing as
///
///     Ã P Eᵀ + E P Ãᵀ + B̃ B̃ᵀ + sign · E P C̃ᵀ C̃ P Eᵀ = 0
///     Ãᵀ Q E + Eᵀ Q Ã + C̃ᵀ C̃ + sign · Eᵀ Q B̃ B̃ᵀ Q E = 0
///
/// with Ã = A + U Vᵀ held as a low-rank update of `system`.
template <typename Scalar>
struct BalancingTransform
{
    BalancingVariant variant = BalancingVariant::lqg;
    /// E, A unchanged; B̃, C̃ in place of B, C; U, V set with have_UV; D original.
    LtiSystem<Scalar> system;
    /// Upper Cholesky factors of the output-side (p×p) and input-side (m×m) matrices.
    Matrix<Scalar> R;
    Matrix<Scalar> L;
    /// +1 for positive-real and bounded-real, −1 for LQG.
    int quadratic_sign = -1;
};

namespace detail
{

template <typename Scalar>
Matrix<Scalar> upper_cholesky(const Matrix<Scalar>& S, const char* what)
{
    const Matrix<Scalar> sym = Scalar(0.5) * (S + S.transpose());
    Eigen::LLT<Matrix<Scalar>> llt(sym);
    if (llt.info() != Eigen::Success)
    {
        throw ConfigurationError(std::string(what) + " is not symmetric positive definite");
    }
    const Matrix<Scalar> U = llt.matrixU();
    const Scalar dmin = U.diagonal().cwiseAbs().minCoeff();
    const Scalar dmax = U.diagonal().cwiseAbs().maxCoeff();
    if (!(dmin > std::sqrt(Eigen::NumTraits<Scalar>::epsilon()) * dmax))
    {
        throw ConfigurationError(std::string(what) + " is numerically singular");
    }
    return U;
}

/// X R⁻¹ for upper triangular R.
template <typename Scalar>
Matrix<Scalar> right_solve(const Matrix<Scalar>& X, const Matrix<Scalar>& R)
{
    return R.transpose().template triangularView<Eigen::Lower>().solve(X.transpose()).transpose();
}

/// R⁻ᵀ X for upper triangular R.
template <typename Scalar>
Matrix<Scalar> left_solve_t(const Matrix<Scalar>& R, const Matrix<Scalar>& X)
{
    return R.transpose().template triangularView<Eigen::Lower>().solve(X);
}

template <typename Scalar>
LtiSystem<Scalar> with_update(LtiSystem<Scalar> sys, Matrix<Scalar> B, Matrix<Scalar> C, Matrix<Scalar> U,
                              Matrix<Scalar> V)
{
    sys.B = std::move(B);
    sys.C = std::move(C);
    sys.have_UV = true;
    sys.U = std::move(U);
    sys.V = std::move(V);
    return sys;
}

} // namespace detail

/// Positive-real balancing: RᵀR = D + Dᵀ, B̃ = B R⁻¹, C̃ = R⁻ᵀ C, U = −B̃, Vᵀ = C̃.
template <typename Scalar>
BalancingTransform<Scalar> pr_transform(const LtiSystem<Scalar>& sys)
{
    const Index m = sys.inputs();
    detail::require(sys.outputs() == m, "pr_transform: positive-real systems are square (p = m)");
    detail::require(!sys.have_UV, "pr_transform: system already carries a low-rank update");
    const Matrix<Scalar> D = sys.feedthrough();
    BalancingTransform<Scalar> t;
    t.variant = BalancingVariant::positive_real;
    t.quadratic_sign = +1;
    t.R = detail::upper_cholesky<Scalar>(D + D.transpose(), "D + Dᵀ");
    t.L = t.R;
    Matrix<Scalar> Bt = detail::right_solve<Scalar>(sys.B, t.R);
    Matrix<Scalar> Ct = detail::left_solve_t<Scalar>(t.R, sys.C);
    Matrix<Scalar> U = -Bt;
    Matrix<Scalar> V = Ct.transpose();
    t.system = detail::with_update(sys, std::move(Bt), std::move(Ct), std::move(U), std::move(V));
    return t;
}

namespace detail
{

template <typename Scalar>
BalancingTransform<Scalar> gain_transform(const LtiSystem<Scalar>& sys, BalancingVariant variant)
{
    detail::require(!sys.have_UV, "balancing transform: system already carries a low-rank update");
    const Index m = sys.inputs();
    const Index p = sys.outputs();
    const Matrix<Scalar> D = sys.feedthrough();
    const Scalar s = variant == BalancingVariant::bounded_real ? Scalar(-1) : Scalar(1);
    const Matrix<Scalar> outer = Matrix<Scalar>::Identity(p, p) + s * D * D.transpose();
    const Matrix<Scalar> inner = Matrix<Scalar>::Identity(m, m) + s * D.transpose() * D;

    BalancingTransform<Scalar> t;
    t.variant = variant;
    t.quadratic_sign = variant == BalancingVariant::bounded_real ? +1 : -1;
    const char* what_o = variant == BalancingVariant::bounded_real ? "I − D Dᵀ" : "I + D Dᵀ";
    const char* what_i = variant == BalancingVariant::bounded_real ? "I − Dᵀ D" : "I + Dᵀ D";
    t.R = upper_cholesky<Scalar>(outer, what_o);
    t.L = upper_cholesky<Scalar>(inner, what_i);

    Matrix<Scalar> Bt = right_solve<Scalar>(sys.B, t.L);
    Matrix<Scalar> Ct = left_solve_t<Scalar>(t.R, sys.C);
    Matrix<Scalar> U;
    Matrix<Scalar> V;
    if (D.isZero(0))
    {
        U.resize(sys.order(), 0);
        V.resize(sys.order(), 0);
    }
    else
    {
        // Vᵀ = outer⁻¹ C, solved with the Cholesky factor.
        const Matrix<Scalar> Vt = t.R.template triangularView<Eigen::Upper>().solve(Ct);
        U = -s * sys.B * D.transpose();
        V = Vt.transpose();
    }
    return {t.variant, with_update(sys, std::move(Bt), std::move(Ct), std::move(U), std::move(V)), t.R, t.L,
            t.quadratic_sign};
}

} // namespace detail

/// Bounded-real balancing: RᵀR = I − DDᵀ, LᵀL = I − DᵀD, B̃ = B L⁻¹, C̃ = R⁻ᵀ C,
/// U = B Dᵀ, Vᵀ = (I − DDᵀ)⁻¹ C. Requires ‖D‖₂ < 1.
template <typename Scalar>
BalancingTransform<Scalar> br_transform(const LtiSystem<Scalar>& sys)
{
    return detail::gain_transform(sys, BalancingVariant::bounded_real);
}

/// LQG balancing: RᵀR = I + DDᵀ, LᵀL = I + DᵀD, B̃ = B L⁻¹, C̃ = R⁻ᵀ C,
/// U = −B Dᵀ, Vᵀ = (I + DDᵀ)⁻¹ C. The result is a standard Riccati equation.
template <typename Scalar>
BalancingTransform<Scalar> lqg_transform(const LtiSystem<Scalar>& sys)
{
    return detail::gain_transform(sys, BalancingVariant::lqg);
}

/// Dense residual of the transformed equation at a symmetric trial matrix X,
/// evaluated through the operator set so that Ã is never formed.
template <typename Scalar>
Matrix<Scalar> transformed_residual(const BalancingTransform<Scalar>& t, Side side, const Matrix<Scalar>& X)
{
    const OperatorSet<Scalar> ops(t.system);
    detail::require(X.rows() == ops.size() && X.cols() == ops.size(), "transformed_residual: X must be n x n");
    const auto& sys = ops.system();
    const Trans tr = trans_of(side);
    // controllability: Ã X Eᵀ;  observability: Ãᵀ X E
    const Matrix<Scalar> EX = ops.mul_E(tr, X);
    const Matrix<Scalar> AXE = ops.mul_A_splr(tr, Matrix<Scalar>(EX.transpose()));
    const Matrix<Scalar> G = side == Side::controllability ? sys.B : Matrix<Scalar>(sys.C.transpose());
    const Matrix<Scalar> H = side == Side::controllability ? Matrix<Scalar>(sys.C.transpose()) : sys.B;
    const Matrix<Scalar> EXH = EX * H;
    return AXE + AXE.transpose() + G * G.transpose() + Scalar(t.quadratic_sign) * EXH * EXH.transpose();
}

} // namespace lrmor
