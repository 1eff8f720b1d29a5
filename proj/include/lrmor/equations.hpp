// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "lrmor/operators.hpp"

namespace lrmor
{

/// Which member of the dual equation pair is meant.
///
///  - controllability (type N):  Ã P Eᵀ + E P Ãᵀ + B Bᵀ  [ − E P Cᵀ C P Eᵀ ]
///  - observability   (type T):  Ãᵀ Q E + Eᵀ Q Ã + Cᵀ C  [ − Eᵀ Q B Bᵀ Q E ]
///
/// The bracketed quadratic term belongs to the Riccati equation only.
enum class Side
{
    controllability,
    observability
};

inline Trans trans_of(Side side) { return side == Side::controllability ? Trans::N : Trans::T; }

template <typename Scalar>
struct LyapunovSpec
{
    OperatorSet<Scalar> ops;
    Side side = Side::controllability;
    /// Overrides the constant-term factor taken from the system.
    std::optional<Matrix<Scalar>> rhs = std::nullopt;

    /// G with constant term G Gᵀ: B for controllability, Cᵀ for observability.
    Matrix<Scalar> rhs_factor() const
    {
        if (rhs)
        {
            return *rhs;
        }
        return side == Side::controllability ? ops.system().B : Matrix<Scalar>(ops.system().C.transpose());
    }
};

template <typename Scalar>
struct RiccatiSpec
{
    OperatorSet<Scalar> ops;
    Side side = Side::observability;

    Matrix<Scalar> rhs_factor() const
    {
        return side == Side::controllability ? ops.system().B : Matrix<Scalar>(ops.system().C.transpose());
    }

    /// Factor F of the quadratic term E X F Fᵀ X Eᵀ (or its transpose).
    Matrix<Scalar> quadratic_factor() const
    {
        return side == Side::controllability ? Matrix<Scalar>(ops.system().C.transpose()) : ops.system().B;
    }
};

/// P ≈ Z Zᵀ. A factor with zero columns stands for P = 0.
template <typename Scalar>
struct LowRankFactor
{
    Matrix<Scalar> Z;

    Index rank() const { return Z.cols(); }
    Index rows() const { return Z.rows(); }
    Matrix<Scalar> dense() const { return Z * Z.transpose(); }

    static LowRankFactor empty(Index n) { return LowRankFactor{Matrix<Scalar>(n, 0)}; }
};

enum class NormKind
{
    spectral
};

template <typename Scalar>
struct ResidualReport
{
    Scalar absolute = 0;
    Scalar relative = 0;
    NormKind norm_kind = NormKind::spectral;
};

namespace detail
{

/// ‖F S Fᵀ‖₂ for symmetric S, computed from the triangular factor of a thin
/// QR of F so that no n×n matrix is formed.
template <typename Scalar>
Scalar factored_norm(const Matrix<Scalar>& F, const Matrix<Scalar>& S)
{
    if (F.cols() == 0 || F.rows() == 0)
    {
        return Scalar(0);
    }
    Eigen::HouseholderQR<Matrix<Scalar>> qr(F);
    const Index k = std::min(F.rows(), F.cols());
    const Matrix<Scalar> R = qr.matrixQR().topRows(k).template triangularView<Eigen::Upper>();
    Matrix<Scalar> core = R * S * R.transpose();
    core = Scalar(0.5) * (core + core.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(core, Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

/// ‖G‖₂² via the small Gram matrix.
template <typename Scalar>
Scalar gram_norm(const Matrix<Scalar>& G)
{
    if (G.size() == 0)
    {
        return Scalar(0);
    }
    const Matrix<Scalar> gram = G.cols() <= G.rows() ? Matrix<Scalar>(G.transpose() * G)
                                                     : Matrix<Scalar>(G * G.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(gram, Eigen::EigenvaluesOnly);
    return std::max(Scalar(0), es.eigenvalues().maxCoeff());
}

template <typename Scalar>
ResidualReport<Scalar> make_report(Scalar absolute, Scalar constant_norm)
{
    ResidualReport<Scalar> r;
    r.absolute = absolute;
    r.relative = constant_norm > Scalar(0) ? absolute / constant_norm : absolute;
    return r;
}

/// Symmetric signature [[0 I 0], [I 0 0], [0 0 I]] with block sizes k, k, m,
/// optionally followed by −I of size q.
template <typename Scalar>
Matrix<Scalar> signature(Index k, Index m, Index q)
{
    Matrix<Scalar> S = Matrix<Scalar>::Zero(2 * k + m + q, 2 * k + m + q);
    S.block(0, k, k, k).setIdentity();
    S.block(k, 0, k, k).setIdentity();
    S.block(2 * k, 2 * k, m, m).setIdentity();
    S.block(2 * k + m, 2 * k + m, q, q) = -Matrix<Scalar>::Identity(q, q);
    return S;
}

} // namespace detail

/// Spectral norm of the Lyapunov residual at P = Z Zᵀ, evaluated in factored form.
template <typename Scalar>
ResidualReport<Scalar> lyap_residual(const LyapunovSpec<Scalar>& spec, const LowRankFactor<Scalar>& Z)
{
    const auto& ops = spec.ops;
    detail::require(Z.rows() == ops.size(), "lyap_residual: factor has wrong row count");
    const Trans tr = trans_of(spec.side);
    const Matrix<Scalar> G = spec.rhs_factor();
    const Index k = Z.rank();

    Matrix<Scalar> F(ops.size(), 2 * k + G.cols());
    F << ops.mul_A_splr(tr, Z.Z), ops.mul_E(tr, Z.Z), G;
    const Scalar abs = detail::factored_norm(F, detail::signature<Scalar>(k, G.cols(), 0));
    return detail::make_report(abs, detail::gram_norm(G));
}

/// Spectral norm of the Riccati residual at X = Z Zᵀ, evaluated in factored form.
template <typename Scalar>
ResidualReport<Scalar> riccati_residual(const RiccatiSpec<Scalar>& spec, const LowRankFactor<Scalar>& Z)
{
    const auto& ops = spec.ops;
    detail::require(Z.rows() == ops.size(), "riccati_residual: factor has wrong row count");
    const Trans tr = trans_of(spec.side);
    const Matrix<Scalar> G = spec.rhs_factor();
    const Matrix<Scalar> H = spec.quadratic_factor();
    const Index k = Z.rank();

    const Matrix<Scalar> EZ = ops.mul_E(tr, Z.Z);
    Matrix<Scalar> F(ops.size(), 2 * k + G.cols() + H.cols());
    F << ops.mul_A_splr(tr, Z.Z), EZ, G, EZ * (Z.Z.transpose() * H);
    const Scalar abs = detail::factored_norm(F, detail::signature<Scalar>(k, G.cols(), H.cols()));
    return detail::make_report(abs, detail::gram_norm(G));
}

/// Largest order accepted by the dense oracles.
inline constexpr Index kDenseOracleMaxOrder = 200;

/// Dense solution of A P Eᵀ + E P Aᵀ + G Gᵀ = 0 (Bartels-Stewart on the
/// complex Schur form of E⁻¹A). Throws SingularError when the pencil has an
/// eigenvalue pair λᵢ + conj(λⱼ) = 0.
template <typename Scalar>
Matrix<Scalar> dense_lyap_solve(const Matrix<Scalar>& E, const Matrix<Scalar>& A, const Matrix<Scalar>& G)
{
    using Complex = std::complex<Scalar>;
    const Index n = A.rows();
    detail::require(A.cols() == n && E.rows() == n && E.cols() == n, "dense_lyap_solve: E, A must be n x n");
    detail::require(G.rows() == n, "dense_lyap_solve: G must have n rows");
    detail::require(n <= kDenseOracleMaxOrder, "dense_lyap_solve: order exceeds dense oracle cap");
    if (n == 0)
    {
        return Matrix<Scalar>(0, 0);
    }

    Eigen::PartialPivLU<Matrix<Scalar>> elu(E);
    if (!(elu.rcond() > Eigen::NumTraits<Scalar>::epsilon()))
    {
        throw SingularError("dense_lyap_solve: E is singular");
    }
    const Matrix<Scalar> As = elu.solve(A);
    const Matrix<Scalar> Gs = elu.solve(G);

    Eigen::ComplexSchur<Matrix<Scalar>> schur(As);
    const ComplexMatrix<Scalar>& T = schur.matrixT();
    const ComplexMatrix<Scalar>& Q = schur.matrixU();
    const ComplexMatrix<Scalar> QG = Q.adjoint() * Gs.template cast<Complex>();
    const ComplexMatrix<Scalar> Ft = QG * QG.adjoint();

    const Scalar scale = std::max(T.cwiseAbs().maxCoeff(), Scalar(1));
    ComplexMatrix<Scalar> Y = ComplexMatrix<Scalar>::Zero(n, n);
    for (Index j = n - 1; j >= 0; --j)
    {
        ComplexVector<Scalar> rhs = -Ft.col(j);
        for (Index k = j + 1; k < n; ++k)
        {
            rhs -= std::conj(T(j, k)) * Y.col(k);
        }
        ComplexMatrix<Scalar> Tj = T.template triangularView<Eigen::Upper>();
        Tj.diagonal().array() += std::conj(T(j, j));
        if (Tj.diagonal().cwiseAbs().minCoeff() <= Scalar(8) * Eigen::NumTraits<Scalar>::epsilon() * scale)
        {
            throw SingularError("dense_lyap_solve: pencil has eigenvalues mirrored across the imaginary axis");
        }
        Y.col(j) = Tj.template triangularView<Eigen::Upper>().solve(rhs);
    }
    Matrix<Scalar> P = (Q * Y * Q.adjoint()).real();
    return Scalar(0.5) * (P + P.transpose());
}

template <typename Scalar>
struct StabilityReport
{
    bool stable = false;
    Scalar abscissa = 0;
};

/// Generalized eigenvalues of the pencil (A, E), dense.
template <typename Scalar>
ComplexVector<Scalar> pencil_eigenvalues(const Matrix<Scalar>& E, const Matrix<Scalar>& A)
{
    const Index n = A.rows();
    detail::require(A.cols() == n && E.rows() == n && E.cols() == n, "pencil_eigenvalues: E, A must be n x n");
    if (n == 0)
    {
        return ComplexVector<Scalar>(0);
    }
    Eigen::PartialPivLU<Matrix<Scalar>> elu(E);
    if (!(elu.rcond() > Eigen::NumTraits<Scalar>::epsilon()))
    {
        throw SingularError("pencil_eigenvalues: E is singular");
    }
    Eigen::EigenSolver<Matrix<Scalar>> es(elu.solve(A), false);
    if (es.info() != Eigen::Success)
    {
        throw ConvergenceError("pencil_eigenvalues: eigenvalue iteration failed");
    }
    return es.eigenvalues();
}

/// Stable iff every generalized eigenvalue of (A, E) has negative real part.
template <typename Scalar>
StabilityReport<Scalar> stability_check(const Matrix<Scalar>& E, const Matrix<Scalar>& A)
{
    const ComplexVector<Scalar> ev = pencil_eigenvalues(E, A);
    StabilityReport<Scalar> r;
    r.abscissa = ev.size() ? ev.real().maxCoeff() : -std::numeric_limits<Scalar>::infinity();
    r.stable = r.abscissa < Scalar(0);
    return r;
}

/// Largest order accepted by dense eigenvalue checks on full systems.
inline constexpr Index kDenseCheckMaxOrder = 2000;

/// Dense copies of (E, Ã) for a system small enough to densify.
template <typename Scalar>
std::pair<Matrix<Scalar>, Matrix<Scalar>> dense_pencil(const LtiSystem<Scalar>& sys)
{
    detail::require(sys.order() <= kDenseCheckMaxOrder, "system too large for a dense check");
    Matrix<Scalar> A(sys.A);
    if (sys.have_UV && sys.U && sys.V)
    {
        A += *sys.U * sys.V->transpose();
    }
    return {Matrix<Scalar>(sys.mass()), std::move(A)};
}

template <typename Scalar>
StabilityReport<Scalar> stability_check(const LtiSystem<Scalar>& sys)
{
    auto [E, A] = dense_pencil(sys);
    return stability_check<Scalar>(E, A);
}

/// Dense stabilizing solution of the type-T Riccati equation
///     Aᵀ Q E + Eᵀ Q A + Cᵀ C − Eᵀ Q B Bᵀ Q E = 0
/// by Kleinman-Newton from Q = 0 (requires a stable pencil).
template <typename Scalar>
Matrix<Scalar> dense_are_solve(const Matrix<Scalar>& E, const Matrix<Scalar>& A, const Matrix<Scalar>& B,
                               const Matrix<Scalar>& C)
{
    const Index n = A.rows();
    detail::require(B.rows() == n && C.cols() == n, "dense_are_solve: B, C incompatible with A");
    if (!stability_check<Scalar>(E, A).stable)
    {
        throw ConvergenceError("dense_are_solve: Newton start Q = 0 requires a stable pencil");
    }
    Matrix<Scalar> Q = Matrix<Scalar>::Zero(n, n);
    if (C.size() == 0 || C.isZero(0))
    {
        return Q;
    }
    const Matrix<Scalar> Et = E.transpose();
    constexpr int max_steps = 50;
    bool converged = false;
    for (int step = 0; step < max_steps; ++step)
    {
        const Matrix<Scalar> K = B.transpose() * Q * E;
        const Matrix<Scalar> Ak = A - B * K;
        Matrix<Scalar> G(n, C.rows() + K.rows());
        G << C.transpose(), K.transpose();
        Matrix<Scalar> Qn = dense_lyap_solve<Scalar>(Et, Matrix<Scalar>(Ak.transpose()), G);
        const Scalar change = (Qn - Q).norm();
        Q = std::move(Qn);
        if (change <= Scalar(1e-14) * std::max(Q.norm(), Scalar(1e-300)))
        {
            converged = true;
            break;
        }
    }
    if (!converged)
    {
        throw ConvergenceError("dense_are_solve: Newton did not converge in 50 steps");
    }
    const Matrix<Scalar> closed = A - B * (B.transpose() * Q * E);
    if (!stability_check<Scalar>(E, closed).stable)
    {
        throw ConvergenceError("dense_are_solve: closed loop is not stable");
    }
    return Q;
}

/// Low-rank factor of a symmetric positive semidefinite matrix; eigenvalues
/// below `rel_tol · λmax` are dropped.
template <typename Scalar>
LowRankFactor<Scalar> factor_psd(const Matrix<Scalar>& P, Scalar rel_tol = Scalar(0))
{
    Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(P);
    const Vector<Scalar>& lam = es.eigenvalues();
    const Scalar top = lam.size() ? std::max(lam.maxCoeff(), Scalar(0)) : Scalar(0);
    std::vector<Index> keep;
    for (Index i = lam.size() - 1; i >= 0; --i)
    {
        if (lam(i) > rel_tol * top && lam(i) > Scalar(0))
        {
            keep.push_back(i);
        }
    }
    Matrix<Scalar> Z(P.rows(), static_cast<Index>(keep.size()));
    for (std::size_t c = 0; c < keep.size(); ++c)
    {
        Z.col(static_cast<Index>(c)) = es.eigenvectors().col(keep[c]) * std::sqrt(lam(keep[c]));
    }
    return LowRankFactor<Scalar>{std::move(Z)};
}

extern template ResidualReport<double> lyap_residual(const LyapunovSpec<double>&, const LowRankFactor<double>&);
extern template ResidualReport<double> riccati_residual(const RiccatiSpec<double>&, const LowRankFactor<double>&);
extern template Matrix<double> dense_lyap_solve(const Matrix<double>&, const Matrix<double>&, const Matrix<double>&);
extern template Matrix<double> dense_are_solve(const Matrix<double>&, const Matrix<double>&, const Matrix<double>&,
                                               const Matrix<double>&);

} // namespace lrmor
