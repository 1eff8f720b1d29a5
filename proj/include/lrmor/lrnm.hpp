// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "lrmor/lradi.hpp"

namespace lrmor
{

struct NewtonOptions
{
    int max_newton_steps = 30;
    double rel_tolerance = 1e-9;
    /// Inner LR-ADI settings. The per-step tolerance follows the forcing
    /// term and never drops below `inner.rel_tolerance`.
    AdiOptions inner = [] {
        AdiOptions o;
        o.rel_tolerance = 1e-13;
        return o;
    }();
    bool line_search = true;
    int max_halvings = 8;
};

template <typename Scalar>
struct NewtonResult
{
    LowRankFactor<Scalar> Z;
    /// Feedback: K = Bᵀ Z Zᵀ E for observability, K = C Z Zᵀ Eᵀ for controllability.
    Matrix<Scalar> K;
    /// Relative Riccati residuals, starting with the one at X = 0.
    std::vector<Scalar> newton_residuals;
    std::vector<Scalar> step_sizes;
    std::vector<int> inner_steps;
    bool converged = false;
};

namespace detail
{

/// Column compression of Z keeping Z Zᵀ up to singular values below rel_tol·σ₁.
template <typename Scalar>
Matrix<Scalar> compress_factor(const Matrix<Scalar>& Z, Scalar rel_tol)
{
    if (Z.cols() == 0)
    {
        return Z;
    }
    Eigen::HouseholderQR<Matrix<Scalar>> qr(Z);
    const Index k = std::min(Z.rows(), Z.cols());
    const Matrix<Scalar> R = qr.matrixQR().topRows(k).template triangularView<Eigen::Upper>();
    Eigen::JacobiSVD<Matrix<Scalar>> svd(R, Eigen::ComputeThinU);
    const auto& s = svd.singularValues();
    Index r = 0;
    while (r < s.size() && s(r) > rel_tol * s(0))
    {
        ++r;
    }
    const Matrix<Scalar> Q = qr.householderQ() * Matrix<Scalar>::Identity(Z.rows(), k);
    return Q * svd.matrixU().leftCols(r) * s.head(r).asDiagonal();
}

template <typename Scalar>
Matrix<Scalar> hcat(const Matrix<Scalar>& a, const Matrix<Scalar>& b)
{
    Matrix<Scalar> out(a.rows(), a.cols() + b.cols());
    out << a, b;
    return out;
}

} // namespace detail

/// Feedback matrix for a Riccati factor (see NewtonResult::K).
template <typename Scalar>
Matrix<Scalar> feedback(const RiccatiSpec<Scalar>& spec, const LowRankFactor<Scalar>& Z)
{
    const Matrix<Scalar> H = spec.quadratic_factor();
    const Matrix<Scalar> Kt = spec.ops.mul_E(trans_of(spec.side), Z.Z) * (Z.Z.transpose() * H);
    return Kt.transpose();
}

/// Low-rank inexact Kleinman-Newton iteration for the Riccati equation of
/// `spec`, starting from X₀ = 0 (stable Ã).
///
/// Step j solves the Lyapunov equation with coefficient Ã − B K (observability)
/// or Ã − Kᵀ C (controllability) and constant term [G, Kᵀ][G, Kᵀ]ᵀ by LR-ADI;
/// the closed-loop coefficient is passed as a low-rank update and never formed.
/// With line search, a step that increases the residual is damped by halving.
template <typename Scalar>
NewtonResult<Scalar> lr_newton(const RiccatiSpec<Scalar>& spec, const NewtonOptions& opts = {})
{
    if (!(opts.rel_tolerance > 0))
    {
        throw ConfigurationError("lr_newton: tolerance must be positive");
    }
    const auto& ops = spec.ops;
    const Index n = ops.size();
    const bool obs = spec.side == Side::observability;
    const Matrix<Scalar> G = spec.rhs_factor();
    const Matrix<Scalar> H = spec.quadratic_factor();
    detail::require(G.rows() == n && H.rows() == n, "lr_newton: B, C incompatible with the system");
    const Scalar const_norm = detail::gram_norm(G);

    NewtonResult<Scalar> out;
    out.Z = LowRankFactor<Scalar>::empty(n);
    out.K = Matrix<Scalar>::Zero(H.cols(), n);
    ResidualReport<Scalar> res = riccati_residual(spec, out.Z);
    out.newton_residuals.push_back(res.relative);
    if (res.relative <= opts.rel_tolerance)
    {
        out.converged = true;
        return out;
    }

    const Matrix<Scalar> U0 = ops.U();
    const Matrix<Scalar> V0 = ops.V();

    for (int step = 0; step < opts.max_newton_steps; ++step)
    {
        const Matrix<Scalar> Kt = out.K.transpose();
        Matrix<Scalar> U, V;
        if (obs)
        {
            U = detail::hcat<Scalar>(U0, -H);
            V = detail::hcat<Scalar>(V0, Kt);
        }
        else
        {
            U = detail::hcat<Scalar>(U0, -Kt);
            V = detail::hcat<Scalar>(V0, H);
        }
        LyapunovSpec<Scalar> step_eq{ops.with_update(std::move(U), std::move(V)), spec.side,
                                     detail::hcat<Scalar>(G, Kt)};

        const Scalar rhs_norm = detail::gram_norm(*step_eq.rhs);
        const Scalar eta = std::min(Scalar(0.1), Scalar(0.9) * res.relative);
        const Scalar target = std::max(eta * res.absolute, Scalar(0.1 * opts.rel_tolerance) * const_norm);
        AdiOptions inner = opts.inner;
        inner.rel_tolerance = std::clamp(static_cast<double>(target / rhs_norm), opts.inner.rel_tolerance, 0.1);

        AdiResult<Scalar> adi = lr_adi(step_eq, inner);
        out.inner_steps.push_back(adi.steps);

        LowRankFactor<Scalar> candidate = std::move(adi.Z);
        ResidualReport<Scalar> cand_res = riccati_residual(spec, candidate);
        Scalar lambda = 1;

        if (opts.line_search && !(cand_res.absolute < res.absolute))
        {
            // X(λ) = (1 − λ) X_old + λ X_new, factored as [√(1−λ) Z_old, √λ Z_new].
            LowRankFactor<Scalar> best = candidate;
            ResidualReport<Scalar> best_res = cand_res;
            Scalar best_lambda = 1;
            Scalar trial = 1;
            for (int h = 0; h < opts.max_halvings; ++h)
            {
                trial *= Scalar(0.5);
                LowRankFactor<Scalar> mix{detail::hcat<Scalar>(std::sqrt(1 - trial) * out.Z.Z,
                                                               std::sqrt(trial) * candidate.Z)};
                mix.Z = detail::compress_factor<Scalar>(mix.Z, Eigen::NumTraits<Scalar>::epsilon());
                const ResidualReport<Scalar> r = riccati_residual(spec, mix);
                if (r.absolute < best_res.absolute)
                {
                    best = std::move(mix);
                    best_res = r;
                    best_lambda = trial;
                }
                if (r.absolute <= (1 - Scalar(1e-4) * trial) * res.absolute)
                {
                    break;
                }
            }
            if (!(best_res.absolute < res.absolute))
            {
                // No descent along the Newton direction: stagnation.
                out.step_sizes.push_back(0);
                return out;
            }
            candidate = std::move(best);
            cand_res = best_res;
            lambda = best_lambda;
        }

        out.Z = std::move(candidate);
        res = cand_res;
        out.K = feedback(spec, out.Z);
        out.step_sizes.push_back(lambda);
        out.newton_residuals.push_back(res.relative);
        if (!std::isfinite(res.relative))
        {
            throw ConvergenceError("lr_newton: residual became non-finite");
        }
        if (res.relative <= opts.rel_tolerance)
        {
            out.converged = true;
            break;
        }
    }
    return out;
}

/// True iff the closed-loop pencil (Ã − B K, E) (observability) or
/// (Ã − Kᵀ C, E) (controllability) is stable. Dense; for small systems.
template <typename Scalar>
bool closed_loop_check(const RiccatiSpec<Scalar>& spec, const Matrix<Scalar>& K)
{
    auto [E, A] = dense_pencil(spec.ops.system());
    if (spec.ops.has_update())
    {
        A = Matrix<Scalar>(spec.ops.system().A) + spec.ops.U() * spec.ops.V().transpose();
    }
    const Matrix<Scalar> H = spec.quadratic_factor();
    if (spec.side == Side::observability)
    {
        A -= H * K;
    }
    else
    {
        A -= K.transpose() * H.transpose();
    }
    return stability_check<Scalar>(E, A).stable;
}

extern template NewtonResult<double> lr_newton(const RiccatiSpec<double>&, const NewtonOptions&);

} // namespace lrmor
