// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <deque>
#include <vector>

#include "lrmor/equations.hpp"

namespace lrmor
{

/// ADI shift parameters; conjugate pairs are stored adjacent, positive
/// imaginary part first.
template <typename Scalar>
using ShiftSet = std::vector<std::complex<Scalar>>;

enum class ShiftStrategy
{
    projection,
    heuristic
};

struct AdiOptions
{
    int max_iterations = 200;
    double rel_tolerance = 1e-10;
    ShiftStrategy shift_strategy = ShiftStrategy::projection;
    /// Number of most recent ADI blocks spanning the projection basis, and
    /// number of heuristic shifts.
    int shift_batch = 6;
};

template <typename Scalar>
struct AdiResult
{
    LowRankFactor<Scalar> Z;
    /// Relative residual ‖WᵀW‖₂ / ‖GᵀG‖₂ after every real step or double step.
    std::vector<Scalar> residual_history;
    ShiftSet<Scalar> shifts_used;
    bool converged = false;
    /// ADI steps taken, a conjugate pair counting as two.
    int steps = 0;
};

namespace detail
{

template <typename Scalar>
bool is_real_shift(const std::complex<Scalar>& p)
{
    return std::abs(p.imag()) <= Scalar(100) * Eigen::NumTraits<Scalar>::epsilon() * std::abs(p);
}

/// Conjugate-closed, left-half-plane set from raw eigenvalue estimates.
/// Unstable values are reflected across the imaginary axis when no stable
/// value exists; zero values are dropped.
template <typename Scalar>
ShiftSet<Scalar> closed_stable_set(const ComplexVector<Scalar>& values)
{
    ShiftSet<Scalar> stable;
    ShiftSet<Scalar> reflected;
    auto push = [](ShiftSet<Scalar>& out, std::complex<Scalar> p) {
        if (is_real_shift(p))
        {
            out.emplace_back(p.real(), Scalar(0));
        }
        else if (p.imag() > 0)
        {
            out.push_back(p);
            out.push_back(std::conj(p));
        }
        else
        {
            out.push_back(std::conj(p));
            out.push_back(p);
        }
    };
    for (Index i = 0; i < values.size(); ++i)
    {
        const auto v = values(i);
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()) || v.real() == Scalar(0))
        {
            continue;
        }
        // Each complex pair is visited twice; keep the member with Im >= 0.
        if (!is_real_shift(v) && v.imag() < 0)
        {
            continue;
        }
        if (v.real() < 0)
        {
            push(stable, v);
        }
        else
        {
            push(reflected, std::complex<Scalar>(-v.real(), v.imag()));
        }
    }
    return stable.empty() ? reflected : stable;
}

/// Orthonormal basis of the column span of X (rank-revealing QR).
template <typename Scalar>
Matrix<Scalar> orthonormal_basis(const Matrix<Scalar>& X, Scalar rel_tol = Scalar(0))
{
    if (X.cols() == 0)
    {
        return Matrix<Scalar>(X.rows(), 0);
    }
    Eigen::ColPivHouseholderQR<Matrix<Scalar>> qr(X);
    if (rel_tol > Scalar(0))
    {
        qr.setThreshold(rel_tol);
    }
    const Index r = qr.rank();
    Matrix<Scalar> Q = qr.householderQ() * Matrix<Scalar>::Identity(X.rows(), r);
    return Q;
}

} // namespace detail

/// Ritz values of the pencil (Ã, E) projected onto span(basis), restricted to
/// the open left half-plane and closed under conjugation.
template <typename Scalar>
ShiftSet<Scalar> projection_shifts(const OperatorSet<Scalar>& ops, const Matrix<Scalar>& basis)
{
    detail::require(basis.rows() == ops.size(), "projection_shifts: basis has wrong row count");
    if (basis.cols() == 0)
    {
        throw DimensionError("projection_shifts: empty basis");
    }
    const Matrix<Scalar> Q = detail::orthonormal_basis<Scalar>(basis);
    if (Q.cols() == 0)
    {
        throw DimensionError("projection_shifts: basis is numerically zero");
    }
    const Matrix<Scalar> Ar = Q.transpose() * ops.mul_A_splr(Trans::N, Q);
    const Matrix<Scalar> Er = Q.transpose() * ops.mul_E(Trans::N, Q);
    return detail::closed_stable_set<Scalar>(pencil_eigenvalues<Scalar>(Er, Ar));
}

namespace detail
{

/// k Arnoldi steps for the operator `op` from start vector v; returns Ritz values.
template <typename Scalar, typename Op>
ComplexVector<Scalar> arnoldi_ritz(Op&& op, Vector<Scalar> v, int k)
{
    const Index n = v.size();
    k = static_cast<int>(std::min<Index>(k, n));
    Matrix<Scalar> Vb = Matrix<Scalar>::Zero(n, k + 1);
    Matrix<Scalar> H = Matrix<Scalar>::Zero(k + 1, k);
    Vb.col(0) = v / v.norm();
    int steps = k;
    for (int j = 0; j < k; ++j)
    {
        Vector<Scalar> w = op(Vector<Scalar>(Vb.col(j)));
        for (int pass = 0; pass < 2; ++pass)
        {
            const Vector<Scalar> h = Vb.leftCols(j + 1).transpose() * w;
            w -= Vb.leftCols(j + 1) * h;
            H.col(j).head(j + 1) += h;
        }
        H(j + 1, j) = w.norm();
        if (H(j + 1, j) <= Scalar(1e-12) * H.col(j).norm())
        {
            steps = j + 1;
            break;
        }
        Vb.col(j + 1) = w / H(j + 1, j);
    }
    Eigen::EigenSolver<Matrix<Scalar>> es(H.topLeftCorner(steps, steps), false);
    return es.eigenvalues();
}

} // namespace detail

/// Suboptimal min-max shift selection from Ritz values of E⁻¹Ã and its
/// inverse (Arnoldi with `steps_plus` and `steps_minus` steps).
template <typename Scalar>
ShiftSet<Scalar> heuristic_shifts(const OperatorSet<Scalar>& ops, int count, int steps_plus = 10,
                                  int steps_minus = 10)
{
    using Complex = std::complex<Scalar>;
    const Index n = ops.size();
    const Vector<Scalar> start = Vector<Scalar>::Ones(n) / std::sqrt(Scalar(n));
    auto fwd = [&](const Vector<Scalar>& x) -> Vector<Scalar> {
        return ops.sol_E(Trans::N, ops.mul_A_splr(Trans::N, x));
    };
    auto inv = [&](const Vector<Scalar>& x) -> Vector<Scalar> {
        const Matrix<Scalar> ex = ops.mul_E(Trans::N, x);
        if (ops.has_update())
        {
            return ops.sol_A_splr(Trans::N, ex);
        }
        return ops.sol_A(Trans::N, ex);
    };
    const ComplexVector<Scalar> rp = detail::arnoldi_ritz<Scalar>(fwd, start, steps_plus);
    const ComplexVector<Scalar> rm = detail::arnoldi_ritz<Scalar>(inv, start, steps_minus);
    ComplexVector<Scalar> ritz(rp.size() + rm.size());
    ritz << rp, rm.cwiseInverse();
    const ShiftSet<Scalar> cand = detail::closed_stable_set<Scalar>(ritz);
    if (cand.empty())
    {
        throw ConvergenceError("heuristic_shifts: no usable Ritz values");
    }

    auto rational = [&](const ShiftSet<Scalar>& set, Complex t) {
        Scalar v = 1;
        for (const auto& p : set)
        {
            v *= std::abs((t - p) / (t + p));
        }
        return v;
    };
    auto add = [](ShiftSet<Scalar>& set, Complex p) {
        if (detail::is_real_shift(p))
        {
            set.emplace_back(p.real(), 0);
        }
        else
        {
            const Complex q(p.real(), std::abs(p.imag()));
            set.push_back(q);
            set.push_back(std::conj(q));
        }
    };

    ShiftSet<Scalar> chosen;
    Scalar best = std::numeric_limits<Scalar>::infinity();
    Complex first = cand.front();
    for (const auto& p : cand)
    {
        ShiftSet<Scalar> trial;
        add(trial, p);
        Scalar worst = 0;
        for (const auto& t : cand)
        {
            worst = std::max(worst, rational(trial, t));
        }
        if (worst < best)
        {
            best = worst;
            first = p;
        }
    }
    add(chosen, first);
    while (static_cast<int>(chosen.size()) < count)
    {
        Complex next = cand.front();
        Scalar worst = -1;
        for (const auto& t : cand)
        {
            const Scalar v = rational(chosen, t);
            if (v > worst)
            {
                worst = v;
                next = t;
            }
        }
        if (worst <= Scalar(0))
        {
            break;
        }
        add(chosen, next);
    }
    return chosen;
}

/// Residual-based low-rank ADI for the Lyapunov equation of `spec`.
///
/// With W₀ = G each shift p gives V = (op(Ã) + p op(E))⁻¹ W, W ← W − 2 Re(p) op(E) V
/// and appends √(−2 Re p) V to Z; conjugate pairs are merged into one real
/// double step so Z stays real. The residual equals W Wᵀ, so its norm is
/// monitored at O(m² n) per step.
template <typename Scalar>
AdiResult<Scalar> lr_adi(const LyapunovSpec<Scalar>& spec, const AdiOptions& opts = {})
{
    using Complex = std::complex<Scalar>;
    if (!(opts.rel_tolerance > 0) || opts.shift_batch < 1)
    {
        throw ConfigurationError("lr_adi: tolerance must be positive and shift_batch >= 1");
    }
    const auto& ops = spec.ops;
    const Trans tr = trans_of(spec.side);
    const Index n = ops.size();
    const bool splr = ops.has_update();
    const bool reuse = opts.shift_strategy == ShiftStrategy::heuristic;

    Matrix<Scalar> W = spec.rhs_factor();
    detail::require(W.rows() == n, "lr_adi: right-hand side factor has wrong row count");
    const Index m = W.cols();

    AdiResult<Scalar> out;
    const Scalar res0 = detail::gram_norm(W);
    if (res0 == Scalar(0) || m == 0)
    {
        out.Z = LowRankFactor<Scalar>::empty(n);
        out.converged = true;
        return out;
    }

    auto solve = [&](auto p, const Matrix<Scalar>& rhs) {
        if (splr)
        {
            return ops.sol_ApE_splr(tr, p, tr, rhs, reuse);
        }
        return ops.sol_ApE(tr, p, tr, rhs, reuse);
    };

    std::vector<Matrix<Scalar>> blocks;
    std::deque<Complex> queue;
    ShiftSet<Scalar> heuristic_set;

    auto refill = [&]() {
        ShiftSet<Scalar> fresh;
        if (opts.shift_strategy == ShiftStrategy::heuristic)
        {
            if (heuristic_set.empty())
            {
                heuristic_set = heuristic_shifts(ops, opts.shift_batch);
            }
            fresh = heuristic_set;
        }
        else
        {
            Matrix<Scalar> basis;
            if (blocks.empty())
            {
                basis = W;
            }
            else
            {
                const std::size_t take = std::min<std::size_t>(blocks.size(), opts.shift_batch);
                Index cols = 0;
                for (std::size_t i = blocks.size() - take; i < blocks.size(); ++i)
                {
                    cols += blocks[i].cols();
                }
                basis.resize(n, cols);
                Index c = 0;
                for (std::size_t i = blocks.size() - take; i < blocks.size(); ++i)
                {
                    basis.middleCols(c, blocks[i].cols()) = blocks[i];
                    c += blocks[i].cols();
                }
            }
            fresh = projection_shifts(ops, basis);
            if (fresh.empty())
            {
                fresh = heuristic_shifts(ops, opts.shift_batch);
            }
        }
        queue.assign(fresh.begin(), fresh.end());
    };

    while (out.steps < opts.max_iterations)
    {
        if (queue.empty())
        {
            refill();
        }
        Complex p = queue.front();
        queue.pop_front();
        if (!(p.real() < 0))
        {
            throw ConfigurationError("lr_adi: shift with non-negative real part");
        }

        if (detail::is_real_shift(p))
        {
            const Scalar pr = p.real();
            const Matrix<Scalar> V = solve(pr, W);
            W -= Scalar(2) * pr * ops.mul_E(tr, V);
            blocks.push_back(std::sqrt(Scalar(-2) * pr) * V);
            out.shifts_used.emplace_back(pr, Scalar(0));
            out.steps += 1;
        }
        else
        {
            if (!queue.empty() && queue.front() == std::conj(p))
            {
                queue.pop_front();
            }
            const ComplexMatrix<Scalar> V = solve(p, W);
            const Scalar gamma = Scalar(2) * std::sqrt(-p.real());
            const Scalar delta = p.real() / p.imag();
            const Matrix<Scalar> Vr = V.real() + delta * V.imag();
            W += gamma * gamma * ops.mul_E(tr, Vr);
            Matrix<Scalar> blk(n, 2 * m);
            blk << gamma * Vr, gamma * std::sqrt(delta * delta + Scalar(1)) * V.imag();
            blocks.push_back(std::move(blk));
            out.shifts_used.push_back(p);
            out.shifts_used.push_back(std::conj(p));
            out.steps += 2;
        }

        const Scalar res = detail::gram_norm(W) / res0;
        out.residual_history.push_back(res);
        if (!std::isfinite(res))
        {
            throw ConvergenceError("lr_adi: residual became non-finite");
        }
        if (res <= opts.rel_tolerance)
        {
            out.converged = true;
            break;
        }
    }

    Index cols = 0;
    for (const auto& b : blocks)
    {
        cols += b.cols();
    }
    out.Z.Z.resize(n, cols);
    Index c = 0;
    for (const auto& b : blocks)
    {
        out.Z.Z.middleCols(c, b.cols()) = b;
        c += b.cols();
    }
    return out;
}

extern template ShiftSet<double> projection_shifts(const OperatorSet<double>&, const Matrix<double>&);
extern template ShiftSet<double> heuristic_shifts(const OperatorSet<double>&, int, int, int);
extern template AdiResult<double> lr_adi(const LyapunovSpec<double>&, const AdiOptions&);

} // namespace lrmor
