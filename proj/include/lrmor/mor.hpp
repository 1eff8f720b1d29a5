// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <numeric>

#include <Eigen/SVD>

#include "lrmor/lradi.hpp"

namespace lrmor
{

/// Reduced-order model (Ê, Â, B̂, Ĉ, D) with Ê = WᵀEV, Â = WᵀÃV, B̂ = WᵀB,
/// Ĉ = CV. V and W are kept for inspection and may be empty for models that
/// were not built by projection.
template <typename Scalar>
struct Rom
{
    Matrix<Scalar> E;
    Matrix<Scalar> A;
    Matrix<Scalar> B;
    Matrix<Scalar> C;
    Matrix<Scalar> D;
    Matrix<Scalar> V;
    Matrix<Scalar> W;

    Index order() const { return A.rows(); }
};

/// H(s) = C (sE − Ã)⁻¹ B + D with one sparse factorization of Ã − sE.
template <typename Scalar>
ComplexMatrix<Scalar> transfer_eval(const OperatorSet<Scalar>& ops, std::complex<Scalar> s)
{
    using Complex = std::complex<Scalar>;
    const auto& sys = ops.system();
    ComplexMatrix<Scalar> X;
    if (ops.has_update())
    {
        X = ops.sol_ApE_splr(Trans::N, -s, Trans::N, sys.B, false);
    }
    else
    {
        X = ops.sol_ApE(Trans::N, -s, Trans::N, sys.B, false);
    }
    ComplexMatrix<Scalar> H = -(sys.C.template cast<Complex>() * X);
    H += sys.feedthrough().template cast<Complex>();
    return H;
}

/// Ĥ(s) = Ĉ (sÊ − Â)⁻¹ B̂ + D, dense.
template <typename Scalar>
ComplexMatrix<Scalar> transfer_eval(const Rom<Scalar>& rom, std::complex<Scalar> s)
{
    using Complex = std::complex<Scalar>;
    const Index p = rom.C.rows();
    const Index m = rom.B.cols();
    ComplexMatrix<Scalar> H = ComplexMatrix<Scalar>::Zero(p, m);
    if (rom.D.size() != 0)
    {
        H = rom.D.template cast<Complex>();
    }
    if (rom.order() == 0)
    {
        return H;
    }
    const ComplexMatrix<Scalar> M = s * rom.E.template cast<Complex>() - rom.A.template cast<Complex>();
    Eigen::PartialPivLU<ComplexMatrix<Scalar>> lu(M);
    if (!(lu.rcond() > Eigen::NumTraits<Scalar>::epsilon()))
    {
        throw SingularError("transfer_eval: sÊ − Â is singular at s");
    }
    H += rom.C.template cast<Complex>() * lu.solve(rom.B.template cast<Complex>());
    return H;
}

/// Petrov-Galerkin projection of the bound system onto (V, W); D is copied.
template <typename Scalar>
Rom<Scalar> project(const OperatorSet<Scalar>& ops, const Matrix<Scalar>& V, const Matrix<Scalar>& W)
{
    detail::require(V.rows() == ops.size() && W.rows() == ops.size() && V.cols() == W.cols(),
                    "project: V, W must be n x r");
    const auto& sys = ops.system();
    Rom<Scalar> rom;
    rom.E = W.transpose() * ops.mul_E(Trans::N, V);
    rom.A = W.transpose() * ops.mul_A_splr(Trans::N, V);
    rom.B = W.transpose() * sys.B;
    rom.C = sys.C * V;
    rom.D = sys.feedthrough();
    rom.V = V;
    rom.W = W;
    return rom;
}

/// Order selection for the square root method.
struct TruncationMode
{
    enum class Kind
    {
        tolerance,
        fixed
    };
    Kind kind = Kind::tolerance;
    double tolerance = 1e-4;
    Index order = 0;

    static TruncationMode by_tolerance(double tau) { return {Kind::tolerance, tau, 0}; }
    static TruncationMode by_order(Index r) { return {Kind::fixed, 0, r}; }
};

template <typename Scalar>
struct HsvReport
{
    /// Hankel singular values, descending.
    std::vector<Scalar> singular_values;
    Index chosen_order = 0;
    /// 2 Σ_{k>r} σ_k over all computed values.
    Scalar error_bound = 0;
    /// Set when a fixed order exceeded the numerical rank and was lowered.
    bool order_capped = false;
};

template <typename Scalar>
struct BtResult
{
    Rom<Scalar> rom;
    HsvReport<Scalar> hsv;
    /// Gramian solver histories; empty when the factors were supplied.
    std::vector<Scalar> p_history;
    std::vector<Scalar> q_history;
};

/// Square root balancing from Gramian factors P ≈ Zp Zpᵀ and Q ≈ Zq Zqᵀ.
///
/// ZqᵀE Zp = U Σ Xᵀ gives the Hankel singular values; V = Zp X_r Σ_r^{-1/2}
/// and W = Zq U_r Σ_r^{-1/2}, so WᵀEV = I_r. Values below eps·σ₁ are not
/// eligible for the reduced basis.
template <typename Scalar>
BtResult<Scalar> square_root_method(const OperatorSet<Scalar>& ops, const LowRankFactor<Scalar>& Zp,
                                    const LowRankFactor<Scalar>& Zq, const TruncationMode& mode)
{
    detail::require(Zp.rows() == ops.size() && Zq.rows() == ops.size(),
                    "square_root_method: factors have wrong row count");
    if (Zp.rank() == 0 || Zq.rank() == 0)
    {
        throw DimensionError("square_root_method: empty Gramian factor");
    }
    if (mode.kind == TruncationMode::Kind::tolerance && !(mode.tolerance >= 0))
    {
        throw ConfigurationError("square_root_method: tolerance must be non-negative");
    }
    if (mode.kind == TruncationMode::Kind::fixed && mode.order < 0)
    {
        throw ConfigurationError("square_root_method: order must be non-negative");
    }

    const Matrix<Scalar> M = Zq.Z.transpose() * ops.mul_E(Trans::N, Zp.Z);
    Eigen::JacobiSVD<Matrix<Scalar>> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector<Scalar>& sig = svd.singularValues();

    BtResult<Scalar> out;
    auto& hsv = out.hsv;
    hsv.singular_values.assign(sig.data(), sig.data() + sig.size());

    Index rank = 0;
    const Scalar floor = Eigen::NumTraits<Scalar>::epsilon() * (sig.size() ? sig(0) : Scalar(0));
    while (rank < sig.size() && sig(rank) > floor)
    {
        ++rank;
    }

    // tail(r) = 2 Σ_{k>r} σ_k
    std::vector<Scalar> tail(sig.size() + 1, Scalar(0));
    for (Index k = sig.size() - 1; k >= 0; --k)
    {
        tail[k] = tail[k + 1] + Scalar(2) * sig(k);
    }

    Index r = 0;
    if (mode.kind == TruncationMode::Kind::tolerance)
    {
        while (r < rank && tail[r] > Scalar(mode.tolerance))
        {
            ++r;
        }
    }
    else
    {
        r = mode.order;
        if (r > rank)
        {
            r = rank;
            hsv.order_capped = true;
        }
    }
    hsv.chosen_order = r;
    hsv.error_bound = tail[r];

    const Vector<Scalar> scale = sig.head(r).cwiseSqrt().cwiseInverse();
    const Matrix<Scalar> V = Zp.Z * (svd.matrixV().leftCols(r) * scale.asDiagonal());
    const Matrix<Scalar> W = Zq.Z * (svd.matrixU().leftCols(r) * scale.asDiagonal());
    out.rom = project(ops, V, W);
    return out;
}

/// Lyapunov balanced truncation: both Gramian factors by LR-ADI, then SRM.
/// D is left unchanged.
template <typename Scalar>
BtResult<Scalar> balanced_truncation(const OperatorSet<Scalar>& ops, const TruncationMode& mode,
                                     const AdiOptions& adi = {})
{
    AdiResult<Scalar> p = lr_adi(LyapunovSpec<Scalar>{ops, Side::controllability}, adi);
    AdiResult<Scalar> q = lr_adi(LyapunovSpec<Scalar>{ops, Side::observability}, adi);
    if (!p.converged || !q.converged)
    {
        throw ConvergenceError("balanced_truncation: Gramian iteration did not converge");
    }
    BtResult<Scalar> out = square_root_method(ops, p.Z, q.Z, mode);
    out.p_history = std::move(p.residual_history);
    out.q_history = std::move(q.residual_history);
    return out;
}

struct IrkaOptions
{
    int max_iterations = 100;
    double shift_change_tol = 1e-6;
    /// Interpolation points in the right half-plane, conjugate pairs adjacent.
    /// Empty means logspace(−1, 1, r).
    std::vector<std::complex<double>> initial_shifts;
    /// Tangential directions (m×r and p×r); empty means the leading singular
    /// vectors of B and Cᵀ for every shift.
    ComplexMatrix<double> initial_b;
    ComplexMatrix<double> initial_c;
};

template <typename Scalar>
struct IrkaResult
{
    /// Model built from `shifts`, `b`, `c` below.
    Rom<Scalar> rom;
    std::vector<std::complex<Scalar>> shifts;
    ComplexMatrix<Scalar> b;
    ComplexMatrix<Scalar> c;
    /// Relative shift change per iteration.
    std::vector<Scalar> shift_changes;
    int iterations = 0;
    bool converged = false;
};

namespace detail
{

/// Largest relative distance from a point of `a` to its greedily matched partner in `b`.
template <typename Scalar>
Scalar matched_change(const std::vector<std::complex<Scalar>>& a, const std::vector<std::complex<Scalar>>& b)
{
    if (a.size() != b.size())
    {
        return std::numeric_limits<Scalar>::infinity();
    }
    std::vector<bool> used(b.size(), false);
    Scalar worst = 0;
    for (const auto& x : a)
    {
        std::size_t best = b.size();
        Scalar dist = std::numeric_limits<Scalar>::infinity();
        for (std::size_t j = 0; j < b.size(); ++j)
        {
            if (!used[j] && std::abs(x - b[j]) < dist)
            {
                dist = std::abs(x - b[j]);
                best = j;
            }
        }
        used[best] = true;
        worst = std::max(worst, dist / std::max(std::abs(x), Eigen::NumTraits<Scalar>::epsilon()));
    }
    return worst;
}

/// Index order putting each conjugate pair adjacent (Im > 0 first), sorted by modulus.
template <typename Scalar>
std::vector<Index> pair_order(const ComplexVector<Scalar>& z)
{
    std::vector<Index> lead;
    for (Index i = 0; i < z.size(); ++i)
    {
        if (is_real_shift(z(i)) || z(i).imag() > 0)
        {
            lead.push_back(i);
        }
    }
    std::stable_sort(lead.begin(), lead.end(), [&](Index a, Index b) { return std::abs(z(a)) < std::abs(z(b)); });
    std::vector<bool> taken(z.size(), false);
    std::vector<Index> order;
    for (Index i : lead)
    {
        order.push_back(i);
        taken[i] = true;
        if (!is_real_shift(z(i)))
        {
            Index mate = -1;
            Scalar dist = std::numeric_limits<Scalar>::infinity();
            for (Index j = 0; j < z.size(); ++j)
            {
                if (!taken[j] && z(j).imag() < 0 && std::abs(z(j) - std::conj(z(i))) < dist)
                {
                    dist = std::abs(z(j) - std::conj(z(i)));
                    mate = j;
                }
            }
            if (mate < 0)
            {
                throw ConvergenceError("irka: reduced poles are not closed under conjugation");
            }
            order.push_back(mate);
            taken[mate] = true;
        }
    }
    return order;
}

} // namespace detail

/// Tangential IRKA with real bases.
///
/// Each sweep builds V from (σᵢE − Ã)⁻¹B bᵢ and W from (σᵢE − Ã)⁻ᵀCᵀcᵢ (real and
/// imaginary parts for conjugate pairs), projects, and moves the shifts to the
/// mirrored reduced poles with directions from the reduced residues. A shift
/// that hits a pole is perturbed by 1e−6 relative and retried.
template <typename Scalar>
IrkaResult<Scalar> irka(const OperatorSet<Scalar>& ops, Index r, const IrkaOptions& opts = {})
{
    using Complex = std::complex<Scalar>;
    const auto& sys = ops.system();
    const Index n = ops.size();
    const Index m = sys.inputs();
    const Index p = sys.outputs();
    if (r < 1 || r > n)
    {
        throw ConfigurationError("irka: order must satisfy 1 <= r <= n");
    }
    if (!(opts.shift_change_tol > 0) || opts.max_iterations < 1)
    {
        throw ConfigurationError("irka: tolerance must be positive and max_iterations >= 1");
    }

    std::vector<Complex> shifts;
    ComplexMatrix<Scalar> bdir(m, r);
    ComplexMatrix<Scalar> cdir(p, r);
    if (!opts.initial_shifts.empty())
    {
        detail::require(static_cast<Index>(opts.initial_shifts.size()) == r, "irka: need r initial shifts");
        for (const auto& s : opts.initial_shifts)
        {
            shifts.emplace_back(Scalar(s.real()), Scalar(s.imag()));
        }
    }
    else
    {
        for (Index i = 0; i < r; ++i)
        {
            const Scalar e = r == 1 ? Scalar(0) : Scalar(-1) + Scalar(2) * Scalar(i) / Scalar(r - 1);
            shifts.emplace_back(std::pow(Scalar(10), e), Scalar(0));
        }
    }
    if (opts.initial_b.size() != 0 && opts.initial_c.size() != 0)
    {
        detail::require(opts.initial_b.rows() == m && opts.initial_b.cols() == r && opts.initial_c.rows() == p
                            && opts.initial_c.cols() == r,
                        "irka: initial directions must be m x r and p x r");
        bdir = opts.initial_b.template cast<Complex>();
        cdir = opts.initial_c.template cast<Complex>();
    }
    else
    {
        Eigen::JacobiSVD<Matrix<Scalar>> sb(sys.B, Eigen::ComputeThinV);
        Eigen::JacobiSVD<Matrix<Scalar>> sc(Matrix<Scalar>(sys.C.transpose()), Eigen::ComputeThinV);
        const ComplexVector<Scalar> b0 = sb.matrixV().col(0).template cast<Complex>();
        const ComplexVector<Scalar> c0 = sc.matrixV().col(0).template cast<Complex>();
        bdir = b0.replicate(1, r);
        cdir = c0.replicate(1, r);
    }

    const Matrix<Scalar> Ct = sys.C.transpose();
    // (σE − Ã)⁻¹ X = −(Ã − σE)⁻¹ X
    auto shifted = [&](Trans tr, Complex& s, const ComplexMatrix<Scalar>& rhs) -> ComplexMatrix<Scalar> {
        for (int attempt = 0; attempt < 3; ++attempt)
        {
            try
            {
                if (ops.has_update())
                {
                    return -ops.sol_ApE_splr(tr, -s, tr, rhs, false);
                }
                return -ops.sol_ApE(tr, -s, tr, rhs, false);
            }
            catch (const SingularError&)
            {
                s *= Scalar(1) + Scalar(1e-6);
            }
        }
        throw SingularError("irka: shift repeatedly coincides with a pole");
    };

    auto build = [&](std::vector<Complex>& s, const ComplexMatrix<Scalar>& b, const ComplexMatrix<Scalar>& c) {
        Matrix<Scalar> V(n, r), W(n, r);
        Index i = 0;
        while (i < r)
        {
            const ComplexMatrix<Scalar> v = shifted(Trans::N, s[i], sys.B.template cast<Complex>() * b.col(i));
            const ComplexMatrix<Scalar> w = shifted(Trans::T, s[i], Ct.template cast<Complex>() * c.col(i));
            if (detail::is_real_shift(s[i]) || i + 1 == r)
            {
                V.col(i) = v.real();
                W.col(i) = w.real();
                i += 1;
            }
            else
            {
                s[i + 1] = std::conj(s[i]);
                V.col(i) = v.real();
                V.col(i + 1) = v.imag();
                W.col(i) = w.real();
                W.col(i + 1) = w.imag();
                i += 2;
            }
        }
        Eigen::HouseholderQR<Matrix<Scalar>> qv(V), qw(W);
        const Matrix<Scalar> Vq = qv.householderQ() * Matrix<Scalar>::Identity(n, r);
        const Matrix<Scalar> Wq = qw.householderQ() * Matrix<Scalar>::Identity(n, r);
        return project(ops, Vq, Wq);
    };

    IrkaResult<Scalar> out;
    for (int it = 0; it < opts.max_iterations; ++it)
    {
        Rom<Scalar> rom = build(shifts, bdir, cdir);
        Eigen::PartialPivLU<Matrix<Scalar>> elu(rom.E);
        if (!(elu.rcond() > Eigen::NumTraits<Scalar>::epsilon()))
        {
            throw SingularError("irka: reduced Ê is singular");
        }
        Eigen::EigenSolver<Matrix<Scalar>> es(elu.solve(rom.A), true);
        if (es.info() != Eigen::Success)
        {
            throw ConvergenceError("irka: reduced eigenvalue problem failed");
        }
        const ComplexVector<Scalar> lam = es.eigenvalues();
        const ComplexMatrix<Scalar> X = es.eigenvectors();
        Eigen::PartialPivLU<ComplexMatrix<Scalar>> xlu(X);
        const ComplexMatrix<Scalar> Bt = xlu.solve(elu.solve(rom.B).template cast<Complex>());
        const ComplexMatrix<Scalar> Cx = rom.C.template cast<Complex>() * X;

        const std::vector<Index> order = detail::pair_order<Scalar>(lam);
        std::vector<Complex> next(r);
        ComplexMatrix<Scalar> nb(m, r), nc(p, r);
        for (Index k = 0; k < r; ++k)
        {
            const Index j = order[k];
            const Complex l = lam(j);
            next[k] = Complex(std::abs(l.real()), -l.imag());
            nb.col(k) = Bt.row(j).transpose();
            nc.col(k) = Cx.col(j);
            if (detail::is_real_shift(l))
            {
                next[k] = Complex(next[k].real(), 0);
                nb.col(k) = nb.col(k).real().template cast<Complex>();
                nc.col(k) = nc.col(k).real().template cast<Complex>();
            }
        }

        const Scalar change = detail::matched_change<Scalar>(next, shifts);
        out.shift_changes.push_back(change);
        out.iterations = it + 1;
        out.rom = std::move(rom);
        out.shifts = shifts;
        out.b = bdir;
        out.c = cdir;
        if (change <= Scalar(opts.shift_change_tol))
        {
            out.converged = true;
            break;
        }
        shifts = std::move(next);
        bdir = std::move(nb);
        cdir = std::move(nc);
    }
    return out;
}

/// Mirrored reduced poles −λ(Â, Ê), used to verify the IRKA fixed point.
template <typename Scalar>
std::vector<std::complex<Scalar>> mirrored_poles(const Rom<Scalar>& rom)
{
    const ComplexVector<Scalar> lam = pencil_eigenvalues<Scalar>(rom.E, rom.A);
    std::vector<std::complex<Scalar>> out;
    for (Index i = 0; i < lam.size(); ++i)
    {
        out.push_back(-lam(i));
    }
    return out;
}

extern template BtResult<double> square_root_method(const OperatorSet<double>&, const LowRankFactor<double>&,
                                                    const LowRankFactor<double>&, const TruncationMode&);
extern template BtResult<double> balanced_truncation(const OperatorSet<double>&, const TruncationMode&,
                                                     const AdiOptions&);
extern template IrkaResult<double> irka(const OperatorSet<double>&, Index, const IrkaOptions&);

} // namespace lrmor
