// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <memory>

#include "lrmor/mor.hpp"

namespace lrmor
{

/// Parameter-dependent system E(μ) ẋ = A(μ) x + B(μ) u, y = C(μ) x + D(μ) u
/// over a scalar μ in [mu_lo, mu_hi].
///
/// The callbacks are the general interface. When `affine_A` holds (A₀, A₁)
/// then A(μ) = A₀ + μ A₁ and the callback for A may be left empty; the
/// `constant_*` flags declare members that do not depend on μ, which lets
/// reduced models precompute their projections.
template <typename Scalar>
struct ParametricSystem
{
    /// Empty E callback means E = I.
    std::function<SparseMatrix<Scalar>(Scalar)> E;
    std::function<SparseMatrix<Scalar>(Scalar)> A;
    std::function<Matrix<Scalar>(Scalar)> B;
    std::function<Matrix<Scalar>(Scalar)> C;
    /// Empty D callback means zero feedthrough.
    std::function<Matrix<Scalar>(Scalar)> D;
    Scalar mu_lo = Scalar(1e-6);
    Scalar mu_hi = Scalar(1e2);
    std::optional<std::pair<SparseMatrix<Scalar>, SparseMatrix<Scalar>>> affine_A;
    bool constant_E = false;
    bool constant_B = false;
    bool constant_C = false;
    bool constant_D = false;
    /// A(μ) symmetric and E(μ) symmetric positive definite for every μ.
    bool symmetric = false;

    SparseMatrix<Scalar> A_at(Scalar mu) const
    {
        if (affine_A)
        {
            SparseMatrix<Scalar> M = affine_A->first + mu * affine_A->second;
            M.makeCompressed();
            return M;
        }
        if (!A)
        {
            throw ConfigurationError("ParametricSystem: neither A callback nor affine form given");
        }
        return A(mu);
    }

    LtiSystem<Scalar> at(Scalar mu) const
    {
        if (!B || !C)
        {
            throw ConfigurationError("ParametricSystem: B and C callbacks are required");
        }
        LtiSystem<Scalar> sys = make_system<Scalar>(E ? E(mu) : SparseMatrix<Scalar>(), A_at(mu), B(mu), C(mu),
                                                    D ? D(mu) : Matrix<Scalar>());
        detail::require(sys.C.rows() == 0 || sys.C.cols() == sys.order(), "ParametricSystem: C has wrong width");
        return sys;
    }
};

enum class SamplingRule
{
    log_equispaced,
    chebyshev,
    custom
};

/// k logarithmically equispaced points in [lo, hi].
template <typename Scalar>
std::vector<Scalar> log_nodes(Scalar lo, Scalar hi, int k)
{
    if (!(lo > 0) || !(hi >= lo) || k < 1)
    {
        throw ConfigurationError("log_nodes: need 0 < lo <= hi and k >= 1");
    }
    std::vector<Scalar> out(k);
    const Scalar a = std::log10(lo);
    const Scalar b = std::log10(hi);
    for (int i = 0; i < k; ++i)
    {
        const Scalar t = k == 1 ? a : a + (b - a) * Scalar(i) / Scalar(k - 1);
        out[i] = std::pow(Scalar(10), t);
    }
    return out;
}

/// Roots of the Chebyshev polynomial T_k mapped to log₁₀[lo, hi], increasing.
template <typename Scalar>
std::vector<Scalar> chebyshev_nodes(Scalar lo, Scalar hi, int k)
{
    if (!(lo > 0) || !(hi >= lo) || k < 1)
    {
        throw ConfigurationError("chebyshev_nodes: need 0 < lo <= hi and k >= 1");
    }
    const Scalar a = std::log10(lo);
    const Scalar b = std::log10(hi);
    const Scalar pi = std::acos(Scalar(-1));
    std::vector<Scalar> out(k);
    for (int j = 0; j < k; ++j)
    {
        // j = 0 is the largest root; fill from the back for increasing order.
        const Scalar x = std::cos((Scalar(2 * j + 1)) * pi / Scalar(2 * k));
        out[k - 1 - j] = std::pow(Scalar(10), (a + b) / 2 + (b - a) / 2 * x);
    }
    return out;
}

struct LocalMethod
{
    enum class Kind
    {
        bt_tol,
        bt_fixed,
        irka
    };
    Kind kind = Kind::bt_tol;
    double tolerance = 1e-4;
    Index order = 20;
    AdiOptions adi{};
    IrkaOptions irka{};

    static LocalMethod bt_tolerance(double tau) { return {Kind::bt_tol, tau, 0, {}, {}}; }
    static LocalMethod bt_order(Index r) { return {Kind::bt_fixed, 0, r, {}, {}}; }
    static LocalMethod irka_order(Index r) { return {Kind::irka, 0, r, {}, {}}; }
};

template <typename Scalar>
struct TrainingSet
{
    std::vector<Scalar> samples;
    std::vector<Rom<Scalar>> roms;
    SamplingRule rule = SamplingRule::custom;
    LocalMethod method;
    /// Per sample: Hankel singular value reports (BT) or IRKA iteration counts.
    std::vector<HsvReport<Scalar>> hsv;
    std::vector<std::vector<Scalar>> p_histories;
    std::vector<std::vector<Scalar>> q_histories;
    std::vector<int> irka_iterations;
    std::vector<bool> irka_converged;
    /// Parametric model the samples were drawn from.
    std::shared_ptr<const ParametricSystem<Scalar>> source;

    std::size_t size() const { return samples.size(); }
    std::vector<Index> local_orders() const
    {
        std::vector<Index> r;
        for (const auto& rom : roms)
        {
            r.push_back(rom.order());
        }
        return r;
    }
};

namespace detail
{

template <typename Fn>
auto at_sample(std::size_t i, double mu, Fn&& fn)
{
    auto context = [&](const std::exception& e) {
        std::ostringstream msg;
        msg << "sample " << i << " (mu = " << mu << "): " << e.what();
        return msg.str();
    };
    try
    {
        return fn();
    }
    catch (const SingularError& e)
    {
        throw SingularError(context(e));
    }
    catch (const ConvergenceError& e)
    {
        throw ConvergenceError(context(e));
    }
    catch (const DimensionError& e)
    {
        throw DimensionError(context(e));
    }
    catch (const NonFiniteError& e)
    {
        throw NonFiniteError(context(e));
    }
    catch (const ConfigurationError& e)
    {
        throw ConfigurationError(context(e));
    }
}

} // namespace detail

/// Local reduced models at the given samples (strictly increasing). IRKA runs
/// are warm-started from the previous sample's shifts and directions.
template <typename Scalar>
TrainingSet<Scalar> train(const ParametricSystem<Scalar>& psys, std::vector<Scalar> samples,
                          const LocalMethod& method, SamplingRule rule = SamplingRule::custom)
{
    if (samples.empty())
    {
        throw ConfigurationError("train: no parameter samples");
    }
    for (std::size_t i = 1; i < samples.size(); ++i)
    {
        if (!(samples[i] > samples[i - 1]))
        {
            throw ConfigurationError("train: samples must be strictly increasing");
        }
    }
    TrainingSet<Scalar> ts;
    ts.samples = std::move(samples);
    ts.rule = rule;
    ts.method = method;
    ts.source = std::make_shared<const ParametricSystem<Scalar>>(psys);

    IrkaOptions irka_opts = method.irka;
    for (std::size_t i = 0; i < ts.samples.size(); ++i)
    {
        const Scalar mu = ts.samples[i];
        detail::at_sample(i, static_cast<double>(mu), [&] {
            const OperatorSet<Scalar> ops(psys.at(mu));
            switch (method.kind)
            {
            case LocalMethod::Kind::bt_tol:
            case LocalMethod::Kind::bt_fixed: {
                const TruncationMode mode = method.kind == LocalMethod::Kind::bt_tol
                                                ? TruncationMode::by_tolerance(method.tolerance)
                                                : TruncationMode::by_order(method.order);
                BtResult<Scalar> bt = balanced_truncation(ops, mode, method.adi);
                ts.roms.push_back(std::move(bt.rom));
                ts.hsv.push_back(std::move(bt.hsv));
                ts.p_histories.push_back(std::move(bt.p_history));
                ts.q_histories.push_back(std::move(bt.q_history));
                break;
            }
            case LocalMethod::Kind::irka: {
                IrkaResult<Scalar> res = irka(ops, method.order, irka_opts);
                irka_opts.initial_shifts.assign(res.shifts.begin(), res.shifts.end());
                irka_opts.initial_b = res.b.template cast<std::complex<double>>();
                irka_opts.initial_c = res.c.template cast<std::complex<double>>();
                ts.irka_iterations.push_back(res.iterations);
                ts.irka_converged.push_back(res.converged);
                ts.roms.push_back(std::move(res.rom));
                break;
            }
            }
            return 0;
        });
    }
    return ts;
}

/// Global-basis parametric model: Ê(μ) = WᵀE(μ)V, Â(μ) = WᵀA(μ)V, B̂(μ) = WᵀB(μ),
/// Ĉ(μ) = C(μ)V. Parameter-independent and affine parts are projected once.
template <typename Scalar>
struct PiecewiseRom
{
    Matrix<Scalar> V;
    Matrix<Scalar> W;
    double truncation_tol = 0;
    bool one_sided = false;
    std::vector<Index> local_orders;
    /// Σ local orders, and the orders of V and W before the two-sided cut.
    Index total_order = 0;
    Index rank_V = 0;
    Index rank_W = 0;
    std::shared_ptr<const ParametricSystem<Scalar>> source;

    std::optional<Matrix<Scalar>> E_hat;
    std::optional<std::pair<Matrix<Scalar>, Matrix<Scalar>>> A_hat;
    std::optional<Matrix<Scalar>> B_hat;
    std::optional<Matrix<Scalar>> C_hat;
    std::optional<Matrix<Scalar>> D_hat;

    Index order() const { return V.cols(); }

    Rom<Scalar> at(Scalar mu) const
    {
        const auto& ps = *source;
        Rom<Scalar> rom;
        const Matrix<Scalar> Wt = W.transpose();
        if (E_hat)
        {
            rom.E = *E_hat;
        }
        else
        {
            rom.E = ps.E ? Matrix<Scalar>(Wt * (ps.E(mu) * V)) : Matrix<Scalar>(Wt * V);
        }
        rom.A = A_hat ? Matrix<Scalar>(A_hat->first + mu * A_hat->second) : Matrix<Scalar>(Wt * (ps.A_at(mu) * V));
        rom.B = B_hat ? *B_hat : Matrix<Scalar>(Wt * ps.B(mu));
        rom.C = C_hat ? *C_hat : Matrix<Scalar>(ps.C(mu) * V);
        if (D_hat)
        {
            rom.D = *D_hat;
        }
        else
        {
            rom.D = ps.D ? ps.D(mu) : Matrix<Scalar>::Zero(rom.C.rows(), rom.B.cols());
        }
        return rom;
    }
};

namespace detail
{

/// Leading left singular vectors of X with σ > tol·σ₁ (at least one if X ≠ 0).
template <typename Scalar>
Matrix<Scalar> truncated_range(const Matrix<Scalar>& X, Scalar tol)
{
    // Orthonormalize first so the SVD runs on a small square factor.
    Eigen::HouseholderQR<Matrix<Scalar>> qr(X);
    const Index k = std::min(X.rows(), X.cols());
    const Matrix<Scalar> R = qr.matrixQR().topRows(k).template triangularView<Eigen::Upper>();
    Eigen::BDCSVD<Matrix<Scalar>> svd(R, Eigen::ComputeThinU);
    const Vector<Scalar>& s = svd.singularValues();
    Index r = 0;
    while (r < s.size() && s(r) > tol * s(0))
    {
        ++r;
    }
    const Matrix<Scalar> Q = qr.householderQ() * Matrix<Scalar>::Identity(X.rows(), k);
    return Q * svd.matrixU().leftCols(r);
}

template <typename Scalar>
Matrix<Scalar> concat(const std::vector<const Matrix<Scalar>*>& parts)
{
    Index cols = 0;
    for (const auto* p : parts)
    {
        cols += p->cols();
    }
    Matrix<Scalar> out(parts.front()->rows(), cols);
    Index c = 0;
    for (const auto* p : parts)
    {
        out.middleCols(c, p->cols()) = *p;
        c += p->cols();
    }
    return out;
}

} // namespace detail

/// Concatenates the local bases and removes linear dependencies by an SVD
/// with relative tolerance `truncation_tol`. Two-sided bases are cut to a
/// common order; `one_sided` merges all V and W blocks into V and sets W = V.
template <typename Scalar>
PiecewiseRom<Scalar> piecewise_assemble(const TrainingSet<Scalar>& ts,
                                        double truncation_tol = Eigen::NumTraits<double>::epsilon(),
                                        bool one_sided = false)
{
    if (ts.roms.empty() || !ts.source)
    {
        throw DimensionError("piecewise_assemble: empty training set");
    }
    if (!(truncation_tol >= 0))
    {
        throw ConfigurationError("piecewise_assemble: truncation tolerance must be non-negative");
    }
    std::vector<const Matrix<Scalar>*> vs, ws;
    for (const auto& rom : ts.roms)
    {
        if (rom.V.cols() > 0)
        {
            vs.push_back(&rom.V);
            ws.push_back(&rom.W);
        }
    }
    if (vs.empty())
    {
        throw DimensionError("piecewise_assemble: empty concatenation (all local orders are zero)");
    }

    PiecewiseRom<Scalar> out;
    out.truncation_tol = truncation_tol;
    out.one_sided = one_sided;
    out.local_orders = ts.local_orders();
    out.total_order = std::accumulate(out.local_orders.begin(), out.local_orders.end(), Index(0));
    out.source = ts.source;
    const Scalar tol = static_cast<Scalar>(truncation_tol);

    if (one_sided)
    {
        std::vector<const Matrix<Scalar>*> all = vs;
        all.insert(all.end(), ws.begin(), ws.end());
        out.V = detail::truncated_range<Scalar>(detail::concat<Scalar>(all), tol);
        out.W = out.V;
        out.rank_V = out.rank_W = out.V.cols();
    }
    else
    {
        Matrix<Scalar> V = detail::truncated_range<Scalar>(detail::concat<Scalar>(vs), tol);
        Matrix<Scalar> W = detail::truncated_range<Scalar>(detail::concat<Scalar>(ws), tol);
        out.rank_V = V.cols();
        out.rank_W = W.cols();
        const Index r = std::min(V.cols(), W.cols());
        out.V = V.leftCols(r);
        out.W = W.leftCols(r);
    }

    const auto& ps = *ts.source;
    const Matrix<Scalar> Wt = out.W.transpose();
    const Scalar mu0 = ps.mu_lo;
    if (!ps.E)
    {
        out.E_hat = Wt * out.V;
    }
    else if (ps.constant_E)
    {
        out.E_hat = Wt * (ps.E(mu0) * out.V);
    }
    if (ps.affine_A)
    {
        out.A_hat = std::make_pair(Matrix<Scalar>(Wt * (ps.affine_A->first * out.V)),
                                   Matrix<Scalar>(Wt * (ps.affine_A->second * out.V)));
    }
    if (ps.constant_B)
    {
        out.B_hat = Wt * ps.B(mu0);
    }
    if (ps.constant_C)
    {
        out.C_hat = ps.C(mu0) * out.V;
    }
    if (ps.constant_D || !ps.D)
    {
        out.D_hat = ps.D ? ps.D(mu0) : Matrix<Scalar>::Zero(ps.C(mu0).rows(), ps.B(mu0).cols());
    }
    return out;
}

enum class InterpolationBasis
{
    lagrange,
    bspline2
};

/// Lagrange basis on the nodes x, evaluated at t.
template <typename Scalar>
std::vector<Scalar> lagrange_coefficients(const std::vector<Scalar>& x, Scalar t)
{
    const std::size_t k = x.size();
    std::vector<Scalar> l(k, Scalar(1));
    for (std::size_t i = 0; i < k; ++i)
    {
        for (std::size_t j = 0; j < k; ++j)
        {
            if (j != i)
            {
                l[i] *= (t - x[j]) / (x[i] - x[j]);
            }
        }
    }
    return l;
}

/// Order-2 (piecewise linear) B-spline basis with clamped knots at the nodes x
/// (increasing); t is clamped to [x₁, x_k].
template <typename Scalar>
std::vector<Scalar> bspline2_coefficients(const std::vector<Scalar>& x, Scalar t)
{
    const std::size_t k = x.size();
    std::vector<Scalar> l(k, Scalar(0));
    if (k == 1)
    {
        l[0] = 1;
        return l;
    }
    t = std::clamp(t, x.front(), x.back());
    std::size_t j = 0;
    while (j + 2 < k && t > x[j + 1])
    {
        ++j;
    }
    const Scalar w = (t - x[j]) / (x[j + 1] - x[j]);
    l[j] = Scalar(1) - w;
    l[j + 1] = w;
    return l;
}

/// Block-diagonal realization of Ĥ(μ, s) = Σ ℓᵢ(μ) Ĥ⁽ⁱ⁾(s) with the parameter
/// carried in Ĉ(μ) = [ℓ₁(μ) Ĉ⁽¹⁾ ⋯ ℓ_k(μ) Ĉ⁽ᵏ⁾] and D(μ) = Σ ℓᵢ(μ) D⁽ⁱ⁾.
/// The ℓᵢ act on log₁₀ μ.
template <typename Scalar>
struct InterpolatoryRom
{
    Matrix<Scalar> E;
    Matrix<Scalar> A;
    Matrix<Scalar> B;
    std::vector<Matrix<Scalar>> C_blocks;
    std::vector<Matrix<Scalar>> D_blocks;
    std::vector<Index> block_sizes;
    /// log₁₀ of the training samples.
    std::vector<Scalar> nodes;
    InterpolationBasis basis = InterpolationBasis::lagrange;

    Index order() const { return A.rows(); }

    std::vector<Scalar> coefficients(Scalar mu) const
    {
        const Scalar t = std::log10(mu);
        return basis == InterpolationBasis::lagrange ? lagrange_coefficients(nodes, t)
                                                     : bspline2_coefficients(nodes, t);
    }

    Rom<Scalar> at(Scalar mu) const
    {
        const std::vector<Scalar> l = coefficients(mu);
        Rom<Scalar> rom;
        rom.E = E;
        rom.A = A;
        rom.B = B;
        rom.C.resize(D_blocks.front().rows(), order());
        rom.D = Matrix<Scalar>::Zero(D_blocks.front().rows(), D_blocks.front().cols());
        Index c = 0;
        for (std::size_t i = 0; i < l.size(); ++i)
        {
            rom.C.middleCols(c, block_sizes[i]) = l[i] * C_blocks[i];
            rom.D += l[i] * D_blocks[i];
            c += block_sizes[i];
        }
        return rom;
    }
};

template <typename Scalar>
InterpolatoryRom<Scalar> interpolatory_assemble(const TrainingSet<Scalar>& ts, InterpolationBasis basis)
{
    const std::size_t k = ts.roms.size();
    if (k == 0)
    {
        throw DimensionError("interpolatory_assemble: empty training set");
    }
    if (basis == InterpolationBasis::bspline2 && k < 3)
    {
        throw ConfigurationError("interpolatory_assemble: order-2 B-splines need at least 3 samples");
    }
    InterpolatoryRom<Scalar> out;
    out.basis = basis;
    for (const Scalar mu : ts.samples)
    {
        if (!(mu > 0))
        {
            throw ConfigurationError("interpolatory_assemble: samples must be positive (log coordinate)");
        }
        out.nodes.push_back(std::log10(mu));
    }
    for (std::size_t i = 1; i < k; ++i)
    {
        const Scalar gap = out.nodes[i] - out.nodes[i - 1];
        if (!(gap > Scalar(1e-14) * std::max(Scalar(1), std::abs(out.nodes[i]))))
        {
            throw ConfigurationError("interpolatory_assemble: coincident or unordered nodes");
        }
    }

    Index r = 0;
    for (const auto& rom : ts.roms)
    {
        out.block_sizes.push_back(rom.order());
        r += rom.order();
    }
    const Index m = ts.roms.front().B.cols();
    const Index p = ts.roms.front().C.rows();
    out.E = Matrix<Scalar>::Zero(r, r);
    out.A = Matrix<Scalar>::Zero(r, r);
    out.B.resize(r, m);
    Index c = 0;
    for (const auto& rom : ts.roms)
    {
        const Index ri = rom.order();
        detail::require(rom.B.cols() == m && rom.C.rows() == p, "interpolatory_assemble: local I/O shapes differ");
        out.E.block(c, c, ri, ri) = rom.E;
        out.A.block(c, c, ri, ri) = rom.A;
        out.B.middleRows(c, ri) = rom.B;
        out.C_blocks.push_back(rom.C);
        out.D_blocks.push_back(rom.D.size() ? rom.D : Matrix<Scalar>::Zero(p, m));
        c += ri;
    }
    return out;
}

template <typename Scalar>
ComplexMatrix<Scalar> rom_transfer_eval(const PiecewiseRom<Scalar>& prom, Scalar mu, std::complex<Scalar> s)
{
    return transfer_eval(prom.at(mu), s);
}

template <typename Scalar>
ComplexMatrix<Scalar> rom_transfer_eval(const InterpolatoryRom<Scalar>& prom, Scalar mu, std::complex<Scalar> s)
{
    return transfer_eval(prom.at(mu), s);
}

extern template TrainingSet<double> train(const ParametricSystem<double>&, std::vector<double>, const LocalMethod&,
                                          SamplingRule);
extern template PiecewiseRom<double> piecewise_assemble(const TrainingSet<double>&, double, bool);
extern template InterpolatoryRom<double> interpolatory_assemble(const TrainingSet<double>&, InterpolationBasis);

} // namespace lrmor
