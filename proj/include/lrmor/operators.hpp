// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <tuple>

#include <Eigen/SparseLU>

#include "lrmor/lti_system.hpp"

namespace lrmor
{

namespace detail
{

template <typename A, typename B>
using promote_t = std::conditional_t<Eigen::NumTraits<A>::IsComplex, A,
                                     std::conditional_t<Eigen::NumTraits<B>::IsComplex, B, A>>;

template <typename Scalar, typename Derived>
Matrix<typename Derived::Scalar> apply(const SparseMatrix<Scalar>& S, Trans t,
                                       const Eigen::MatrixBase<Derived>& X)
{
    if (t == Trans::N)
    {
        return S * X;
    }
    return S.transpose() * X;
}

/// Woodbury solve: (M + U Vᵀ)⁻¹ Rhs given `solve(Y) = M⁻¹ Y`, touching only
/// solves with M and a k×k capacitance system.
template <typename Scalar, typename SolveFn, typename Derived>
auto woodbury(SolveFn&& solve, const Matrix<Scalar>& U, const Matrix<Scalar>& V,
              const Eigen::MatrixBase<Derived>& rhs)
{
    auto x0 = solve(rhs);
    if (U.cols() == 0)
    {
        return x0;
    }
    using XS = typename decltype(x0)::Scalar;
    auto mu = solve(U);
    using MS = typename decltype(mu)::Scalar;
    using R = promote_t<XS, MS>;

    const Matrix<R> MU = mu.template cast<R>();
    Matrix<R> cap = V.template cast<R>().transpose() * MU;
    cap.diagonal().array() += R(1);
    Eigen::PartialPivLU<Matrix<R>> lu(cap);
    using Real = typename Eigen::NumTraits<R>::Real;
    const Real rc = lu.rcond();
    if (!(rc > Eigen::NumTraits<Real>::epsilon()))
    {
        std::ostringstream msg;
        msg << "singular capacitance matrix I + Vᵀ M⁻¹ U (rcond = " << rc << ")";
        throw SingularError(msg.str());
    }
    Matrix<R> x = x0.template cast<R>();
    x -= MU * lu.solve(V.template cast<R>().transpose() * x);
    return Matrix<typename decltype(x0)::Scalar>(x.template cast<XS>());
}

} // namespace detail

/// Realizes multiply and solve operations with E, A and A + pE of one bound
/// system, never densifying the sparse coefficients.
///
/// Factorizations are created lazily on the first solve and cached per
/// (matrix, shift, transposition) key; copies of an OperatorSet share the
/// cache, and cache insertion is synchronized. Results do not depend on the
/// cache state.
///
/// The `*_splr` operations work with Ã = A + U Vᵀ through the Woodbury
/// identity. U, V come from the bound system or from `with_update`.
template <typename Scalar>
class OperatorSet
{
public:
    using Complex = std::complex<Scalar>;
    using System = LtiSystem<Scalar>;

    explicit OperatorSet(System system);

    const System& system() const { return *sys_; }
    Index size() const { return sys_->order(); }

    bool has_update() const { return have_UV_; }
    const Matrix<Scalar>& U() const { return U_; }
    const Matrix<Scalar>& V() const { return V_; }

    /// Same system with Ã = A + U Vᵀ; shares the factorization cache.
    OperatorSet with_update(Matrix<Scalar> U, Matrix<Scalar> V) const;

    template <typename Derived>
    Matrix<typename Derived::Scalar> mul_A(Trans tr, const Eigen::MatrixBase<Derived>& X) const
    {
        check_rows(X.rows(), "mul_A");
        return detail::apply(sys_->A, tr, X);
    }

    template <typename Derived>
    Matrix<typename Derived::Scalar> mul_E(Trans tr, const Eigen::MatrixBase<Derived>& X) const
    {
        check_rows(X.rows(), "mul_E");
        if (!sys_->have_E)
        {
            return X;
        }
        return detail::apply(sys_->E, tr, X);
    }

    template <typename Derived>
    Matrix<typename Derived::Scalar> mul_ApE(Trans trA, Scalar p, Trans trE,
                                             const Eigen::MatrixBase<Derived>& X) const
    {
        using S = typename Derived::Scalar;
        Matrix<S> Y = mul_A(trA, X);
        if (p != Scalar(0))
        {
            Y += S(p) * mul_E(trE, X);
        }
        return Y;
    }

    template <typename Derived>
    ComplexMatrix<Scalar> mul_ApE(Trans trA, Complex p, Trans trE,
                                  const Eigen::MatrixBase<Derived>& X) const
    {
        ComplexMatrix<Scalar> Y = mul_A(trA, X).template cast<Complex>();
        Y += p * mul_E(trE, X).template cast<Complex>();
        return Y;
    }

    /// op(Ã) X with Ã = A + U Vᵀ.
    template <typename Derived>
    Matrix<typename Derived::Scalar> mul_A_splr(Trans tr, const Eigen::MatrixBase<Derived>& X) const
    {
        using S = typename Derived::Scalar;
        Matrix<S> Y = mul_A(tr, X);
        if (have_UV_ && U_.cols() > 0)
        {
            const auto& L = tr == Trans::N ? U_ : V_;
            const auto& R = tr == Trans::N ? V_ : U_;
            Y += L.template cast<S>() * (R.template cast<S>().transpose() * X);
        }
        return Y;
    }

    template <typename Derived>
    Matrix<typename Derived::Scalar> sol_A(Trans tr, const Eigen::MatrixBase<Derived>& B) const
    {
        check_rows(B.rows(), "sol_A");
        return solve_real(factor(Key{Kind::A, 0, 0, false, tr}), tr == Trans::T, B);
    }

    template <typename Derived>
    Matrix<typename Derived::Scalar> sol_E(Trans tr, const Eigen::MatrixBase<Derived>& B) const
    {
        check_rows(B.rows(), "sol_E");
        if (!sys_->have_E)
        {
            return B;
        }
        return solve_real(factor(Key{Kind::E, 0, 0, false, tr}), tr == Trans::T, B);
    }

    /// (op(A) + p op(E)) X = B for real p.
    template <typename Derived>
    Matrix<typename Derived::Scalar> sol_ApE(Trans trA, Scalar p, Trans trE,
                                             const Eigen::MatrixBase<Derived>& B,
                                             bool cache = true) const
    {
        check_rows(B.rows(), "sol_ApE");
        if (p == Scalar(0))
        {
            return sol_A(trA, B);
        }
        const Key key = shifted_key(trA, Complex(p), trE);
        auto f = cache ? factor(key) : std::shared_ptr<const Factorization>(build(key));
        return solve_real(f, transposed_solve(trA, trE), B);
    }

    /// (op(A) + p op(E)) X = B for complex p; always complex output.
    template <typename Derived>
    ComplexMatrix<Scalar> sol_ApE(Trans trA, Complex p, Trans trE,
                                  const Eigen::MatrixBase<Derived>& B, bool cache = true) const
    {
        if (p.imag() == Scalar(0))
        {
            return sol_ApE(trA, p.real(), trE, B, cache).template cast<Complex>();
        }
        check_rows(B.rows(), "sol_ApE");
        const Key key = shifted_key(trA, p, trE);
        auto f = cache ? factor(key) : std::shared_ptr<const Factorization>(build(key));
        return solve_complex(*f, transposed_solve(trA, trE), B);
    }

    /// op(A + U Vᵀ) X = B via Sherman-Morrison-Woodbury.
    template <typename Derived>
    Matrix<typename Derived::Scalar> sol_A_splr(Trans tr, const Eigen::MatrixBase<Derived>& B) const
    {
        require_update("sol_A_splr");
        check_rows(B.rows(), "sol_A_splr");
        auto solve = [&](const auto& Y) { return sol_A(tr, Y); };
        return woodbury(tr, solve, B);
    }

    /// (op(A + U Vᵀ) + p op(E)) X = B via Sherman-Morrison-Woodbury.
    template <typename P, typename Derived>
    auto sol_ApE_splr(Trans trA, P p, Trans trE, const Eigen::MatrixBase<Derived>& B,
                      bool cache = true) const
    {
        require_update("sol_ApE_splr");
        check_rows(B.rows(), "sol_ApE_splr");
        auto solve = [&](const auto& Y) { return sol_ApE(trA, p, trE, Y, cache); };
        return woodbury(trA, solve, B);
    }

    std::size_t cached_factorizations() const;
    void clear_cache() const;

private:
    enum class Kind
    {
        A,
        E,
        ApE
    };

    // For mixed transposition flags the shifted matrix is assembled explicitly
    // and `trA` records the layout; otherwise one factorization of A + pE
    // serves both N and T solves.
    struct Key
    {
        Kind kind;
        Scalar re;
        Scalar im;
        bool mixed;
        Trans trA;

        bool operator<(const Key& o) const
        {
            const auto canon = [](const Key& k) {
                return std::make_tuple(static_cast<int>(k.kind), k.re, k.im, k.mixed,
                                       k.mixed ? static_cast<int>(k.trA) : 0);
            };
            return canon(*this) < canon(o);
        }
    };

    struct Factorization
    {
        std::unique_ptr<Eigen::SparseLU<SparseMatrix<Scalar>>> real;
        std::unique_ptr<Eigen::SparseLU<SparseMatrix<Complex>>> complex;
    };

    struct Cache
    {
        std::mutex mutex;
        std::map<Key, std::shared_ptr<const Factorization>> entries;
    };

    static Key shifted_key(Trans trA, Complex p, Trans trE)
    {
        return Key{Kind::ApE, p.real(), p.imag(), trA != trE, trA};
    }

    static bool transposed_solve(Trans trA, Trans trE) { return trA == trE && trA == Trans::T; }

    void check_rows(Index rows, const char* op) const;
    void require_update(const char* op) const;

    std::shared_ptr<const Factorization> factor(const Key& key) const;
    std::unique_ptr<Factorization> build(const Key& key) const;

    template <typename Derived>
    Matrix<typename Derived::Scalar> solve_real(const std::shared_ptr<const Factorization>& f,
                                                bool transposed,
                                                const Eigen::MatrixBase<Derived>& B) const
    {
        using S = typename Derived::Scalar;
        auto& lu = *f->real;
        auto run = [&](const Matrix<Scalar>& rhs) -> Matrix<Scalar> {
            if (transposed)
            {
                return lu.transpose().solve(rhs);
            }
            return lu.solve(rhs);
        };
        Matrix<S> X;
        if constexpr (Eigen::NumTraits<S>::IsComplex)
        {
            const Matrix<Scalar> re = run(B.real());
            const Matrix<Scalar> im = run(B.imag());
            X = re.template cast<S>() + S(0, 1) * im.template cast<S>();
        }
        else
        {
            X = run(B);
        }
        if (!X.allFinite())
        {
            throw SingularError("linear solve produced non-finite values (singular matrix)");
        }
        return X;
    }

    template <typename Derived>
    ComplexMatrix<Scalar> solve_complex(const Factorization& f, bool transposed,
                                        const Eigen::MatrixBase<Derived>& B) const
    {
        const ComplexMatrix<Scalar> rhs = B.template cast<Complex>();
        ComplexMatrix<Scalar> X;
        if (transposed)
        {
            X = f.complex->transpose().solve(rhs);
        }
        else
        {
            X = f.complex->solve(rhs);
        }
        if (!X.allFinite())
        {
            throw SingularError("shifted solve produced non-finite values (shift at an eigenvalue)");
        }
        return X;
    }

    template <typename SolveFn, typename Derived>
    auto woodbury(Trans tr, SolveFn&& solve, const Eigen::MatrixBase<Derived>& B) const
    {
        // op(A + U Vᵀ) = op(A) + U Vᵀ for N and op(A) + V Uᵀ for T.
        if (tr == Trans::N)
        {
            return detail::woodbury<Scalar>(solve, U_, V_, B);
        }
        return detail::woodbury<Scalar>(solve, V_, U_, B);
    }

    std::shared_ptr<const System> sys_;
    bool have_UV_ = false;
    Matrix<Scalar> U_;
    Matrix<Scalar> V_;
    std::shared_ptr<Cache> cache_;
};

template <typename Scalar>
OperatorSet<Scalar>::OperatorSet(System system)
{
    const Index n = system.A.rows();
    detail::require(system.A.cols() == n, "A must be square");
    if (system.have_E)
    {
        if (system.E.rows() != system.E.cols())
        {
            throw DimensionError("E must be square");
        }
        if (system.E.rows() != n)
        {
            throw DimensionError("E and A must have the same order");
        }
    }
    detail::require(system.B.rows() == n || system.B.size() == 0, "B must have n rows");
    detail::require(system.C.cols() == n || system.C.size() == 0, "C must have n columns");
    if (system.D.size() != 0)
    {
        detail::require(system.D.rows() == system.C.rows() && system.D.cols() == system.B.cols(),
                        "D must be p x m");
    }
    if (system.have_UV)
    {
        if (!system.U || !system.V)
        {
            throw ConfigurationError("have_UV is set but U or V is absent");
        }
        detail::require(system.U->rows() == n && system.V->rows() == n, "U, V must have n rows");
        detail::require(system.U->cols() == system.V->cols(),
                        "U and V must have equal column counts");
    }
    const bool finite = detail::all_finite(system.A) && (!system.have_E || detail::all_finite(system.E))
                        && system.B.allFinite() && system.C.allFinite() && system.D.allFinite()
                        && (!system.have_UV || (system.U->allFinite() && system.V->allFinite()));
    if (!finite)
    {
        throw NonFiniteError("system contains non-finite entries");
    }

    system.A.makeCompressed();
    system.E.makeCompressed();
    have_UV_ = system.have_UV;
    if (have_UV_)
    {
        U_ = *system.U;
        V_ = *system.V;
    }
    else
    {
        U_.resize(n, 0);
        V_.resize(n, 0);
    }
    sys_ = std::make_shared<const System>(std::move(system));
    cache_ = std::make_shared<Cache>();
}

template <typename Scalar>
OperatorSet<Scalar> OperatorSet<Scalar>::with_update(Matrix<Scalar> U, Matrix<Scalar> V) const
{
    detail::require(U.rows() == size() && V.rows() == size(), "U, V must have n rows");
    detail::require(U.cols() == V.cols(), "U and V must have equal column counts");
    OperatorSet copy = *this;
    copy.have_UV_ = true;
    copy.U_ = std::move(U);
    copy.V_ = std::move(V);
    return copy;
}

template <typename Scalar>
void OperatorSet<Scalar>::check_rows(Index rows, const char* op) const
{
    if (rows != size())
    {
        std::ostringstream msg;
        msg << op << ": operand has " << rows << " rows, expected " << size();
        throw DimensionError(msg.str());
    }
}

template <typename Scalar>
void OperatorSet<Scalar>::require_update(const char* op) const
{
    if (!have_UV_)
    {
        throw ConfigurationError(std::string(op) + " requires a low-rank update (have_UV)");
    }
}

template <typename Scalar>
std::size_t OperatorSet<Scalar>::cached_factorizations() const
{
    std::lock_guard lock(cache_->mutex);
    return cache_->entries.size();
}

template <typename Scalar>
void OperatorSet<Scalar>::clear_cache() const
{
    std::lock_guard lock(cache_->mutex);
    cache_->entries.clear();
}

template <typename Scalar>
auto OperatorSet<Scalar>::factor(const Key& key) const -> std::shared_ptr<const Factorization>
{
    {
        std::lock_guard lock(cache_->mutex);
        auto it = cache_->entries.find(key);
        if (it != cache_->entries.end())
        {
            return it->second;
        }
    }
    std::shared_ptr<const Factorization> f = build(key);
    std::lock_guard lock(cache_->mutex);
    return cache_->entries.emplace(key, std::move(f)).first->second;
}

template <typename Scalar>
auto OperatorSet<Scalar>::build(const Key& key) const -> std::unique_ptr<Factorization>
{
    auto f = std::make_unique<Factorization>();
    auto fail = [&](const std::string& what) {
        std::ostringstream msg;
        msg << "sparse LU of " << what << " failed";
        if (key.kind == Kind::ApE)
        {
            msg << " for shift p = (" << key.re << ", " << key.im << ")";
        }
        throw SingularError(msg.str());
    };

    if (key.kind != Kind::ApE || key.im == Scalar(0))
    {
        SparseMatrix<Scalar> M;
        if (key.kind == Kind::A)
        {
            M = sys_->A;
        }
        else if (key.kind == Kind::E)
        {
            M = sys_->E;
        }
        else
        {
            const SparseMatrix<Scalar> E = sys_->mass();
            if (key.mixed && key.trA == Trans::T)
            {
                M = SparseMatrix<Scalar>(sys_->A.transpose()) + key.re * E;
            }
            else if (key.mixed)
            {
                M = sys_->A + key.re * SparseMatrix<Scalar>(E.transpose());
            }
            else
            {
                M = sys_->A + key.re * E;
            }
        }
        M.makeCompressed();
        f->real = std::make_unique<Eigen::SparseLU<SparseMatrix<Scalar>>>();
        f->real->compute(M);
        if (f->real->info() != Eigen::Success)
        {
            fail(key.kind == Kind::A ? "A" : key.kind == Kind::E ? "E" : "A + pE");
        }
        return f;
    }

    const Complex p(key.re, key.im);
    const SparseMatrix<Complex> A = sys_->A.template cast<Complex>();
    const SparseMatrix<Complex> E = sys_->mass().template cast<Complex>();
    SparseMatrix<Complex> M;
    if (key.mixed && key.trA == Trans::T)
    {
        M = SparseMatrix<Complex>(A.transpose()) + p * E;
    }
    else if (key.mixed)
    {
        M = A + p * SparseMatrix<Complex>(E.transpose());
    }
    else
    {
        M = A + p * E;
    }
    M.makeCompressed();
    f->complex = std::make_unique<Eigen::SparseLU<SparseMatrix<Complex>>>();
    f->complex->compute(M);
    if (f->complex->info() != Eigen::Success)
    {
        fail("A + pE");
    }
    return f;
}

/// Validates `system` and binds an operator set to it.
template <typename Scalar>
OperatorSet<Scalar> init(LtiSystem<Scalar> system)
{
    return OperatorSet<Scalar>(std::move(system));
}

extern template class OperatorSet<double>;

} // namespace lrmor
