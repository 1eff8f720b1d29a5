// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace lrmor
{

using Index = Eigen::Index;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using ComplexMatrix = Matrix<std::complex<Scalar>>;

template <typename Scalar>
using ComplexVector = Vector<std::complex<Scalar>>;

template <typename Scalar>
using SparseMatrix = Eigen::SparseMatrix<Scalar, Eigen::ColMajor, int>;

/// Transposition flag applied to a coefficient matrix (op(A) = A or Aᵀ).
enum class Trans
{
    N,
    T
};

inline Trans flip(Trans t) { return t == Trans::N ? Trans::T : Trans::N; }

class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Incompatible matrix shapes.
class DimensionError : public Error
{
public:
    using Error::Error;
};

/// Inconsistent flags or options (e.g. have_UV without U, V).
class ConfigurationError : public Error
{
public:
    using Error::Error;
};

/// NaN or Inf in the input data.
class NonFiniteError : public Error
{
public:
    using Error::Error;
};

/// A factorization broke down; for shifted solves the shift hit an eigenvalue.
class SingularError : public Error
{
public:
    using Error::Error;
};

/// An iteration failed in a way that leaves no usable result.
class ConvergenceError : public Error
{
public:
    using Error::Error;
};

namespace detail
{

inline void require(bool cond, const std::string& what)
{
    if (!cond)
    {
        throw DimensionError(what);
    }
}

template <typename Derived>
bool all_finite(const Eigen::EigenBase<Derived>& m)
{
    if constexpr (std::is_base_of_v<Eigen::SparseMatrixBase<Derived>, Derived>)
    {
        const auto& s = m.derived();
        for (Index k = 0; k < s.outerSize(); ++k)
        {
            for (typename Derived::InnerIterator it(s, k); it; ++it)
            {
                if (!std::isfinite(it.value()))
                {
                    return false;
                }
            }
        }
        return true;
    }
    else
    {
        return m.derived().allFinite();
    }
}

} // namespace detail

} // namespace lrmor
