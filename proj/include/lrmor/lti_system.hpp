// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>

#include "lrmor/types.hpp"

namespace lrmor
{

/// Generalized state-space system
///
///     E x' = (A + U Vᵀ) x + B u,    y = C x + D u
///
/// with sparse E, A and thin dense B, C. The low-rank term is only present
/// when `have_UV` is set; when `have_E` is false, E is the identity and the
/// stored E is ignored. An empty D means zero feedthrough.
template <typename Scalar>
struct LtiSystem
{
    SparseMatrix<Scalar> E;
    SparseMatrix<Scalar> A;
    Matrix<Scalar> B;
    Matrix<Scalar> C;
    Matrix<Scalar> D;
    bool have_E = false;
    bool have_UV = false;
    std::optional<Matrix<Scalar>> U;
    std::optional<Matrix<Scalar>> V;

    Index order() const { return A.rows(); }
    Index inputs() const { return B.cols(); }
    Index outputs() const { return C.rows(); }

    Matrix<Scalar> feedthrough() const
    {
        if (D.size() == 0)
        {
            return Matrix<Scalar>::Zero(outputs(), inputs());
        }
        return D;
    }

    /// E as a sparse matrix, materializing the identity when have_E is false.
    SparseMatrix<Scalar> mass() const
    {
        if (have_E)
        {
            return E;
        }
        SparseMatrix<Scalar> I(order(), order());
        I.setIdentity();
        return I;
    }
};

using LtiSystemd = LtiSystem<double>;

/// Convenience constructor; pass an empty E to mean the identity.
template <typename Scalar>
LtiSystem<Scalar> make_system(SparseMatrix<Scalar> E, SparseMatrix<Scalar> A, Matrix<Scalar> B,
                              Matrix<Scalar> C, Matrix<Scalar> D = {})
{
    LtiSystem<Scalar> sys;
    sys.have_E = E.size() != 0;
    sys.E = std::move(E);
    sys.A = std::move(A);
    sys.B = std::move(B);
    sys.C = std::move(C);
    sys.D = std::move(D);
    sys.E.makeCompressed();
    sys.A.makeCompressed();
    return sys;
}

/// Sparse copy of a dense matrix, dropping exact zeros.
template <typename Derived>
SparseMatrix<typename Derived::Scalar> to_sparse(const Eigen::MatrixBase<Derived>& M)
{
    return M.sparseView();
}

} // namespace lrmor
