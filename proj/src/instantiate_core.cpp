// SPDX-License-Identifier: Apache-2.0
// Explicit instantiations for double; headers declare them extern.

#include "lrmor/lrnm.hpp"

namespace lrmor
{

template class OperatorSet<double>;

template ResidualReport<double> lyap_residual(const LyapunovSpec<double>&, const LowRankFactor<double>&);
template ResidualReport<double> riccati_residual(const RiccatiSpec<double>&, const LowRankFactor<double>&);
template Matrix<double> dense_lyap_solve(const Matrix<double>&, const Matrix<double>&, const Matrix<double>&);
template Matrix<double> dense_are_solve(const Matrix<double>&, const Matrix<double>&, const Matrix<double>&,
                                        const Matrix<double>&);

template ShiftSet<double> projection_shifts(const OperatorSet<double>&, const Matrix<double>&);
template ShiftSet<double> heuristic_shifts(const OperatorSet<double>&, int, int, int);
template AdiResult<double> lr_adi(const LyapunovSpec<double>&, const AdiOptions&);

template NewtonResult<double> lr_newton(const RiccatiSpec<double>&, const NewtonOptions&);

} // namespace lrmor
