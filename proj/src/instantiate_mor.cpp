// SPDX-License-Identifier: Apache-2.0
// Explicit instantiations for double; headers declare them extern.

#include "lrmor/pmor.hpp"

namespace lrmor
{

template BtResult<double> square_root_method(const OperatorSet<double>&, const LowRankFactor<double>&,
                                             const LowRankFactor<double>&, const TruncationMode&);
template BtResult<double> balanced_truncation(const OperatorSet<double>&, const TruncationMode&, const AdiOptions&);
template IrkaResult<double> irka(const OperatorSet<double>&, Index, const IrkaOptions&);

template TrainingSet<double> train(const ParametricSystem<double>&, std::vector<double>, const LocalMethod&,
                                   SamplingRule);
template PiecewiseRom<double> piecewise_assemble(const TrainingSet<double>&, double, bool);
template InterpolatoryRom<double> interpolatory_assemble(const TrainingSet<double>&, InterpolationBasis);

} // namespace lrmor
