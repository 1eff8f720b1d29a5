// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <string>

#include "lrmor/pmor.hpp"

namespace lrmor
{

/// 5-point Dirichlet Laplacian on the unit square with grid_size² interior
/// nodes, h = 1/(grid_size + 1). E = I, B is the indicator of the left strip
/// (first max(1, N/4) columns), C averages over the mirrored right strip.
LtiSystemd gen_fd_laplacian(int grid_size);

struct BenchConfig
{
    int grid_size = 24;
    double mu_lo = 1e-6;
    double mu_hi = 1e2;
    std::array<double, 4> coefficients{0.2, 0.4, 0.6, 0.8};
    double omega_lo = 1e-4;
    double omega_hi = 1e4;
    /// Sigma-grid samples per axis.
    int samples = 100;
};

/// Thermal block stand-in: cell-centred finite volumes on an N×N grid of the
/// unit square with four square inclusions (one per quadrant, side N/4, offset
/// N/8) of conductivity cᵢ·μ in a background of conductivity 1. Face
/// conductivities are arithmetic means, so A(μ) = A₀ + μ A₁ exactly.
///
/// Top edge: Dirichlet zero. Left/right: insulated. Bottom: heat flux input
/// (one input). Outputs: mean temperature of each inclusion (four outputs).
ParametricSystem<double> gen_thermal_block_mini(const BenchConfig& cfg);

/// Samples of ‖H(μ, iω)‖₂, or of a relative error, on a μ × ω grid.
/// values(i, j) belongs to (mu[i], omega[j]); NaN marks a singular point.
struct SigmaGrid
{
    std::vector<double> mu;
    std::vector<double> omega;
    Matrix<double> values;
};

using TransferFn = std::function<ComplexMatrix<double>(double mu, std::complex<double> s)>;

/// Full-order transfer function of a parametric system (one sparse
/// factorization per evaluation).
TransferFn full_transfer(const ParametricSystem<double>& psys);

template <typename Prom>
TransferFn reduced_transfer(const Prom& prom)
{
    return [prom](double mu, std::complex<double> s) { return rom_transfer_eval(prom, mu, s); };
}

/// ‖H(μ, iω)‖₂ over the grid.
SigmaGrid sigma_grid(const TransferFn& H, const std::vector<double>& mu, const std::vector<double>& omega);

/// Log-spaced grid from cfg (cfg.samples points per axis).
SigmaGrid sigma_grid(const TransferFn& H, const BenchConfig& cfg);

struct GridComparison
{
    SigmaGrid full;
    SigmaGrid reduced;
    /// ‖H − Ĥ‖₂ / ‖H‖₂ per cell.
    SigmaGrid error;

    /// Fraction of finite error cells at or below `level`, over all cells.
    double fraction_below(double level) const;
};

GridComparison compare_grid(const TransferFn& H, const TransferFn& Hr, const std::vector<double>& mu,
                            const std::vector<double>& omega);

/// CSV with header `mu,omega,value`, one row per cell in row-major (μ-major)
/// order, 17 significant digits.
void write_csv(const std::string& path, const SigmaGrid& grid);
SigmaGrid read_csv(const std::string& path);

} // namespace lrmor
