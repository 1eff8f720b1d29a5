// SPDX-License-Identifier: Apache-2.0
#include "lrmor/bench.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <limits>
#include <sstream>
#include <thread>

#include "lrmor/matrix_market.hpp"

namespace lrmor
{

namespace
{

using Triplets = std::vector<Eigen::Triplet<double, int>>;

SparseMatrix<double> assemble(Index n, const Triplets& t)
{
    SparseMatrix<double> M(n, n);
    M.setFromTriplets(t.begin(), t.end());
    M.makeCompressed();
    return M;
}

} // namespace

LtiSystemd gen_fd_laplacian(int grid_size)
{
    if (grid_size < 2)
    {
        throw ConfigurationError("gen_fd_laplacian: grid_size must be at least 2");
    }
    const int N = grid_size;
    const Index n = static_cast<Index>(N) * N;
    const double h = 1.0 / (N + 1);
    const double s = 1.0 / (h * h);
    auto id = [N](int i, int j) { return i + N * j; };

    Triplets t;
    t.reserve(static_cast<std::size_t>(5 * n));
    for (int j = 0; j < N; ++j)
    {
        for (int i = 0; i < N; ++i)
        {
            const int k = id(i, j);
            t.emplace_back(k, k, -4.0 * s);
            if (i > 0)
            {
                t.emplace_back(k, id(i - 1, j), s);
            }
            if (i + 1 < N)
            {
                t.emplace_back(k, id(i + 1, j), s);
            }
            if (j > 0)
            {
                t.emplace_back(k, id(i, j - 1), s);
            }
            if (j + 1 < N)
            {
                t.emplace_back(k, id(i, j + 1), s);
            }
        }
    }

    const int strip = std::max(1, N / 4);
    Matrix<double> B = Matrix<double>::Zero(n, 1);
    Matrix<double> C = Matrix<double>::Zero(1, n);
    for (int j = 0; j < N; ++j)
    {
        for (int i = 0; i < strip; ++i)
        {
            B(id(i, j), 0) = 1.0;
            C(0, id(N - 1 - i, j)) = 1.0 / (strip * N);
        }
    }
    return make_system<double>(SparseMatrix<double>(), assemble(n, t), std::move(B), std::move(C));
}

ParametricSystem<double> gen_thermal_block_mini(const BenchConfig& cfg)
{
    const int N = cfg.grid_size;
    if (N < 8)
    {
        throw ConfigurationError("gen_thermal_block_mini: grid_size must be at least 8 to hold four blocks");
    }
    if (!(cfg.mu_lo > 0) || !(cfg.mu_hi >= cfg.mu_lo))
    {
        throw ConfigurationError("gen_thermal_block_mini: need 0 < mu_lo <= mu_hi");
    }
    const Index n = static_cast<Index>(N) * N;
    const double h = 1.0 / N;
    const double s = 1.0 / (h * h);
    auto id = [N](int i, int j) { return i + N * j; };

    // Conductivity kappa = k0 + mu * k1 per cell; block q occupies quadrant q.
    const int half = N / 2;
    const int off = N / 8;
    const int width = N / 4;
    std::vector<double> k0(n, 1.0), k1(n, 0.0);
    std::vector<int> block(n, -1);
    for (int q = 0; q < 4; ++q)
    {
        const int x0 = (q % 2) * half + off;
        const int y0 = (q / 2) * half + off;
        for (int j = y0; j < y0 + width; ++j)
        {
            for (int i = x0; i < x0 + width; ++i)
            {
                const int k = id(i, j);
                k0[k] = 0.0;
                k1[k] = cfg.coefficients[q];
                block[k] = q;
            }
        }
    }

    Triplets t0, t1;
    auto couple = [&](int a, int b) {
        const double f0 = 0.5 * (k0[a] + k0[b]) * s;
        const double f1 = 0.5 * (k1[a] + k1[b]) * s;
        for (auto [t, f] : {std::pair<Triplets*, double>{&t0, f0}, {&t1, f1}})
        {
            if (f != 0.0)
            {
                t->emplace_back(a, a, -f);
                t->emplace_back(b, b, -f);
                t->emplace_back(a, b, f);
                t->emplace_back(b, a, f);
            }
        }
    };
    for (int j = 0; j < N; ++j)
    {
        for (int i = 0; i < N; ++i)
        {
            if (i + 1 < N)
            {
                couple(id(i, j), id(i + 1, j));
            }
            if (j + 1 < N)
            {
                couple(id(i, j), id(i, j + 1));
            }
        }
    }
    // Dirichlet top edge at half a cell distance.
    for (int i = 0; i < N; ++i)
    {
        const int k = id(i, N - 1);
        if (k0[k] != 0.0)
        {
            t0.emplace_back(k, k, -2.0 * k0[k] * s);
        }
        if (k1[k] != 0.0)
        {
            t1.emplace_back(k, k, -2.0 * k1[k] * s);
        }
    }

    Matrix<double> B = Matrix<double>::Zero(n, 1);
    for (int i = 0; i < N; ++i)
    {
        B(id(i, 0), 0) = 1.0 / h;
    }
    Matrix<double> C = Matrix<double>::Zero(4, n);
    const double cells = static_cast<double>(width) * width;
    for (Index k = 0; k < n; ++k)
    {
        if (block[k] >= 0)
        {
            C(block[k], k) = 1.0 / cells;
        }
    }

    ParametricSystem<double> ps;
    ps.mu_lo = cfg.mu_lo;
    ps.mu_hi = cfg.mu_hi;
    ps.affine_A = std::make_pair(assemble(n, t0), assemble(n, t1));
    ps.B = [B](double) { return B; };
    ps.C = [C](double) { return C; };
    ps.constant_E = true;
    ps.constant_B = true;
    ps.constant_C = true;
    ps.constant_D = true;
    ps.symmetric = true;
    return ps;
}

TransferFn full_transfer(const ParametricSystem<double>& psys)
{
    auto ps = std::make_shared<const ParametricSystem<double>>(psys);
    return [ps](double mu, std::complex<double> s) {
        const OperatorSet<double> ops(ps->at(mu));
        return transfer_eval(ops, s);
    };
}

namespace
{

double spectral_norm(const ComplexMatrix<double>& H)
{
    if (H.size() == 0)
    {
        return 0.0;
    }
    Eigen::JacobiSVD<ComplexMatrix<double>> svd(H);
    return svd.singularValues()(0);
}

/// Runs body(i) for every μ row, spread over the available cores.
template <typename Body>
void for_rows(std::size_t rows, Body&& body)
{
    const std::size_t workers =
        std::max<std::size_t>(1, std::min<std::size_t>(rows, std::thread::hardware_concurrency()));
    if (workers <= 1)
    {
        for (std::size_t i = 0; i < rows; ++i)
        {
            body(i);
        }
        return;
    }
    std::vector<std::future<void>> jobs;
    for (std::size_t w = 0; w < workers; ++w)
    {
        jobs.push_back(std::async(std::launch::async, [&, w] {
            for (std::size_t i = w; i < rows; i += workers)
            {
                body(i);
            }
        }));
    }
    for (auto& j : jobs)
    {
        j.get();
    }
}

SigmaGrid empty_grid(const std::vector<double>& mu, const std::vector<double>& omega)
{
    SigmaGrid g;
    g.mu = mu;
    g.omega = omega;
    g.values = Matrix<double>::Constant(static_cast<Index>(mu.size()), static_cast<Index>(omega.size()),
                                        std::numeric_limits<double>::quiet_NaN());
    return g;
}

} // namespace

SigmaGrid sigma_grid(const TransferFn& H, const std::vector<double>& mu, const std::vector<double>& omega)
{
    SigmaGrid g = empty_grid(mu, omega);
    for_rows(mu.size(), [&](std::size_t i) {
        for (std::size_t j = 0; j < omega.size(); ++j)
        {
            try
            {
                g.values(i, j) = spectral_norm(H(mu[i], {0.0, omega[j]}));
            }
            catch (const SingularError&)
            {
            }
        }
    });
    return g;
}

SigmaGrid sigma_grid(const TransferFn& H, const BenchConfig& cfg)
{
    return sigma_grid(H, log_nodes(cfg.mu_lo, cfg.mu_hi, cfg.samples),
                      log_nodes(cfg.omega_lo, cfg.omega_hi, cfg.samples));
}

double GridComparison::fraction_below(double level) const
{
    const Index total = error.values.size();
    if (total == 0)
    {
        return 0.0;
    }
    Index hit = 0;
    for (Index k = 0; k < total; ++k)
    {
        const double v = error.values.data()[k];
        if (std::isfinite(v) && v <= level)
        {
            ++hit;
        }
    }
    return static_cast<double>(hit) / static_cast<double>(total);
}

GridComparison compare_grid(const TransferFn& H, const TransferFn& Hr, const std::vector<double>& mu,
                            const std::vector<double>& omega)
{
    GridComparison c{empty_grid(mu, omega), empty_grid(mu, omega), empty_grid(mu, omega)};
    for_rows(mu.size(), [&](std::size_t i) {
        for (std::size_t j = 0; j < omega.size(); ++j)
        {
            const std::complex<double> s(0.0, omega[j]);
            ComplexMatrix<double> full, red;
            bool have_full = false, have_red = false;
            try
            {
                full = H(mu[i], s);
                c.full.values(i, j) = spectral_norm(full);
                have_full = true;
            }
            catch (const SingularError&)
            {
            }
            try
            {
                red = Hr(mu[i], s);
                c.reduced.values(i, j) = spectral_norm(red);
                have_red = true;
            }
            catch (const SingularError&)
            {
            }
            if (have_full && have_red)
            {
                const double ref = c.full.values(i, j);
                const double diff = spectral_norm(full - red);
                c.error.values(i, j) = ref > 0.0 ? diff / ref : diff;
            }
        }
    });
    return c;
}

void write_csv(const std::string& path, const SigmaGrid& grid)
{
    std::ofstream out(path);
    if (!out)
    {
        throw IoError(path + ": cannot open file for writing");
    }
    out << "mu,omega,value\n";
    char buf[96];
    for (std::size_t i = 0; i < grid.mu.size(); ++i)
    {
        for (std::size_t j = 0; j < grid.omega.size(); ++j)
        {
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", grid.mu[i], grid.omega[j], grid.values(i, j));
            out << buf;
        }
    }
    if (!out)
    {
        throw IoError(path + ": write failed");
    }
}

SigmaGrid read_csv(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
    {
        throw IoError(path + ": cannot open file");
    }
    std::string line;
    if (!std::getline(in, line) || line.rfind("mu,omega,value", 0) != 0)
    {
        throw IoError(path + ": missing 'mu,omega,value' header");
    }
    std::vector<std::array<double, 3>> rows;
    while (std::getline(in, line))
    {
        if (line.empty() || line == "\r")
        {
            continue;
        }
        std::array<double, 3> r{};
        std::size_t pos = 0;
        for (int f = 0; f < 3; ++f)
        {
            const std::size_t next = line.find(',', pos);
            const std::string cell = line.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
            try
            {
                r[f] = std::stod(cell);
            }
            catch (const std::exception&)
            {
                if (cell.find("nan") != std::string::npos)
                {
                    r[f] = std::numeric_limits<double>::quiet_NaN();
                }
                else
                {
                    throw IoError(path + ": malformed row '" + line + "'");
                }
            }
            if (f < 2 && next == std::string::npos)
            {
                throw IoError(path + ": malformed row '" + line + "'");
            }
            pos = next + 1;
        }
        rows.push_back(r);
    }

    SigmaGrid g;
    for (const auto& r : rows)
    {
        if (g.mu.empty() || g.mu.back() != r[0])
        {
            g.mu.push_back(r[0]);
        }
        if (g.mu.size() == 1)
        {
            g.omega.push_back(r[1]);
        }
    }
    if (g.mu.size() * g.omega.size() != rows.size())
    {
        throw IoError(path + ": rows do not form a full mu x omega grid");
    }
    g.values.resize(static_cast<Index>(g.mu.size()), static_cast<Index>(g.omega.size()));
    for (std::size_t k = 0; k < rows.size(); ++k)
    {
        const std::size_t i = k / g.omega.size();
        const std::size_t j = k % g.omega.size();
        if (rows[k][0] != g.mu[i] || rows[k][1] != g.omega[j])
        {
            throw IoError(path + ": rows are not in mu-major grid order");
        }
        g.values(static_cast<Index>(i), static_cast<Index>(j)) = rows[k][2];
    }
    return g;
}

} // namespace lrmor
