// SPDX-License-Identifier: Apache-2.0
#include "lrmor/cli.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "lrmor/balancing.hpp"
#include "lrmor/bench.hpp"
#include "lrmor/lrnm.hpp"
#include "lrmor/matrix_market.hpp"

namespace lrmor::cli
{

namespace
{

template <typename... Args>
std::string format(const char* f, Args... args)
{
    char buf[256];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

/// Everything printed to stdout also goes to DIR/report.txt when --out is given.
class Report
{
public:
    explicit Report(std::ostream& out) : out_(out) {}

    Report& line(const std::string& s = {})
    {
        out_ << s << '\n';
        text_ << s << '\n';
        return *this;
    }

    void history(const std::string& title, const std::vector<double>& values)
    {
        line(title + " (" + std::to_string(values.size()) + " entries)");
        for (std::size_t k = 0; k < values.size(); ++k)
        {
            line(format("  %4zu  %.6e", k + 1, values[k]));
        }
    }

    void save(const std::string& dir) const
    {
        if (dir.empty())
        {
            return;
        }
        const std::string path = (std::filesystem::path(dir) / "report.txt").string();
        std::ofstream f(path);
        if (!f)
        {
            throw IoError(path + ": cannot open file for writing");
        }
        f << text_.str();
    }

private:
    std::ostream& out_;
    std::ostringstream text_;
};

std::string prepare_dir(const std::string& dir)
{
    if (dir.empty())
    {
        return dir;
    }
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec)
    {
        throw IoError(dir + ": cannot create directory (" + ec.message() + ")");
    }
    return dir;
}

std::string in_dir(const std::string& dir, const std::string& name)
{
    return (std::filesystem::path(dir) / name).string();
}

std::pair<double, double> parse_range(const std::string& text, const char* flag)
{
    const auto colon = text.find(':');
    try
    {
        if (colon == std::string::npos)
        {
            throw std::invalid_argument("no colon");
        }
        std::size_t used = 0;
        const std::string a = text.substr(0, colon);
        const std::string b = text.substr(colon + 1);
        const double lo = std::stod(a, &used);
        if (used != a.size())
        {
            throw std::invalid_argument("trailing text");
        }
        const double hi = std::stod(b, &used);
        if (used != b.size())
        {
            throw std::invalid_argument("trailing text");
        }
        if (!(lo > 0) || !(hi > lo))
        {
            throw std::invalid_argument("bad bounds");
        }
        return {lo, hi};
    }
    catch (const std::invalid_argument&)
    {
        throw ConfigurationError(std::string(flag) + " expects lo:hi with 0 < lo < hi, got '" + text + "'");
    }
    catch (const std::out_of_range&)
    {
        throw ConfigurationError(std::string(flag) + " value out of range: '" + text + "'");
    }
}

struct SystemArgs
{
    int demo_fd = 0;
    std::string A, E, B, C, D;

    void attach(CLI::App* sub)
    {
        sub->add_option("--demo-fd", demo_fd, "Use the FD Laplacian on an N x N grid")->check(CLI::Range(2, 4096));
        sub->add_option("--A", A, "Matrix Market file for A");
        sub->add_option("--E", E, "Matrix Market file for E (default identity)");
        sub->add_option("--B", B, "Matrix Market file for B");
        sub->add_option("--C", C, "Matrix Market file for C");
        sub->add_option("--D", D, "Matrix Market file for D (default zero)");
    }

    LtiSystemd load() const
    {
        if (demo_fd > 0)
        {
            return gen_fd_laplacian(demo_fd);
        }
        if (A.empty() || B.empty() || C.empty())
        {
            throw ConfigurationError("give --demo-fd N or all of --A, --B, --C");
        }
        return read_system(A, B, C, E, D);
    }
};

struct BenchArgs
{
    int grid = 24;
    std::string bench_dir;
    std::string mu_range = "1e-6:1e2";
    std::string omega_range = "1e-4:1e4";
    int points = 100;

    void attach(CLI::App* sub)
    {
        sub->add_option("--grid", grid, "Thermal block grid size per axis")->check(CLI::Range(8, 4096));
        sub->add_option("--bench", bench_dir, "Load A0, A1, B, C written by gen-bench from DIR");
        sub->add_option("--mu-range", mu_range, "Parameter range lo:hi");
        sub->add_option("--omega-range", omega_range, "Frequency range lo:hi");
        sub->add_option("--points", points, "Sigma-grid samples per axis")->check(CLI::Range(1, 100000));
    }

    BenchConfig config() const
    {
        BenchConfig cfg;
        cfg.grid_size = grid;
        std::tie(cfg.mu_lo, cfg.mu_hi) = parse_range(mu_range, "--mu-range");
        std::tie(cfg.omega_lo, cfg.omega_hi) = parse_range(omega_range, "--omega-range");
        cfg.samples = points;
        return cfg;
    }

    ParametricSystem<double> load(const BenchConfig& cfg) const
    {
        if (bench_dir.empty())
        {
            return gen_thermal_block_mini(cfg);
        }
        SparseMatrix<double> A0 = read_mm_sparse(in_dir(bench_dir, "A0.mtx"));
        SparseMatrix<double> A1 = read_mm_sparse(in_dir(bench_dir, "A1.mtx"));
        const Matrix<double> B = read_mm_dense(in_dir(bench_dir, "B.mtx"));
        const Matrix<double> C = read_mm_dense(in_dir(bench_dir, "C.mtx"));
        if (A0.rows() != A0.cols() || A1.rows() != A0.rows() || A1.cols() != A0.cols() || B.rows() != A0.rows()
            || C.cols() != A0.rows())
        {
            throw DimensionError(bench_dir + ": benchmark matrices have inconsistent sizes");
        }
        ParametricSystem<double> ps;
        ps.mu_lo = cfg.mu_lo;
        ps.mu_hi = cfg.mu_hi;
        ps.symmetric = SparseMatrix<double>(A0 - SparseMatrix<double>(A0.transpose())).norm() == 0.0
                       && SparseMatrix<double>(A1 - SparseMatrix<double>(A1.transpose())).norm() == 0.0;
        ps.affine_A = std::make_pair(std::move(A0), std::move(A1));
        ps.B = [B](double) { return B; };
        ps.C = [C](double) { return C; };
        ps.constant_E = ps.constant_B = ps.constant_C = ps.constant_D = true;
        return ps;
    }
};

struct TrainArgs
{
    int samples = 10;
    std::string method = "bt-tol";
    double tol = 1e-4;
    int order = 20;

    void attach(CLI::App* sub)
    {
        sub->add_option("--samples", samples, "Number of training parameters")->check(CLI::Range(1, 10000));
        sub->add_option("--method", method, "Local reduction: bt-tol, bt-fixed or irka")
            ->check(CLI::IsMember({"bt-tol", "bt-fixed", "irka"}));
        sub->add_option("--tol", tol, "Local BT error tolerance (bt-tol)")->check(CLI::PositiveNumber);
        sub->add_option("--order", order, "Local order (bt-fixed, irka)")->check(CLI::Range(1, 100000));
    }

    LocalMethod local() const
    {
        if (method == "bt-fixed")
        {
            return LocalMethod::bt_order(order);
        }
        if (method == "irka")
        {
            return LocalMethod::irka_order(order);
        }
        return LocalMethod::bt_tolerance(tol);
    }

    std::string describe() const
    {
        if (method == "bt-tol")
        {
            return format("bt-tol, tau = %.1e", tol);
        }
        return method + ", r = " + std::to_string(order);
    }
};

void write_rom(const std::string& dir, const Rom<double>& rom, bool bases)
{
    if (dir.empty())
    {
        return;
    }
    write_mm(in_dir(dir, "rom_E.mtx"), rom.E);
    write_mm(in_dir(dir, "rom_A.mtx"), rom.A);
    write_mm(in_dir(dir, "rom_B.mtx"), rom.B);
    write_mm(in_dir(dir, "rom_C.mtx"), rom.C);
    write_mm(in_dir(dir, "rom_D.mtx"), rom.D);
    if (bases)
    {
        write_mm(in_dir(dir, "V.mtx"), rom.V);
        write_mm(in_dir(dir, "W.mtx"), rom.W);
    }
}

void describe_system(Report& rep, const LtiSystemd& sys)
{
    rep.line(format("system: n = %lld, m = %lld, p = %lld, nnz(A) = %lld%s", static_cast<long long>(sys.order()),
                    static_cast<long long>(sys.inputs()), static_cast<long long>(sys.outputs()),
                    static_cast<long long>(sys.A.nonZeros()), sys.have_E ? ", general E" : ", E = I"));
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

int cmd_lyap(const SystemArgs& sa, double tol, int max_iter, const std::string& side_name, const std::string& dir,
             std::ostream& out, std::ostream& err)
{
    const auto t0 = Clock::now();
    const LtiSystemd sys = sa.load();
    const OperatorSet<double> ops(sys);
    const Side side = side_name == "observability" ? Side::observability : Side::controllability;
    AdiOptions opts;
    opts.rel_tolerance = tol;
    opts.max_iterations = max_iter;
    const LyapunovSpec<double> spec{ops, side};
    const AdiResult<double> res = lr_adi(spec, opts);
    const ResidualReport<double> direct = lyap_residual(spec, res.Z);

    Report rep(out);
    rep.line("lrmor lyap: low-rank ADI for the " + side_name + " Lyapunov equation");
    describe_system(rep, sys);
    rep.line(format("tolerance: %.3e, max iterations: %d", tol, max_iter));
    rep.history("relative residual history", res.residual_history);
    rep.line(format("steps: %d, factor rank: %lld, converged: %s", res.steps, static_cast<long long>(res.Z.rank()),
                    res.converged ? "yes" : "no"));
    rep.line(format("final relative residual: %.6e", res.residual_history.empty() ? 0.0 : res.residual_history.back()));
    rep.line(format("direct residual check: %.6e", direct.relative));
    rep.line(format("time: %.3f s", seconds_since(t0)));
    if (!dir.empty())
    {
        write_mm(in_dir(dir, "Z.mtx"), res.Z.Z);
        rep.save(dir);
    }
    if (!res.converged)
    {
        err << "lrmor lyap: no convergence within " << max_iter << " iterations\n";
        return numerical;
    }
    return ok;
}

int cmd_care(const SystemArgs& sa, double tol, const std::string& dir, std::ostream& out, std::ostream& err)
{
    const auto t0 = Clock::now();
    const LtiSystemd sys = sa.load();
    const OperatorSet<double> ops(sys);
    NewtonOptions opts;
    opts.rel_tolerance = tol;
    const RiccatiSpec<double> spec{ops, Side::observability};
    const NewtonResult<double> res = lr_newton(spec, opts);

    Report rep(out);
    rep.line("lrmor care: low-rank Kleinman-Newton for the observability Riccati equation");
    describe_system(rep, sys);
    rep.line(format("tolerance: %.3e", tol));
    rep.history("relative Newton residual history (first entry at X = 0)", res.newton_residuals);
    std::string steps = "inner ADI steps:";
    for (int s : res.inner_steps)
    {
        steps += " " + std::to_string(s);
    }
    rep.line(steps);
    std::string lam = "step sizes:";
    for (double s : res.step_sizes)
    {
        lam += format(" %.4g", s);
    }
    rep.line(lam);
    rep.line(format("factor rank: %lld, converged: %s", static_cast<long long>(res.Z.rank()),
                    res.converged ? "yes" : "no"));
    rep.line(format("final relative residual: %.6e", res.newton_residuals.back()));
    if (sys.order() <= kDenseCheckMaxOrder)
    {
        rep.line(std::string("closed loop stable: ") + (closed_loop_check(spec, res.K) ? "yes" : "no"));
    }
    rep.line(format("time: %.3f s", seconds_since(t0)));
    if (!dir.empty())
    {
        write_mm(in_dir(dir, "Z.mtx"), res.Z.Z);
        write_mm(in_dir(dir, "K.mtx"), res.K);
        rep.save(dir);
    }
    if (!res.converged)
    {
        err << "lrmor care: Newton iteration did not converge\n";
        return numerical;
    }
    return ok;
}

int cmd_bt(const SystemArgs& sa, double tol, int order, bool fixed, const std::string& dir, std::ostream& out)
{
    const auto t0 = Clock::now();
    const LtiSystemd sys = sa.load();
    const OperatorSet<double> ops(sys);
    const TruncationMode mode = fixed ? TruncationMode::by_order(order) : TruncationMode::by_tolerance(tol);
    const BtResult<double> bt = balanced_truncation(ops, mode);

    Report rep(out);
    rep.line("lrmor bt: Lyapunov balanced truncation (square root method)");
    describe_system(rep, sys);
    rep.line(fixed ? format("mode: fixed order %d", order) : format("mode: tolerance %.3e", tol));
    rep.history("controllability Gramian ADI residuals", bt.p_history);
    rep.history("observability Gramian ADI residuals", bt.q_history);
    rep.line("Hankel singular values:");
    for (std::size_t k = 0; k < bt.hsv.singular_values.size(); ++k)
    {
        rep.line(format("  %4zu  %.6e", k + 1, bt.hsv.singular_values[k]));
    }
    rep.line(format("reduced order: %lld%s", static_cast<long long>(bt.hsv.chosen_order),
                    bt.hsv.order_capped ? " (capped at numerical rank)" : ""));
    rep.line(format("error bound 2*sum(truncated): %.6e", bt.hsv.error_bound));
    rep.line(format("time: %.3f s", seconds_since(t0)));
    write_rom(dir, bt.rom, true);
    rep.save(dir);
    return ok;
}

int cmd_irka(const SystemArgs& sa, int order, double tol, int max_iter, const std::string& dir, std::ostream& out,
             std::ostream& err)
{
    const auto t0 = Clock::now();
    const LtiSystemd sys = sa.load();
    const OperatorSet<double> ops(sys);
    IrkaOptions opts;
    opts.shift_change_tol = tol;
    opts.max_iterations = max_iter;
    const IrkaResult<double> res = irka(ops, order, opts);

    Report rep(out);
    rep.line("lrmor irka: tangential iterative rational Krylov algorithm");
    describe_system(rep, sys);
    rep.line(format("order: %d, shift tolerance: %.3e", order, tol));
    rep.history("relative shift change history", res.shift_changes);
    rep.line("interpolation points:");
    for (const auto& s : res.shifts)
    {
        rep.line(format("  % .10e %+.10ei", s.real(), s.imag()));
    }
    rep.line(format("iterations: %d, converged: %s", res.iterations, res.converged ? "yes" : "no"));
    rep.line(format("time: %.3f s", seconds_since(t0)));
    write_rom(dir, res.rom, true);
    rep.save(dir);
    if (!res.converged)
    {
        err << "lrmor irka: shifts did not converge in " << max_iter << " iterations\n";
        return numerical;
    }
    return ok;
}

int cmd_gen_bench(int grid, int demo_fd, const std::string& dir, std::ostream& out)
{
    Report rep(out);
    if (demo_fd > 0)
    {
        const LtiSystemd sys = gen_fd_laplacian(demo_fd);
        write_mm(in_dir(dir, "A.mtx"), sys.A);
        write_mm(in_dir(dir, "B.mtx"), sys.B);
        write_mm(in_dir(dir, "C.mtx"), sys.C);
        rep.line("lrmor gen-bench: FD Laplacian written to " + dir + " (A.mtx, B.mtx, C.mtx; E = I)");
        describe_system(rep, sys);
        return ok;
    }
    BenchConfig cfg;
    cfg.grid_size = grid;
    const ParametricSystem<double> ps = gen_thermal_block_mini(cfg);
    write_mm(in_dir(dir, "A0.mtx"), ps.affine_A->first);
    write_mm(in_dir(dir, "A1.mtx"), ps.affine_A->second);
    write_mm(in_dir(dir, "B.mtx"), ps.B(0.0));
    write_mm(in_dir(dir, "C.mtx"), ps.C(0.0));
    rep.line("lrmor gen-bench: thermal block written to " + dir + " (A0.mtx, A1.mtx, B.mtx, C.mtx; E = I)");
    rep.line(format("grid %d x %d, n = %lld, m = 1, p = 4, A(mu) = A0 + mu*A1", grid, grid,
                    static_cast<long long>(ps.affine_A->first.rows())));
    return ok;
}

int cmd_sigma_grid(const BenchArgs& ba, const std::string& dir, std::ostream& out)
{
    const auto t0 = Clock::now();
    const BenchConfig cfg = ba.config();
    const ParametricSystem<double> ps = ba.load(cfg);
    const SigmaGrid g = sigma_grid(full_transfer(ps), cfg);
    Report rep(out);
    rep.line("lrmor sigma-grid: ||H(mu, i omega)||_2 of the full model");
    rep.line(format("n = %lld, grid %d x %d, mu in [%.1e, %.1e], omega in [%.1e, %.1e]",
                    static_cast<long long>(ps.affine_A->first.rows()), cfg.samples, cfg.samples, cfg.mu_lo,
                    cfg.mu_hi, cfg.omega_lo, cfg.omega_hi));
    rep.line(format("max sigma: %.6e", g.values.maxCoeff()));
    rep.line(format("time: %.3f s", seconds_since(t0)));
    write_csv(in_dir(dir, "sigma.csv"), g);
    rep.line("wrote " + in_dir(dir, "sigma.csv"));
    rep.save(dir);
    return ok;
}

void order_table(Report& rep, const TrainingSet<double>& ts)
{
    const bool bt = ts.method.kind != LocalMethod::Kind::irka;
    rep.line(bt ? "  sample            mu   order   ADI steps P/Q" : "  sample            mu   order   IRKA iterations");
    for (std::size_t i = 0; i < ts.size(); ++i)
    {
        std::string extra;
        if (bt)
        {
            extra = format("%zu/%zu", ts.p_histories[i].size(), ts.q_histories[i].size());
        }
        else
        {
            extra = std::to_string(ts.irka_iterations[i]) + (ts.irka_converged[i] ? "" : " (not converged)");
        }
        rep.line(format("  %6zu  %12.4e  %6lld   %s", i + 1, ts.samples[i], static_cast<long long>(ts.roms[i].order()),
                        extra.c_str()));
    }
}

void error_summary(Report& rep, const GridComparison& cmp)
{
    std::vector<double> v;
    for (Index k = 0; k < cmp.error.values.size(); ++k)
    {
        if (std::isfinite(cmp.error.values.data()[k]))
        {
            v.push_back(cmp.error.values.data()[k]);
        }
    }
    std::sort(v.begin(), v.end());
    rep.line(format("relative sigma error grid: %zu x %zu cells, %zu finite", cmp.error.mu.size(),
                    cmp.error.omega.size(), v.size()));
    if (!v.empty())
    {
        rep.line(format("  max %.3e, median %.3e", v.back(), v[v.size() / 2]));
    }
    for (double level : {1e-2, 1e-4, 1e-6})
    {
        rep.line(format("  cells with error <= %.0e: %.1f%%", level, 100.0 * cmp.fraction_below(level)));
    }
}

void write_grids(const std::string& dir, const GridComparison& cmp, Report& rep)
{
    write_csv(in_dir(dir, "sigma_full.csv"), cmp.full);
    write_csv(in_dir(dir, "sigma_rom.csv"), cmp.reduced);
    write_csv(in_dir(dir, "error.csv"), cmp.error);
    rep.line("wrote sigma_full.csv, sigma_rom.csv, error.csv to " + dir);
}

int cmd_pmor_piecewise(const BenchArgs& ba, const TrainArgs& ta, double trunc_tol, bool one_sided,
                       const std::string& dir, std::ostream& out)
{
    const auto t0 = Clock::now();
    const BenchConfig cfg = ba.config();
    const ParametricSystem<double> ps = ba.load(cfg);
    const TrainingSet<double> ts =
        train(ps, log_nodes(cfg.mu_lo, cfg.mu_hi, ta.samples), ta.local(), SamplingRule::log_equispaced);
    const double t_train = seconds_since(t0);
    const PiecewiseRom<double> prom = piecewise_assemble(ts, trunc_tol, one_sided);
    const GridComparison cmp = compare_grid(full_transfer(ps), reduced_transfer(prom),
                                            log_nodes(cfg.mu_lo, cfg.mu_hi, cfg.samples),
                                            log_nodes(cfg.omega_lo, cfg.omega_hi, cfg.samples));

    Report rep(out);
    rep.line("lrmor pmor-piecewise: global basis from concatenated local bases");
    rep.line(format("n = %lld, %d log-spaced samples in [%.1e, %.1e], local method %s",
                    static_cast<long long>(ps.affine_A->first.rows()), ta.samples, cfg.mu_lo, cfg.mu_hi,
                    ta.describe().c_str()));
    rep.line(std::string("projection: ") + (one_sided ? "one-sided (W = V)" : "two-sided"));
    rep.line("local reduced orders:");
    order_table(rep, ts);
    rep.line(format("  sum of local orders: %lld", static_cast<long long>(prom.total_order)));
    rep.line(format("  global order after truncation (tol %.1e): %lld  (rank V %lld, rank W %lld)", trunc_tol,
                    static_cast<long long>(prom.order()), static_cast<long long>(prom.rank_V),
                    static_cast<long long>(prom.rank_W)));
    error_summary(rep, cmp);
    rep.line(format("time: training %.2f s, total %.2f s", t_train, seconds_since(t0)));
    if (!dir.empty())
    {
        write_mm(in_dir(dir, "V.mtx"), prom.V);
        write_mm(in_dir(dir, "W.mtx"), prom.W);
        if (prom.A_hat)
        {
            write_mm(in_dir(dir, "rom_A0.mtx"), prom.A_hat->first);
            write_mm(in_dir(dir, "rom_A1.mtx"), prom.A_hat->second);
        }
        write_grids(dir, cmp, rep);
        rep.save(dir);
    }
    return ok;
}

int cmd_pmor_interp(const BenchArgs& ba, const TrainArgs& ta, const std::string& basis_name,
                    const std::string& sampling, const std::string& dir, std::ostream& out)
{
    const auto t0 = Clock::now();
    const BenchConfig cfg = ba.config();
    const ParametricSystem<double> ps = ba.load(cfg);
    const InterpolationBasis basis =
        basis_name == "bspline2" ? InterpolationBasis::bspline2 : InterpolationBasis::lagrange;
    const bool cheb = sampling.empty() ? basis == InterpolationBasis::lagrange : sampling == "chebyshev";
    const std::vector<double> samples = cheb ? chebyshev_nodes(cfg.mu_lo, cfg.mu_hi, ta.samples)
                                             : log_nodes(cfg.mu_lo, cfg.mu_hi, ta.samples);
    const TrainingSet<double> ts =
        train(ps, samples, ta.local(), cheb ? SamplingRule::chebyshev : SamplingRule::log_equispaced);
    const double t_train = seconds_since(t0);
    const InterpolatoryRom<double> irom = interpolatory_assemble(ts, basis);
    const GridComparison cmp = compare_grid(full_transfer(ps), reduced_transfer(irom),
                                            log_nodes(cfg.mu_lo, cfg.mu_hi, cfg.samples),
                                            log_nodes(cfg.omega_lo, cfg.omega_hi, cfg.samples));

    Report rep(out);
    rep.line("lrmor pmor-interp: transfer function interpolation, block-diagonal realization");
    rep.line(format("n = %lld, %d %s samples in [%.1e, %.1e], local method %s",
                    static_cast<long long>(ps.affine_A->first.rows()), ta.samples, cheb ? "Chebyshev" : "log-spaced",
                    cfg.mu_lo, cfg.mu_hi, ta.describe().c_str()));
    rep.line("basis: " + basis_name + " in log10(mu)");
    rep.line("local reduced orders:");
    order_table(rep, ts);
    rep.line(format("  interpolatory ROM order (sum of local orders): %lld", static_cast<long long>(irom.order())));
    error_summary(rep, cmp);
    rep.line(format("time: training %.2f s, total %.2f s", t_train, seconds_since(t0)));
    if (!dir.empty())
    {
        write_mm(in_dir(dir, "rom_E.mtx"), irom.E);
        write_mm(in_dir(dir, "rom_A.mtx"), irom.A);
        write_mm(in_dir(dir, "rom_B.mtx"), irom.B);
        for (std::size_t i = 0; i < irom.C_blocks.size(); ++i)
        {
            write_mm(in_dir(dir, "rom_C" + std::to_string(i + 1) + ".mtx"), irom.C_blocks[i]);
        }
        write_grids(dir, cmp, rep);
        rep.save(dir);
    }
    return ok;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Low-rank solvers for sparse Lyapunov and Riccati equations, and model reduction", "lrmor"};
    app.require_subcommand(1);
    app.option_defaults()->always_capture_default();

    SystemArgs sys_args;
    BenchArgs bench_args;
    TrainArgs train_args;
    // CLI11 writes defaults into the bound variable, so each subcommand needs its own.
    std::string out_dir;
    std::string bench_out = ".";
    double lyap_tol = 1e-10, care_tol = 1e-9, bt_tol = 1e-4, irka_tol = 1e-6;
    int lyap_iter = 200, irka_iter = 100;
    int bt_order = 0, irka_order = 10;
    std::string side = "controllability";
    int gen_grid = 24;
    int gen_fd = 0;
    double trunc_tol = Eigen::NumTraits<double>::epsilon();
    bool one_sided = false;
    std::string basis = "lagrange";
    std::string sampling;

    auto* lyap = app.add_subcommand("lyap", "Solve a Lyapunov equation by low-rank ADI");
    sys_args.attach(lyap);
    lyap->add_option("--tol", lyap_tol, "Relative residual tolerance")->check(CLI::PositiveNumber);
    lyap->add_option("--max-iter", lyap_iter, "Maximum ADI steps")->check(CLI::PositiveNumber);
    lyap->add_option("--side", side, "controllability or observability")
        ->check(CLI::IsMember({"controllability", "observability"}));
    lyap->add_option("--out", out_dir, "Output directory");

    auto* care = app.add_subcommand("care", "Solve a Riccati equation by low-rank Kleinman-Newton");
    sys_args.attach(care);
    care->add_option("--tol", care_tol, "Relative residual tolerance")->check(CLI::PositiveNumber);
    care->add_option("--out", out_dir, "Output directory");

    auto* bt = app.add_subcommand("bt", "Balanced truncation");
    sys_args.attach(bt);
    bt->add_option("--tol", bt_tol, "H-infinity error bound tolerance")->check(CLI::NonNegativeNumber);
    bt->add_option("--order", bt_order, "Fixed reduced order (overrides --tol)")->check(CLI::NonNegativeNumber);
    bt->add_option("--out", out_dir, "Output directory");

    auto* irka_cmd = app.add_subcommand("irka", "Tangential IRKA");
    sys_args.attach(irka_cmd);
    irka_cmd->add_option("--order", irka_order, "Reduced order")->check(CLI::PositiveNumber);
    irka_cmd->add_option("--tol", irka_tol, "Relative shift change tolerance")->check(CLI::PositiveNumber);
    irka_cmd->add_option("--max-iter", irka_iter, "Maximum iterations")->check(CLI::PositiveNumber);
    irka_cmd->add_option("--out", out_dir, "Output directory");

    auto* gen = app.add_subcommand("gen-bench", "Write benchmark matrices as Matrix Market files");
    gen->add_option("--grid", gen_grid, "Thermal block grid size per axis")->check(CLI::Range(8, 4096));
    gen->add_option("--demo-fd", gen_fd, "Write the FD Laplacian on an N x N grid instead")->check(CLI::Range(2, 4096));
    gen->add_option("--out", bench_out, "Output directory");

    auto* sigma = app.add_subcommand("sigma-grid", "Sigma-magnitude grid of the thermal block");
    bench_args.attach(sigma);
    sigma->add_option("--out", bench_out, "Output directory");

    auto* pw = app.add_subcommand("pmor-piecewise", "Piecewise parametric reduction with global bases");
    bench_args.attach(pw);
    train_args.attach(pw);
    pw->add_option("--trunc-tol", trunc_tol, "Relative SVD truncation tolerance")->check(CLI::NonNegativeNumber);
    pw->add_flag("--one-sided", one_sided, "Merge V and W and use W = V");
    pw->add_option("--out", out_dir, "Output directory");

    auto* ip = app.add_subcommand("pmor-interp", "Transfer function interpolation over the parameter");
    bench_args.attach(ip);
    train_args.attach(ip);
    ip->add_option("--basis", basis, "lagrange or bspline2")->check(CLI::IsMember({"lagrange", "bspline2"}));
    ip->add_option("--sampling", sampling, "chebyshev or log (default: chebyshev for lagrange)")
        ->check(CLI::IsMember({"chebyshev", "log"}));
    ip->add_option("--out", out_dir, "Output directory");

    std::vector<const char*> argv;
    for (const auto& a : args)
    {
        argv.push_back(a.c_str());
    }
    try
    {
        app.parse(static_cast<int>(argv.size()), argv.data());
    }
    catch (const CLI::ParseError& e)
    {
        return app.exit(e, out, err) == 0 ? ok : usage;
    }

    try
    {
        if (gen->parsed() || sigma->parsed())
        {
            out_dir = bench_out;
        }
        prepare_dir(out_dir);
        if (lyap->parsed())
        {
            return cmd_lyap(sys_args, lyap_tol, lyap_iter, side, out_dir, out, err);
        }
        if (care->parsed())
        {
            return cmd_care(sys_args, care_tol, out_dir, out, err);
        }
        if (bt->parsed())
        {
            return cmd_bt(sys_args, bt_tol, bt_order, bt->count("--order") > 0, out_dir, out);
        }
        if (irka_cmd->parsed())
        {
            return cmd_irka(sys_args, irka_order, irka_tol, irka_iter, out_dir, out, err);
        }
        if (gen->parsed())
        {
            return cmd_gen_bench(gen_grid, gen_fd, out_dir, out);
        }
        if (sigma->parsed())
        {
            return cmd_sigma_grid(bench_args, out_dir, out);
        }
        if (pw->parsed())
        {
            return cmd_pmor_piecewise(bench_args, train_args, trunc_tol, one_sided, out_dir, out);
        }
        if (ip->parsed())
        {
            return cmd_pmor_interp(bench_args, train_args, basis, sampling, out_dir, out);
        }
    }
    catch (const IoError& e)
    {
        err << "lrmor: " << e.what() << '\n';
        return usage;
    }
    catch (const DimensionError& e)
    {
        err << "lrmor: invalid input: " << e.what() << '\n';
        return usage;
    }
    catch (const ConfigurationError& e)
    {
        err << "lrmor: " << e.what() << '\n';
        return usage;
    }
    catch (const std::exception& e)
    {
        err << "lrmor: numerical failure: " << e.what() << '\n';
        return numerical;
    }
    return usage;
}

int run(int argc, const char* const* argv)
{
    std::vector<std::string> args(argv, argv + argc);
    return run(args, std::cout, std::cerr);
}

} // namespace lrmor::cli
