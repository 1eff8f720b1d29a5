// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "lrmor/bench.hpp"
#include "lrmor/pmor.hpp"
#include "oracles.hpp"

using namespace lrmor;
using oracle::CMat;
using oracle::Cplx;
using oracle::Mat;

namespace
{

ParametricSystem<double> small_block(int grid = 12)
{
    BenchConfig cfg;
    cfg.grid_size = grid;
    return gen_thermal_block_mini(cfg);
}

/// Scalar system a(μ) = −(1 + μ), b = c = 1.
ParametricSystem<double> scalar_family()
{
    ParametricSystem<double> ps;
    SparseMatrix<double> a0(1, 1), a1(1, 1);
    a0.insert(0, 0) = -1;
    a1.insert(0, 0) = -1;
    ps.affine_A = std::make_pair(a0, a1);
    ps.B = [](double) { return Mat(Mat::Ones(1, 1)); };
    ps.C = [](double) { return Mat(Mat::Ones(1, 1)); };
    ps.mu_lo = 0.1;
    ps.mu_hi = 10;
    ps.constant_B = ps.constant_C = true;
    return ps;
}

CMat full_h(const ParametricSystem<double>& ps, double mu, Cplx s)
{
    return transfer_eval(OperatorSet<double>(ps.at(mu)), s);
}

} // namespace

TEST_CASE("sampling rules")
{
    const auto l = log_nodes(1e-6, 1e2, 10);
    REQUIRE(l.size() == 10);
    CHECK(l.front() == doctest::Approx(1e-6));
    CHECK(l.back() == doctest::Approx(1e2));
    for (std::size_t i = 2; i < l.size(); ++i)
        CHECK(std::abs(l[i] / l[i - 1] - l[1] / l[0]) <= 1e-12 * (l[1] / l[0]));
    const auto c = chebyshev_nodes(1e-6, 1e2, 10);
    for (std::size_t i = 1; i < c.size(); ++i)
        CHECK(c[i] > c[i - 1]);
    CHECK(c.front() > 1e-6);
    CHECK(c.back() < 1e2);
    // roots of T_10 mapped to log10 μ
    for (int i = 0; i < 10; ++i)
    {
        const double t = std::cos(M_PI * (2 * (9 - i) + 1) / 20.0);
        CHECK(std::log10(c[i]) == doctest::Approx(-2 + 4 * t).epsilon(1e-12));
    }
}

TEST_CASE("interpolation coefficients")
{
    const std::vector<double> x{-6, -3, -1, 0.5, 2};
    for (std::size_t i = 0; i < x.size(); ++i)
    {
        const auto l = lagrange_coefficients(x, x[i]);
        for (std::size_t j = 0; j < x.size(); ++j)
            CHECK(std::abs(l[j] - (i == j ? 1.0 : 0.0)) <= 1e-12);
        const auto b = bspline2_coefficients(x, x[i]);
        for (std::size_t j = 0; j < x.size(); ++j)
            CHECK(std::abs(b[j] - (i == j ? 1.0 : 0.0)) <= 1e-12);
    }
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(-6, 2);
    for (int k = 0; k < 50; ++k)
    {
        const double t = u(rng);
        const auto b = bspline2_coefficients(x, t);
        double sum = 0;
        for (double v : b)
        {
            CHECK((v >= 0 && v <= 1));
            sum += v;
        }
        CHECK(std::abs(sum - 1) <= 1e-12);
        double lsum = 0;
        for (double v : lagrange_coefficients(x, t))
            lsum += v;
        CHECK(std::abs(lsum - 1) <= 1e-12);
    }
}

TEST_CASE("thermal block generator")
{
    const auto ps = small_block(16);
    const auto sys = ps.at(0.5);
    CHECK(sys.order() == 256);
    CHECK(sys.inputs() == 1);
    CHECK(sys.outputs() == 4);
    for (double mu : {0.0, 1e-3, 10.0})
    {
        const Mat A(ps.A_at(mu));
        CHECK((A - A.transpose()).norm() == 0.0);
    }
    const Mat A = Mat(ps.A_at(1.0));
    CHECK(Eigen::SelfAdjointEigenSolver<Mat>(A).eigenvalues().maxCoeff() < 0);
    BenchConfig bad;
    bad.grid_size = 4;
    CHECK_THROWS_AS(gen_thermal_block_mini(bad), ConfigurationError);
}

TEST_CASE("training")
{
    const auto ps = small_block();
    auto one = train(ps, std::vector<double>{1.0}, LocalMethod::bt_tolerance(1e-4));
    CHECK(one.size() == 1);
    auto ir = train(ps, log_nodes(1e-3, 1e1, 4), LocalMethod::irka_order(4));
    for (Index r : ir.local_orders())
        CHECK(r == 4);
    auto bt = train(ps, log_nodes(1e-3, 1e1, 4), LocalMethod::bt_tolerance(1e-4));
    for (std::size_t i = 0; i < bt.size(); ++i)
    {
        CHECK(bt.hsv[i].error_bound <= 1e-4);
        CHECK(!bt.p_histories[i].empty());
    }
    CHECK_THROWS_AS(train(ps, std::vector<double>{1.0, 0.5}, LocalMethod::bt_order(3)), ConfigurationError);
    CHECK_THROWS_AS(train(ps, std::vector<double>{}, LocalMethod::bt_order(3)), ConfigurationError);
}

TEST_CASE("piecewise assembly")
{
    SUBCASE("scalar single sample reproduces the full model")
    {
        const auto ps = scalar_family();
        auto ts = train(ps, std::vector<double>{1.0}, LocalMethod::bt_order(1));
        auto pr = piecewise_assemble(ts);
        for (double mu : {0.1, 1.0, 7.0})
            for (double w : {0.0, 1.0, 30.0})
                CHECK(std::abs(rom_transfer_eval(pr, mu, Cplx(0, w))(0, 0) - 1.0 / (Cplx(0, w) + 1.0 + mu)) <= 1e-13);
    }

    const auto ps = small_block();
    auto ts = train(ps, log_nodes(1e-4, 1e1, 4), LocalMethod::bt_tolerance(1e-4));

    SUBCASE("single sample matches the local ROM")
    {
        TrainingSet<double> one = ts;
        one.samples.resize(1);
        one.roms.resize(1);
        auto pr = piecewise_assemble(one);
        const double mu = one.samples[0];
        for (double w : {1e-2, 1.0, 1e2})
        {
            const CMat a = rom_transfer_eval(pr, mu, Cplx(0, w));
            const CMat b = transfer_eval(one.roms[0], Cplx(0, w));
            CHECK((a - b).norm() <= 1e-8 * b.norm());
        }
    }

    SUBCASE("duplicate samples do not raise the rank")
    {
        auto pr = piecewise_assemble(ts);
        TrainingSet<double> dup = ts;
        dup.samples.push_back(ts.samples.back() * 2);
        dup.roms.push_back(ts.roms.back());
        auto pd = piecewise_assemble(dup);
        CHECK(pd.order() == pr.order());
    }

    SUBCASE("bases, projections and node accuracy")
    {
        for (bool one_sided : {false, true})
        {
            auto pr = piecewise_assemble(ts, std::numeric_limits<double>::epsilon(), one_sided);
            const Index r = pr.order();
            CHECK((pr.V.transpose() * pr.V - Mat::Identity(r, r)).norm() <= 1e-12);
            CHECK((pr.W.transpose() * pr.W - Mat::Identity(r, r)).norm() <= 1e-12);
            if (one_sided)
            {
                CHECK(pr.V == pr.W);
                CHECK(r <= 2 * pr.total_order);
            }
            else
            {
                CHECK(r <= pr.total_order);
            }
            for (std::size_t i = 0; i < ts.size(); ++i)
            {
                const double mu = ts.samples[i];
                const auto rom = pr.at(mu);
                const auto sys = ps.at(mu);
                CHECK((rom.A - pr.W.transpose() * sys.A * pr.V).norm() <= 1e-12 * rom.A.norm());
                CHECK((rom.C - sys.C * pr.V).norm() <= 1e-12 * rom.C.norm());
                for (double w : oracle::logspace(-4, 4, 9))
                {
                    const CMat h = full_h(ps, mu, Cplx(0, w));
                    const CMat hr = rom_transfer_eval(pr, mu, Cplx(0, w));
                    CHECK(oracle::norm2(CMat(h - hr)) <= ts.hsv[i].error_bound + 1e-8);
                }
            }
        }
    }

    SUBCASE("one-sided ROM of the symmetric block is stable")
    {
        auto pr = piecewise_assemble(ts, 1e-6, true);
        std::mt19937 rng(4);
        std::uniform_real_distribution<double> u(-6, 2);
        for (int k = 0; k < 20; ++k)
        {
            const auto rom = pr.at(std::pow(10.0, u(rng)));
            CHECK(stability_check<double>(rom.E, rom.A).stable);
        }
    }
}

TEST_CASE("interpolatory assembly")
{
    const auto ps = small_block();
    auto ts = train(ps, chebyshev_nodes(1e-4, 1e1, 5), LocalMethod::bt_tolerance(1e-4), SamplingRule::chebyshev);
    for (auto basis : {InterpolationBasis::lagrange, InterpolationBasis::bspline2})
    {
        auto ir = interpolatory_assemble(ts, basis);
        Index total = 0;
        for (Index r : ts.local_orders())
            total += r;
        CHECK(ir.order() == total);
        for (std::size_t i = 0; i < ts.size(); ++i)
            for (double w : oracle::logspace(-4, 4, 7))
            {
                const CMat a = rom_transfer_eval(ir, ts.samples[i], Cplx(0, w));
                const CMat b = transfer_eval(ts.roms[i], Cplx(0, w));
                CHECK((a - b).norm() <= 1e-12 * b.norm());
            }
    }

    // identical local models: the interpolant is that model for every μ
    TrainingSet<double> same = ts;
    for (auto& rom : same.roms)
        rom = ts.roms[0];
    for (auto basis : {InterpolationBasis::lagrange, InterpolationBasis::bspline2})
    {
        auto ir = interpolatory_assemble(same, basis);
        for (double mu : {2e-4, 3e-2, 5.0})
        {
            const CMat a = rom_transfer_eval(ir, mu, Cplx(0, 1.0));
            const CMat b = transfer_eval(ts.roms[0], Cplx(0, 1.0));
            CHECK((a - b).norm() <= 1e-10 * b.norm());
        }
    }

    TrainingSet<double> two = ts;
    two.samples.resize(2);
    two.roms.resize(2);
    CHECK_THROWS_AS(interpolatory_assemble(two, InterpolationBasis::bspline2), ConfigurationError);
}
