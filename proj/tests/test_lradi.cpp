// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "lrmor/bench.hpp"
#include "lrmor/lradi.hpp"
#include "oracles.hpp"

using namespace lrmor;
using oracle::Mat;
using Cplx = std::complex<double>;

namespace
{

void check_shift_set(const ShiftSet<double>& s)
{
    for (std::size_t i = 0; i < s.size(); ++i)
    {
        CHECK(s[i].real() < 0);
        if (s[i].imag() > 0)
        {
            REQUIRE(i + 1 < s.size());
            CHECK(s[i + 1] == std::conj(s[i]));
            ++i;
        }
        else
        {
            CHECK(s[i].imag() == 0.0);
        }
    }
}

} // namespace

TEST_CASE("projection shifts")
{
    Mat A = Mat::Zero(2, 2);
    A.diagonal() << -1, -4;
    OperatorSet<double> ops(oracle::dense_system(Mat(), A, Mat::Ones(2, 1), Mat::Ones(1, 2)));
    auto s = projection_shifts(ops, Mat(Mat::Identity(2, 2)));
    REQUIRE(s.size() == 2);
    std::vector<double> re{s[0].real(), s[1].real()};
    std::sort(re.begin(), re.end());
    CHECK(re[0] == doctest::Approx(-4));
    CHECK(re[1] == doctest::Approx(-1));

    // rotation block a ± bi
    Mat R(2, 2);
    R << -1, 3, -3, -1;
    OperatorSet<double> rops(oracle::dense_system(Mat(), R, Mat::Ones(2, 1), Mat::Ones(1, 2)));
    auto c = projection_shifts(rops, Mat(Mat::Identity(2, 2)));
    REQUIRE(c.size() == 2);
    check_shift_set(c);
    CHECK(std::abs(c[0] - Cplx(-1, 3)) <= 1e-12);

    auto fd = OperatorSet<double>(gen_fd_laplacian(10));
    auto f = projection_shifts(fd, fd.system().B);
    CHECK(!f.empty());
    check_shift_set(f);

    CHECK_THROWS(projection_shifts(ops, Mat(2, 0)));
}

TEST_CASE("heuristic shifts are stable and conjugate closed")
{
    std::mt19937 rng(2);
    const Mat A = oracle::random_stable(rng, 40);
    OperatorSet<double> ops(oracle::dense_system(Mat(), A, Mat::Ones(40, 1), Mat::Ones(1, 40)));
    auto s = heuristic_shifts(ops, 6);
    CHECK(!s.empty());
    check_shift_set(s);
}

TEST_CASE("ADI scalar and trivial cases")
{
    OperatorSet<double> ops(oracle::dense_system(Mat::Ones(1, 1), -Mat::Ones(1, 1), Mat::Ones(1, 1), Mat::Ones(1, 1)));
    auto r = lr_adi(LyapunovSpec<double>{ops, Side::controllability});
    CHECK(r.converged);
    CHECK(r.steps == 1);
    CHECK(std::abs(r.Z.dense()(0, 0) - 0.5) <= 1e-14);
    CHECK(r.residual_history.back() <= 1e-14);
    CHECK(r.shifts_used.front() == Cplx(-1, 0));

    OperatorSet<double> zero(oracle::dense_system(Mat(), -Mat::Identity(3, 3), Mat::Zero(3, 1), Mat::Ones(1, 3)));
    auto z = lr_adi(LyapunovSpec<double>{zero, Side::controllability});
    CHECK(z.converged);
    CHECK(z.Z.rank() == 0);
    CHECK(z.steps == 0);
}

TEST_CASE("ADI against the Kronecker oracle with properties along the way")
{
    const auto sys = gen_fd_laplacian(8);
    OperatorSet<double> ops(sys);
    const Mat A(sys.A);
    const Mat I = Mat::Identity(64, 64);
    for (Side side : {Side::controllability, Side::observability})
    {
        const bool ctrl = side == Side::controllability;
        const Mat G = ctrl ? sys.B : Mat(sys.C.transpose());
        auto r = lr_adi(LyapunovSpec<double>{ops, side});
        REQUIRE(r.converged);
        CHECK(r.residual_history.back() <= 1e-10);
        CHECK(r.residual_history.size() <= static_cast<std::size_t>(r.steps));
        CHECK(r.Z.rank() <= G.cols() * r.steps);
        CHECK(r.Z.Z.allFinite());
        for (double h : r.residual_history)
            CHECK((std::isfinite(h) && h >= 0));
        const Mat P = oracle::kron_lyap(I, ctrl ? A : Mat(A.transpose()), G * G.transpose());
        CHECK(oracle::norm2(r.Z.dense() - P) <= 1e-8 * oracle::norm2(P));
        // cheap monitor agrees with the direct residual
        const double direct = lyap_residual(LyapunovSpec<double>{ops, side}, r.Z).relative;
        CHECK(std::abs(direct - r.residual_history.back()) <= 1e-8 + 1e-6 * direct);
        check_shift_set(r.shifts_used);
    }
}

TEST_CASE("ADI monitor matches direct residual at every step")
{
    const auto sys = gen_fd_laplacian(6);
    OperatorSet<double> ops(sys);
    const LyapunovSpec<double> spec{ops, Side::controllability};
    for (int k = 1; k <= 6; ++k)
    {
        AdiOptions o;
        o.max_iterations = k;
        o.rel_tolerance = 1e-300;
        auto r = lr_adi(spec, o);
        if (r.residual_history.empty())
            continue;
        const double direct = lyap_residual(spec, r.Z).relative;
        const double mon = r.residual_history.back();
        CHECK(std::abs(direct - mon) <= 1e-8 * std::max(mon, 1e-300) + 1e-15);
        CHECK_FALSE(r.converged);
    }
}

TEST_CASE("ADI with complex shifts keeps Z real and converges")
{
    std::mt19937 rng(41);
    const Index n = 30;
    const Mat A = oracle::random_stable(rng, n);
    const Mat E = oracle::random_spd(rng, n);
    const Mat B = oracle::random_matrix(rng, n, 2);
    OperatorSet<double> ops(oracle::dense_system(E, A, B, B.transpose()));
    for (auto strategy : {ShiftStrategy::projection, ShiftStrategy::heuristic})
    {
        AdiOptions o;
        o.shift_strategy = strategy;
        o.max_iterations = 500;
        auto r = lr_adi(LyapunovSpec<double>{ops, Side::controllability}, o);
        REQUIRE(r.converged);
        const Mat P = oracle::kron_lyap(E, A, B * B.transpose());
        CHECK(oracle::norm2(r.Z.dense() - P) <= 1e-7 * oracle::norm2(P));
        check_shift_set(r.shifts_used);
        bool any_complex = false;
        for (auto s : r.shifts_used)
            any_complex |= s.imag() != 0.0;
        CHECK(any_complex);
    }
}

TEST_CASE("ADI stops at the iteration cap with a partial factor")
{
    OperatorSet<double> ops(gen_fd_laplacian(10));
    AdiOptions o;
    o.max_iterations = 3;
    auto r = lr_adi(LyapunovSpec<double>{ops, Side::controllability}, o);
    CHECK_FALSE(r.converged);
    CHECK(r.steps <= 4);
    CHECK(r.Z.rank() > 0);
}

TEST_CASE("ADI routes through the low-rank update")
{
    std::mt19937 rng(8);
    const Index n = 20;
    const Mat A = oracle::random_snd(rng, n, 1.0, 10.0);
    const Mat B = oracle::random_matrix(rng, n, 1);
    const Mat U = oracle::random_matrix(rng, n, 1) * 0.2;
    const Mat V = oracle::random_matrix(rng, n, 1) * 0.2;
    OperatorSet<double> ops(oracle::dense_system(Mat(), A, B, B.transpose()));
    auto up = ops.with_update(U, V);
    auto r = lr_adi(LyapunovSpec<double>{up, Side::controllability});
    REQUIRE(r.converged);
    const Mat F = A + U * V.transpose();
    const Mat P = oracle::kron_lyap(Mat::Identity(n, n), F, B * B.transpose());
    CHECK(oracle::norm2(r.Z.dense() - P) <= 1e-8 * oracle::norm2(P));
}
