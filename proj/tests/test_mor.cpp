// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "lrmor/bench.hpp"
#include "lrmor/mor.hpp"
#include "oracles.hpp"

using namespace lrmor;
using oracle::CMat;
using oracle::Cplx;
using oracle::Mat;

namespace
{

OperatorSet<double> scalar_ops()
{
    return OperatorSet<double>(
        oracle::dense_system(Mat::Ones(1, 1), -Mat::Ones(1, 1), Mat::Ones(1, 1), Mat::Ones(1, 1)));
}

double sampled_error(const OperatorSet<double>& ops, const Rom<double>& rom, const std::vector<double>& omega)
{
    double worst = 0;
    for (double w : omega)
        worst = std::max(worst, oracle::norm2(CMat(transfer_eval(ops, Cplx(0, w)) - transfer_eval(rom, Cplx(0, w)))));
    return worst;
}

} // namespace

TEST_CASE("transfer evaluation anchors")
{
    auto ops = scalar_ops();
    CHECK(std::abs(transfer_eval(ops, Cplx(0, 0))(0, 0) - 1.0) <= 1e-15);
    CHECK(std::abs(transfer_eval(ops, Cplx(1, 0))(0, 0) - 0.5) <= 1e-15);
    CHECK_THROWS_AS(transfer_eval(ops, Cplx(-1, 0)), SingularError);

    std::mt19937 rng(1);
    const Index n = 12;
    const Mat A = oracle::random_stable(rng, n), E = oracle::random_spd(rng, n);
    const Mat B = oracle::random_matrix(rng, n, 2), C = oracle::random_matrix(rng, 3, n);
    const Mat D = oracle::random_matrix(rng, 3, 2);
    OperatorSet<double> full(oracle::dense_system(E, A, B, C, D));
    const Mat I = Mat::Identity(n, n);
    const Rom<double> rom = project(full, I, I);
    CHECK(rom.order() == n);
    for (double w : {0.0, 0.3, 7.0})
    {
        const CMat h = transfer_eval(full, Cplx(0, w));
        CHECK((h - oracle::transfer(E, A, B, C, D, Cplx(0, w))).norm() <= 1e-12 * h.norm());
        CHECK((h - transfer_eval(rom, Cplx(0, w))).norm() <= 1e-12 * h.norm());
    }
}

TEST_CASE("projection matches stored bases")
{
    std::mt19937 rng(2);
    const Index n = 15;
    const Mat A = oracle::random_stable(rng, n), E = oracle::random_spd(rng, n);
    const Mat B = oracle::random_matrix(rng, n, 1), C = oracle::random_matrix(rng, 2, n);
    OperatorSet<double> ops(oracle::dense_system(E, A, B, C));
    const Mat V = oracle::random_matrix(rng, n, 4), W = oracle::random_matrix(rng, n, 4);
    const auto rom = project(ops, V, W);
    CHECK((rom.E - W.transpose() * E * V).norm() <= 1e-12 * rom.E.norm());
    CHECK((rom.A - W.transpose() * A * V).norm() <= 1e-12 * rom.A.norm());
    CHECK((rom.B - W.transpose() * B).norm() <= 1e-12 * rom.B.norm());
    CHECK((rom.C - C * V).norm() <= 1e-12 * rom.C.norm());
}

TEST_CASE("square root method: scalar and diagonal systems")
{
    auto ops = scalar_ops();
    const LowRankFactor<double> z{Mat::Constant(1, 1, std::sqrt(0.5))};
    auto bt = square_root_method(ops, z, z, TruncationMode::by_order(1));
    REQUIRE(bt.hsv.singular_values.size() == 1);
    CHECK(bt.hsv.singular_values[0] == doctest::Approx(0.5));
    CHECK(bt.rom.order() == 1);
    for (double w : {0.0, 1.0, 10.0})
        CHECK(std::abs(transfer_eval(bt.rom, Cplx(0, w))(0, 0) - 1.0 / Cplx(1, w)) <= 1e-14);

    auto none = square_root_method(ops, z, z, TruncationMode::by_tolerance(2.0));
    CHECK(none.rom.order() == 0);
    CHECK(none.hsv.error_bound == doctest::Approx(1.0));

    Mat A = Mat::Zero(2, 2);
    A.diagonal() << -1, -2;
    const Mat B = Mat::Ones(2, 1);
    OperatorSet<double> dops(oracle::dense_system(Mat(), A, B, B.transpose()));
    const Mat P = oracle::kron_lyap(Mat::Identity(2, 2), A, B * B.transpose());
    const auto Zp = factor_psd<double>(P);
    auto r1 = square_root_method(dops, Zp, Zp, TruncationMode::by_order(1));
    const double bound = 2 * r1.hsv.singular_values[1];
    CHECK(r1.hsv.error_bound == doctest::Approx(bound));
    CHECK(sampled_error(dops, r1.rom, oracle::logspace(-3, 3, 200)) <= bound + 1e-12);

    CHECK(square_root_method(dops, Zp, Zp, TruncationMode::by_order(5)).hsv.order_capped);
}

TEST_CASE("balanced truncation on the FD Laplacian")
{
    OperatorSet<double> ops(gen_fd_laplacian(10));
    auto bt = balanced_truncation(ops, TruncationMode::by_tolerance(1e-4));
    CHECK(bt.hsv.error_bound <= 1e-4);
    CHECK(bt.rom.order() >= 1);
    const auto omega = oracle::logspace(-4, 4, 200);
    CHECK(sampled_error(ops, bt.rom, omega) <= bt.hsv.error_bound + 1e-8);
    for (std::size_t k = 1; k < bt.hsv.singular_values.size(); ++k)
        CHECK(bt.hsv.singular_values[k] <= bt.hsv.singular_values[k - 1]);
    CHECK((bt.rom.W.transpose() * ops.mul_E(Trans::N, bt.rom.V) - Mat::Identity(bt.rom.order(), bt.rom.order())).norm()
          <= 1e-10);

    auto b20 = balanced_truncation(ops, TruncationMode::by_order(20));
    CHECK(b20.rom.order() <= 20);
    CHECK(stability_check<double>(b20.rom.E, b20.rom.A).stable);
}

TEST_CASE("Hankel singular values are invariant under scaling the state equation")
{
    std::mt19937 rng(6);
    const Index n = 30;
    const Mat A = oracle::random_snd(rng, n), E = oracle::random_spd(rng, n);
    const Mat B = oracle::random_matrix(rng, n, 1), C = oracle::random_matrix(rng, 1, n);
    auto h1 = balanced_truncation(OperatorSet<double>(oracle::dense_system(E, A, B, C)), TruncationMode::by_order(6));
    auto h2 = balanced_truncation(OperatorSet<double>(oracle::dense_system(3.5 * E, 3.5 * A, 3.5 * B, C)),
                                  TruncationMode::by_order(6));
    for (int k = 0; k < 6; ++k)
        CHECK(std::abs(h1.hsv.singular_values[k] - h2.hsv.singular_values[k]) <= 1e-10 * h1.hsv.singular_values[0]);
}

TEST_CASE("balanced truncation error bound on random symmetric systems")
{
    std::mt19937 rng(31);
    const auto omega = oracle::logspace(-3, 4, 200);
    for (int trial = 0; trial < 3; ++trial)
    {
        const Index n = 40;
        const Mat A = oracle::random_snd(rng, n, 0.1, 100.0);
        const Mat B = oracle::random_matrix(rng, n, 2), C = oracle::random_matrix(rng, 2, n);
        OperatorSet<double> ops(oracle::dense_system(Mat(), A, B, C));
        for (Index r : {2, 5, 10})
        {
            auto bt = balanced_truncation(ops, TruncationMode::by_order(r));
            CHECK(sampled_error(ops, bt.rom, omega) <= bt.hsv.error_bound + 1e-8);
        }
    }
}

TEST_CASE("one-sided projection of a symmetric system is stable")
{
    std::mt19937 rng(9);
    for (int trial = 0; trial < 5; ++trial)
    {
        const Index n = 30;
        const Mat A = oracle::random_snd(rng, n), E = oracle::random_spd(rng, n);
        OperatorSet<double> ops(oracle::dense_system(E, A, Mat::Ones(n, 1), Mat::Ones(1, n)));
        Eigen::HouseholderQR<Mat> qr(oracle::random_matrix(rng, n, 8));
        const Mat V = qr.householderQ() * Mat::Identity(n, 8);
        const auto rom = project(ops, V, V);
        CHECK(stability_check<double>(rom.E, rom.A).stable);
    }
}

TEST_CASE("IRKA: scalar system is reproduced")
{
    auto res = irka(scalar_ops(), 1);
    CHECK(res.converged);
    CHECK(std::abs(res.shifts[0] - Cplx(1, 0)) <= 1e-10);
    CHECK(std::abs(transfer_eval(res.rom, Cplx(0, 2))(0, 0) - 1.0 / Cplx(1, 2)) <= 1e-12);
    CHECK_THROWS_AS(irka(scalar_ops(), 2), ConfigurationError);
}

TEST_CASE("IRKA: fixed point and tangential interpolation")
{
    OperatorSet<double> ops(gen_fd_laplacian(12));
    for (Index r : {2, 4, 6})
    {
        auto res = irka(ops, r);
        REQUIRE(res.converged);
        CHECK(detail::matched_change(res.shifts, mirrored_poles(res.rom)) <= 1e-6);
        for (Index i = 0; i < r; ++i)
        {
            const Cplx s = res.shifts[i];
            const CMat hb = transfer_eval(ops, s) * res.b.col(i);
            const CMat rb = transfer_eval(res.rom, s) * res.b.col(i);
            CHECK((hb - rb).norm() <= 1e-8 * hb.norm());
            const CMat ch = res.c.col(i).transpose() * transfer_eval(ops, s);
            const CMat cr = res.c.col(i).transpose() * transfer_eval(res.rom, s);
            CHECK((ch - cr).norm() <= 1e-8 * ch.norm());
        }
        CHECK(stability_check<double>(res.rom.E, res.rom.A).stable);
    }
}

TEST_CASE("IRKA: MIMO nonsymmetric system with complex shifts")
{
    std::mt19937 rng(12);
    const Index n = 40;
    const Mat A = oracle::random_stable(rng, n, 0.3);
    const Mat B = oracle::random_matrix(rng, n, 2), C = oracle::random_matrix(rng, 2, n);
    OperatorSet<double> ops(oracle::dense_system(Mat(), A, B, C));
    auto res = irka(ops, 6);
    CHECK(res.rom.A.allFinite());
    CHECK(res.rom.order() == 6);
    if (res.converged)
    {
        CHECK(detail::matched_change(res.shifts, mirrored_poles(res.rom)) <= 1e-6);
        for (Index i = 0; i < 6; ++i)
        {
            const CMat hb = transfer_eval(ops, res.shifts[i]) * res.b.col(i);
            const CMat rb = transfer_eval(res.rom, res.shifts[i]) * res.b.col(i);
            CHECK((hb - rb).norm() <= 1e-8 * hb.norm());
        }
    }
}
