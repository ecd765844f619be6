#include "gls/gsvd.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace gls;
using gls::testing::rel_diff;

namespace {

void expect_valid(const GsvdFactors<double>& f, const MatrixXd& a, const MatrixXd& l, double tol) {
    const Index m = a.rows();
    const Index p = l.rows();
    EXPECT_EQ(f.q1 + f.q2 + f.q3, f.r);
    EXPECT_EQ(f.r, gls::testing::oracle_rank((MatrixXd(m + p, a.cols()) << a, l).finished()));
    EXPECT_LE((f.U_A.transpose() * f.U_A - MatrixXd::Identity(m, m)).norm(), 1e-12);
    EXPECT_LE((f.U_L.transpose() * f.U_L - MatrixXd::Identity(p, p)).norm(), 1e-12);
    EXPECT_LE((f.X * f.X_inverse - MatrixXd::Identity(f.n(), f.n())).norm(), 1e-10);
    EXPECT_LE((a * f.X - f.U_A * f.sigma_a()).norm(), tol * std::max(1.0, a.norm() * f.X.norm()));
    EXPECT_LE((l * f.X - f.U_L * f.sigma_l()).norm(), tol * std::max(1.0, l.norm() * f.X.norm()));
    EXPECT_LE((a - f.U_A * f.sigma_a() * f.X_inverse).norm(), tol * std::max(a.norm(), 1e-300));
    EXPECT_LE((l - f.U_L * f.sigma_l() * f.X_inverse).norm(), tol * std::max(l.norm(), 1e-300));
    const MatrixXd pyth = f.C_A.transpose() * f.C_A + f.S_L.transpose() * f.S_L;
    EXPECT_LE((pyth - MatrixXd::Identity(f.r, f.r)).norm(), 1e-12);
    const VectorXd c = f.cosines();
    const VectorXd s = f.sines();
    for (Index j = f.q1; j < f.q1 + f.q2; ++j) {
        EXPECT_GT(c(j), 0.0);
        EXPECT_LT(c(j), 1.0);
        EXPECT_GT(s(j), 0.0);
        EXPECT_LT(s(j), 1.0);
        if (j > f.q1) {
            EXPECT_GE(c(j - 1), c(j));
        }
    }
    EXPECT_TRUE(std::isfinite(gls::testing::eigen_svd(f.X).singularValues().minCoeff()));
    EXPECT_GT(gls::testing::eigen_svd(f.X).singularValues().minCoeff(), 0.0);
}

MatrixXd gram(const MatrixXd& a, const MatrixXd& l) { return a.transpose() * a + l.transpose() * l; }

} // namespace

TEST(GsvdPair, ZeroRegularizer) {
    const MatrixXd a = MatrixXd::Identity(2, 2);
    const MatrixXd l = MatrixXd::Zero(1, 2);
    const auto f = gsvd_pair(a, l);
    EXPECT_EQ(f.r, 2);
    EXPECT_EQ(f.q1, 2);
    EXPECT_EQ(f.q2, 0);
    EXPECT_EQ(f.q3, 0);
    EXPECT_LT((f.C_A - MatrixXd::Identity(2, 2)).norm(), 1e-15);
    expect_valid(f, a, l, 1e-12);
    const auto x = partition_x(f);
    EXPECT_EQ(x.X4.cols(), 0);
    EXPECT_DOUBLE_EQ(sigma_max_ca(f), 1.0);
}

TEST(GsvdPair, ZeroMatrixA) {
    const MatrixXd a = MatrixXd::Zero(1, 2);
    const MatrixXd l = MatrixXd::Identity(2, 2);
    const auto f = gsvd_pair(a, l);
    EXPECT_EQ(f.r, 2);
    EXPECT_EQ(f.q1, 0);
    EXPECT_EQ(f.q2, 0);
    EXPECT_EQ(f.q3, 2);
    EXPECT_LT((f.S_L - MatrixXd::Identity(2, 2)).norm(), 1e-15);
    EXPECT_DOUBLE_EQ(sigma_max_ca(f), 0.0);
    expect_valid(f, a, l, 1e-12);
}

TEST(GsvdPair, DiagonalPair) {
    MatrixXd a = MatrixXd::Zero(2, 2);
    a.diagonal() << 2, 1;
    const MatrixXd l = MatrixXd::Identity(2, 2);
    const auto f = gsvd_pair(a, l);
    EXPECT_EQ(f.r, 2);
    EXPECT_EQ(f.q1, 0);
    EXPECT_EQ(f.q2, 2);
    EXPECT_EQ(f.q3, 0);
    // c / s = sigma(A) / sigma(L) with c^2 + s^2 = 1.
    const VectorXd c = f.cosines();
    EXPECT_NEAR(c(0), 2.0 / std::sqrt(5.0), 1e-15);
    EXPECT_NEAR(c(1), 1.0 / std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(sigma_max_ca(f), 2.0 / std::sqrt(5.0), 1e-15);
    expect_valid(f, a, l, 1e-12);
    const auto x = partition_x(f);
    EXPECT_EQ(x.X1.cols(), 0);
    EXPECT_EQ(x.X2.cols(), 2);
    EXPECT_EQ(x.X3.cols(), 0);
    EXPECT_EQ(x.X4.cols(), 0);
}

TEST(GsvdPair, InvalidInputs) {
    EXPECT_THROW(gsvd_pair(MatrixXd::Identity(2, 2), MatrixXd::Identity(3, 3)), std::invalid_argument);
    EXPECT_THROW(gsvd_pair(MatrixXd(0, 2), MatrixXd::Identity(2, 2)), std::invalid_argument);
}

TEST(GsvdPair, PlantedJointNullSpace) {
    const auto pp = gls::testing::planted_pair(6, 3, 4, 31);
    const auto f = gsvd_pair(pp.a, pp.l);
    expect_valid(f, pp.a, pp.l, 1e-10);
    const auto x = partition_x(f);
    const MatrixXd g = gram(pp.a, pp.l);
    ASSERT_EQ(x.X4.cols(), 1);
    EXPECT_LE((g * x.X4).norm(), 1e-10 * g.norm());
    EXPECT_NEAR(x.X4.col(0).norm(), 1.0, 1e-14);
    EXPECT_NEAR(std::abs(x.X4.col(0).dot(pp.common_null)), 1.0, 1e-12);
}

TEST(GsvdPair, RandomPairsInvariants) {
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        Rng rng(seed);
        const Index n = 2 + static_cast<Index>(rng.next_u64() % 39);
        const Index m = 1 + static_cast<Index>(rng.next_u64() % 50);
        const Index p = 1 + static_cast<Index>(rng.next_u64() % 45);
        const Index ra = std::min(m, n) - static_cast<Index>(rng.next_u64() % 2) * std::min(m, n) / 3;
        const Index rl = std::min(p, n) - static_cast<Index>(rng.next_u64() % 2) * std::min(p, n) / 3;
        const MatrixXd a = random_low_rank(m, n, ra, seed * 7 + 1);
        const MatrixXd l = random_low_rank(p, n, rl, seed * 7 + 2);
        SCOPED_TRACE(::testing::Message() << "seed " << seed << " A " << m << "x" << n << " rank " << ra << ", L " << p
                                          << "x" << n << " rank " << rl);
        const auto f = gsvd_pair(a, l);
        expect_valid(f, a, l, 1e-10);

        const auto x = partition_x(f);
        const MatrixXd g = gram(a, l);
        const MatrixXd x123 = f.X.leftCols(f.r);
        EXPECT_LE((x123.transpose() * g * x123 - MatrixXd::Identity(f.r, f.r)).norm(), 1e-10);
        EXPECT_LE((g * x.X4).norm(), 1e-10 * g.norm());
        MatrixXd concat(f.n(), f.n());
        concat << x.X1, x.X2, x.X3, x.X4;
        EXPECT_EQ(concat, f.X);
    }
}

TEST(SigmaMaxCa, MatchesRandomizedLowerBoundAndOracle) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const MatrixXd a = Rng(seed).normal_matrix(7, 5);
        const MatrixXd l = random_low_rank(4, 5, 3, seed + 50);
        const auto f = gsvd_pair(a, l);
        const double value = sigma_max_ca(f);
        const MatrixXd g = gram(a, l);
        const MatrixXd pg = projector_range(g);
        Rng rng(seed + 1000);
        double best = 0.0;
        for (int i = 0; i < 1000; ++i) {
            const VectorXd v = pg * rng.normal_vector(5);
            const double vg = std::sqrt(v.dot(g * v));
            if (vg > 0) best = std::max(best, (a * v).norm() / vg);
        }
        EXPECT_LE(best, value * (1 + 1e-12));
        EXPECT_NEAR(value, gls::testing::oracle_operator_norm(a, l), 1e-10);
        // Refine the best sample by power steps to close the gap below 1e-6.
        VectorXd v = pg * rng.normal_vector(5);
        const MatrixXd gd = gls::testing::oracle_pinv(g);
        for (int i = 0; i < 500; ++i) v = (gd * (a.transpose() * (a * v))).normalized();
        EXPECT_NEAR((a * v).norm() / std::sqrt(v.dot(g * v)), value, 1e-6);
    }
}

TEST(WpinvViaGsvd, IdentityWithZeroRegularizer) {
    const MatrixXd a = MatrixXd::Identity(3, 3);
    const MatrixXd l = MatrixXd::Zero(1, 3);
    const MatrixXd x = wpinv_via_gsvd(gsvd_pair(a, l), gram(a, l));
    EXPECT_LT((x - MatrixXd::Identity(3, 3)).norm(), 1e-14);
}

TEST(WpinvViaGsvd, DecoupledCoordinates) {
    MatrixXd a(1, 2), l(1, 2);
    a << 1, 0;
    l << 0, 1;
    const MatrixXd x = wpinv_via_gsvd(gsvd_pair(a, l), gram(a, l));
    ASSERT_EQ(x.rows(), 2);
    ASSERT_EQ(x.cols(), 1);
    EXPECT_NEAR(x(0, 0), 1.0, 1e-15);
    EXPECT_NEAR(x(1, 0), 0.0, 1e-15);
}

TEST(WpinvViaGsvd, MatchesIndependentOracle) {
    const MatrixXd a = Rng(41).normal_matrix(5, 4);
    const MatrixXd l = Rng(42).normal_matrix(3, 4);
    const MatrixXd x = wpinv_via_gsvd(gsvd_pair(a, l), gram(a, l));
    EXPECT_LE(rel_diff(x, gls::testing::oracle_wpinv(a, std::nullopt, l)), 1e-10);
}

TEST(WpinvViaGsvd, OutputInRangeOfG) {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto pp = gls::testing::planted_pair(8, 5, 7, seed);
        const MatrixXd g = gram(pp.a, pp.l);
        const MatrixXd x = wpinv_via_gsvd(gsvd_pair(pp.a, pp.l), g);
        const MatrixXd outside = x - gls::testing::oracle_range_projector(g) * x;
        EXPECT_LE(outside.norm(), 1e-10 * x.norm()) << seed;
        EXPECT_LE(rel_diff(x, gls::testing::oracle_wpinv(pp.a, std::nullopt, pp.l)), 1e-9) << seed;
    }
}

TEST(ScalarTypes, GsvdFloat) {
    Matrix<float> a(3, 2), l(2, 2);
    a << 1, 0, 0, 2, 1, 1;
    l << 1, -1, 0, 1;
    GsvdOptions<float> opt;
    opt.cluster_tol = 1e-6f;
    const auto f = gsvd_pair(a, l, opt);
    EXPECT_EQ(f.r, 2);
    EXPECT_LE((a - f.U_A * f.sigma_a() * f.X_inverse).norm(), 1e-5f * a.norm());
}
