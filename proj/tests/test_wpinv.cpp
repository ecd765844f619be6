#include "gls/problems.hpp"
#include "gls/wpinv.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace gls;
using gls::testing::rel_diff;

namespace {

GlsProblem<double> random_problem(std::uint64_t seed, bool weighted, Index m = 6, Index n = 4, Index p = 3) {
    Rng rng(seed);
    std::optional<MatrixXd> mw;
    if (weighted) mw = rng.normal_matrix(m, m);
    return GlsProblem<double>(rng.normal_matrix(m, n), mw, rng.normal_matrix(p, n), rng.normal_vector(m));
}

} // namespace

TEST(GlsProblem, CachedProducts) {
    const auto prob = random_problem(1, true);
    const MatrixXd m = prob.M();
    EXPECT_LE((prob.P() - m.transpose() * m).norm(), 1e-13 * prob.P().norm());
    EXPECT_LE((prob.Q() - prob.L().transpose() * prob.L()).norm(), 1e-13 * prob.Q().norm());
    const MatrixXd g = prob.A().transpose() * prob.P() * prob.A() + prob.Q();
    EXPECT_LE((prob.G() - g).norm(), 1e-13 * g.norm());
    EXPECT_EQ(prob.G(), prob.G().transpose());
    EXPECT_EQ(prob.P(), prob.P().transpose());
    EXPECT_NEAR(prob.p_norm(prob.b()), std::sqrt(prob.b().dot(prob.P() * prob.b())), 1e-12);
}

TEST(GlsProblem, DimensionChecks) {
    EXPECT_THROW(GlsProblem<double>(MatrixXd::Ones(3, 2), MatrixXd::Ones(1, 3), VectorXd::Ones(3)),
                 std::invalid_argument);
    EXPECT_THROW(GlsProblem<double>(MatrixXd::Ones(3, 2), MatrixXd::Ones(1, 2), VectorXd::Ones(2)),
                 std::invalid_argument);
    EXPECT_THROW(GlsProblem<double>(MatrixXd::Ones(3, 2), MatrixXd(MatrixXd::Ones(2, 2)), MatrixXd::Ones(1, 2),
                                    VectorXd::Ones(3)),
                 std::invalid_argument);
    MatrixXd bad = MatrixXd::Ones(3, 2);
    bad(0, 0) = std::numeric_limits<double>::infinity();
    EXPECT_THROW(GlsProblem<double>(bad, MatrixXd::Ones(1, 2), VectorXd::Ones(3)), std::invalid_argument);
}

TEST(WpinvElden, ZeroRegularizerGivesPinv) {
    const MatrixXd a = random_low_rank(6, 4, 3, 5);
    const GlsProblem<double> prob(a, MatrixXd::Zero(2, 4), VectorXd::Zero(6));
    EXPECT_LE(rel_diff(wpinv_elden(prob), gls::testing::oracle_pinv(a)), 1e-12);
}

TEST(WpinvElden, IdentityRegularizerGivesPinv) {
    const MatrixXd a = random_low_rank(5, 6, 3, 6);
    const GlsProblem<double> prob(a, MatrixXd::Identity(6, 6), VectorXd::Zero(5));
    EXPECT_LE(rel_diff(wpinv_elden(prob), gls::testing::oracle_pinv(a)), 1e-12);
}

TEST(WpinvElden, TwoVariableExample) {
    MatrixXd a(1, 2), l(1, 2);
    a << 1, 1;
    l << 1, -1;
    const GlsProblem<double> prob(a, MatrixXd::Identity(1, 1), l, VectorXd::Ones(1));
    const MatrixXd x = wpinv_elden(prob);
    EXPECT_NEAR(x(0, 0), 0.5, 1e-15);
    EXPECT_NEAR(x(1, 0), 0.5, 1e-15);
}

TEST(WpinvElden, MatchesIndependentOracle) {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        Rng rng(seed);
        const Index m = 3 + static_cast<Index>(rng.next_u64() % 10);
        const Index n = 2 + static_cast<Index>(rng.next_u64() % 10);
        const MatrixXd a = random_low_rank(m, n, std::max<Index>(1, std::min(m, n) - 1), seed);
        const MatrixXd l = random_low_rank(2, n, 1, seed + 1);
        std::optional<MatrixXd> mw;
        if (seed % 2 == 0) mw = random_low_rank(m, m, m - 1, seed + 2);
        const GlsProblem<double> prob(a, mw, l, VectorXd::Zero(m));
        EXPECT_LE(rel_diff(wpinv_elden(prob), gls::testing::oracle_wpinv(a, mw, l)), 1e-9) << seed;
    }
}

TEST(WpinvLimit, ScalingLawWithoutRegularizer) {
    const MatrixXd a = Rng(3).normal_matrix(5, 3);
    const GlsProblem<double> prob(a, MatrixXd::Zero(1, 3), VectorXd::Zero(5));
    for (double delta : {1e-1, 1e-3, 0.7}) {
        EXPECT_LE(rel_diff(wpinv_limit(prob, delta), gls::testing::oracle_pinv(a) / (1.0 + delta)), 1e-12);
    }
    EXPECT_THROW(wpinv_limit(prob, 0.0), std::invalid_argument);
}

TEST(WpinvLimit, TwoVariableExample) {
    MatrixXd a(1, 2), l(1, 2);
    a << 1, 1;
    l << 1, -1;
    const GlsProblem<double> prob(a, l, VectorXd::Ones(1));
    const MatrixXd x = wpinv_limit(prob, 1e-8);
    EXPECT_LE((x - wpinv_elden(prob)).norm(), 1e-6);
}

TEST(WpinvLimit, TwoFormsOfTheLimitAgree) {
    // A^T P A + delta G = (1 + delta) (A^T P A + delta / (1 + delta) Q).
    const auto prob = random_problem(7, true, 5, 4, 3);
    const double delta = 1e-4;
    const MatrixXd atpa = prob.MA().transpose() * prob.MA();
    const MatrixXd atp = prob.MA().transpose() * prob.M();
    const MatrixXd lhs = wpinv_limit(prob, delta);
    const MatrixXd rhs = gls::testing::oracle_pinv(MatrixXd(atpa + delta / (1.0 + delta) * prob.Q())) * atp / (1.0 + delta);
    EXPECT_LE(rel_diff(lhs, rhs), 1e-12);
}

TEST(WpinvLimit, LinearDecayInDelta) {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto pp = gls::testing::planted_pair(8, 4, 6, seed);
        const GlsProblem<double> prob(pp.a, pp.l, VectorXd::Zero(8));
        const MatrixXd x = wpinv_elden(prob);
        const double e2 = rel_diff(wpinv_limit(prob, 1e-2), x);
        const double e4 = rel_diff(wpinv_limit(prob, 1e-4), x);
        const double e6 = rel_diff(wpinv_limit(prob, 1e-6), x);
        EXPECT_GT(e2, e4);
        EXPECT_GT(e4, e6);
        // Consecutive deltas are two decades apart, so O(delta) means ratios near 100.
        for (double ratio : {e2 / e4, e4 / e6}) {
            EXPECT_GE(ratio, 50.0) << seed;
            EXPECT_LE(ratio, 200.0) << seed;
        }
    }
}

TEST(WpinvApply, ZeroRightHandSide) {
    const auto prob = random_problem(2, false).with_rhs(VectorXd::Zero(6));
    EXPECT_EQ(wpinv_apply(prob, WpinvMethod<double>::elden()).norm(), 0.0);
}

TEST(WpinvApply, ReducesToPinv) {
    const MatrixXd a = random_low_rank(7, 5, 3, 9);
    const VectorXd b = Rng(10).normal_vector(7);
    const GlsProblem<double> prob(a, MatrixXd::Zero(1, 5), b);
    const VectorXd expected = pinv(a) * b;
    for (auto method : {WpinvMethod<double>::elden(), WpinvMethod<double>::gsvd()}) {
        EXPECT_LE((wpinv_apply(prob, method) - expected).norm(), 1e-12 * expected.norm());
    }
}

TEST(WpinvApply, RecoversGeneratedSolution) {
    const MatrixXd a = random_low_rank(30, 30, 22, 12);
    const auto gp = generate(a, RegularizerKind::l1(), TargetFunction::ramp, 12);
    for (auto method : {WpinvMethod<double>::elden(), WpinvMethod<double>::gsvd()}) {
        const VectorXd x = wpinv_apply(gp.problem, method);
        EXPECT_LE((x - gp.x_true).norm(), 1e-10 * gp.x_true.norm());
    }
}

TEST(WpinvApply, GsvdNeedsIdentityWeight) {
    const auto prob = random_problem(4, true);
    EXPECT_THROW(wpinv_apply(prob, WpinvMethod<double>::gsvd()), MethodUnsupportedError);
}

TEST(WpinvApply, CrossMethodAgreement) {
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        Rng rng(seed);
        const Index n = 2 + static_cast<Index>(rng.next_u64() % 30);
        const Index m = 2 + static_cast<Index>(rng.next_u64() % 39);
        const Index p = 1 + static_cast<Index>(rng.next_u64() % 40);
        MatrixXd a, l;
        if (seed % 3 == 0) {
            const auto pp = gls::testing::planted_pair(m, p, n, seed);
            a = pp.a;
            l = pp.l;
        } else {
            a = random_low_rank(m, n, std::max<Index>(1, std::min(m, n) - static_cast<Index>(seed % 3)), seed);
            l = random_low_rank(p, n, std::max<Index>(1, std::min(p, n) - static_cast<Index>(seed % 2)), seed + 99);
        }
        const GlsProblem<double> prob(a, l, VectorXd::Zero(m));
        const MatrixXd xe = wpinv_elden(prob);
        const MatrixXd xg = wpinv_matrix(prob, WpinvMethod<double>::gsvd());
        EXPECT_LE(rel_diff(xe, xg), 1e-9) << "seed " << seed << " " << m << "x" << n << ", p " << p;
    }
}

TEST(CheckGmpe, EldenPassesAllFive) {
    const auto prob = random_problem(8, true);
    const auto rep = check_gmpe(prob, wpinv_elden(prob), 1e-9);
    EXPECT_TRUE(rep.all_passed());
    for (const auto& id : rep.identities) EXPECT_LE(id.residual, 1e-9);
}

TEST(CheckGmpe, PlainPinvFailsIdentityFour) {
    Rng rng(13);
    const MatrixXd a = random_low_rank(6, 5, 3, 13);
    const GlsProblem<double> prob(a, rng.normal_matrix(3, 5), VectorXd::Zero(6));
    const auto rep = check_gmpe(prob, pinv(a), 1e-9);
    EXPECT_FALSE(rep.identities[3].passed);
    EXPECT_GT(rep.identities[3].residual, 1e-9);
    EXPECT_FALSE(rep.all_passed());
}

TEST(CheckGmpe, ClassicalCase) {
    const MatrixXd a = random_low_rank(5, 4, 2, 14);
    const GlsProblem<double> prob(a, MatrixXd::Zero(1, 4), VectorXd::Zero(5));
    EXPECT_TRUE(check_gmpe(prob, pinv(a), 1e-9).all_passed());
}

TEST(CheckGmpe, PassedMatchesTolerance) {
    const auto prob = random_problem(15, false);
    const MatrixXd x = wpinv_elden(prob) + 1e-6 * MatrixXd::Ones(4, 6);
    const auto rep = check_gmpe(prob, x, 1e-9);
    for (const auto& id : rep.identities) EXPECT_EQ(id.passed, id.residual <= rep.tol);
    EXPECT_THROW(check_gmpe(prob, MatrixXd::Zero(6, 4), 1e-9), std::invalid_argument);
}

TEST(CheckGmpe, PerturbationsAreDetected) {
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        Rng rng(seed + 500);
        const Index m = 4 + static_cast<Index>(seed % 5);
        const Index n = 3 + static_cast<Index>(seed % 4);
        std::optional<MatrixXd> mw;
        if (seed % 2 == 0) mw = random_low_rank(m, m, m - 1, seed + 7);
        const GlsProblem<double> prob(random_low_rank(m, n, std::min(m, n) - static_cast<Index>(seed % 2), seed), mw,
                                      rng.normal_matrix(2, n), VectorXd::Zero(m));
        const MatrixXd x = wpinv_elden(prob);
        EXPECT_TRUE(check_gmpe(prob, x, 1e-9).all_passed()) << seed;
        MatrixXd e = rng.normal_matrix(n, m);
        e *= 1e-3 * x.norm() / e.norm();
        EXPECT_FALSE(check_gmpe(prob, MatrixXd(x + e), 1e-6).all_passed()) << seed;
    }
}

TEST(GlsCriterion, EldenSolutionSatisfies) {
    const auto prob = random_problem(16, true, 8, 6, 2);
    const auto rep = check_gls_criterion(prob, wpinv_apply(prob, WpinvMethod<double>::elden()), 1e-10);
    EXPECT_TRUE(rep.satisfied);
    EXPECT_TRUE(rep.in_range_g);
}

TEST(GlsCriterion, NullSpaceShiftStillSolves) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto pp = gls::testing::planted_pair(7, 3, 5, seed);
        const GlsProblem<double> prob(pp.a, pp.l, Rng(seed).normal_vector(7));
        const VectorXd x = wpinv_apply(prob, WpinvMethod<double>::elden());
        const MatrixXd ng = gls::testing::oracle_nullspace(prob.G());
        ASSERT_GE(ng.cols(), 1);
        for (Index j = 0; j < ng.cols(); ++j) {
            const VectorXd shifted = x + ng.col(j);
            const auto rep = check_gls_criterion(prob, shifted, 1e-10);
            EXPECT_TRUE(rep.satisfied);
            EXPECT_FALSE(rep.in_range_g);
            EXPECT_GE(shifted.norm(), x.norm() - 1e-12);
        }
        // x is Euclidean-orthogonal to N(A) cap N(L).
        EXPECT_LE(std::abs(x.dot(pp.common_null)), 1e-10 * x.norm());
    }
}

TEST(GlsCriterion, ZeroIsNotASolution) {
    const auto prob = random_problem(17, false);
    EXPECT_FALSE(check_gls_criterion(prob, VectorXd::Zero(4), 1e-8).satisfied);
}

TEST(GlsCriterion, WrongSolutionFailsOrthogonality) {
    // Least-squares solution without the seminorm minimization.
    const MatrixXd a = random_low_rank(6, 5, 3, 18);
    const GlsProblem<double> prob(a, Rng(19).normal_matrix(2, 5), Rng(20).normal_vector(6));
    const VectorXd x = pinv(a) * prob.b();
    const auto rep = check_gls_criterion(prob, x, 1e-8);
    EXPECT_LE(rep.normal_residual, 1e-12);
    EXPECT_FALSE(rep.satisfied);
}

TEST(ScalarTypes, WpinvLongDouble) {
    using Ml = Matrix<long double>;
    Ml a(2, 2), l(1, 2);
    a << 1, 1, 1, 1;
    l << 1, -1;
    const GlsProblem<long double> prob(a, l, Vector<long double>::Ones(2));
    const Ml x = wpinv_elden(prob);
    EXPECT_NEAR(static_cast<double>(x(0, 0)), 0.25, 1e-15);
    EXPECT_TRUE(check_gmpe(prob, x, 1e-12L).all_passed());
}
