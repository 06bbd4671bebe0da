#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "isl/isl.hpp"

using isl::Distribution;
using isl::RankHistogram;
using isl::SoftHistogram;
using isl::Stream;

TEST(RankStatistic, DirectCount) {
    const double s[] = {0.1, 0.9, 0.3};
    EXPECT_EQ(isl::rank_statistic(0.5, s), 2);
    EXPECT_EQ(isl::rank_statistic(-1.0, s), 0);
    EXPECT_EQ(isl::rank_statistic(2.0, s), 3);
    // Ties are not counted.
    EXPECT_EQ(isl::rank_statistic(0.3, s), 1);
}

TEST(RankStatistic, UniformUnderMatchedModel) {
    Stream rng(21);
    const auto p = Distribution::normal(0, 1);
    const auto h = isl::simulate_rank_histogram(p, p, 5, 100000, rng);
    ASSERT_EQ(h.total, 100000u);
    for (auto c : h.counts) EXPECT_NEAR(double(c) / h.total, 1.0 / 6.0, 0.01);
}

TEST(SoftCount, Examples) {
    const double tie[] = {0.0, -100.0};
    EXPECT_NEAR(isl::soft_count(0.0, tie, 15.0), 1.5, 1e-12);
    const double pair[] = {-0.1, 0.1};
    const double expected = 1.0 / (1.0 + std::exp(-1.0)) + 1.0 / (1.0 + std::exp(1.0));
    EXPECT_NEAR(isl::soft_count(0.0, pair, 10.0), expected, 1e-15);
    EXPECT_NEAR(isl::soft_count(0.0, pair, 10.0), 1.0, 1e-12);
}

TEST(SoftCount, HardLimit) {
    Stream rng(1);
    std::vector<double> s(10);
    for (auto& v : s) v = rng.normal();
    for (double y : {-1.5, -0.2, 0.4, 2.0}) {
        EXPECT_NEAR(isl::soft_count(y, s, 1e9), isl::rank_statistic(y, s), 1e-9);
    }
}

TEST(SoftHistogram, KernelAtCenterAndUnitOffset) {
    const double a[] = {3.0};
    const double nu = 0.7;
    const auto q = isl::soft_histogram(a, 5, nu);
    ASSERT_EQ(q.q.size(), 6u);
    EXPECT_DOUBLE_EQ(q.q[3], 1.0);
    EXPECT_NEAR(q.q[2], std::exp(-1.0 / (2 * nu * nu)), 1e-15);
    EXPECT_NEAR(q.q[4], std::exp(-1.0 / (2 * nu * nu)), 1e-15);
}

TEST(SoftHistogram, FarOutsideIsEmpty) {
    const double a[] = {-50.0, 80.0};
    for (double v : isl::soft_histogram(a, 4, 0.5).q) EXPECT_LT(v, 1e-100);
}

TEST(SoftHistogram, HandEvaluation) {
    const double a[] = {1.0, 2.0};
    const auto q = isl::soft_histogram(a, 3, 0.5).q;
    const double e2 = std::exp(-2.0), e8 = std::exp(-8.0);
    EXPECT_NEAR(q[0], e2 / 2 + e8 / 2, 1e-15);
    EXPECT_NEAR(q[1], 0.5 + e2 / 2, 1e-15);
    EXPECT_NEAR(q[2], e2 / 2 + 0.5, 1e-15);
    EXPECT_NEAR(q[3], e8 / 2 + e2 / 2, 1e-15);
    EXPECT_NEAR(q[0], 0.0678, 5e-5);
    EXPECT_NEAR(q[1], 0.5677, 5e-5);
}

TEST(IslLoss, Examples) {
    EXPECT_EQ(isl::isl_loss(SoftHistogram{{0.25, 0.25, 0.25, 0.25}}, 2), 0.0);
    EXPECT_NEAR(isl::isl_loss(SoftHistogram{{1.0, 0.0}}, 2), std::sqrt(0.5), 1e-15);
    EXPECT_NEAR(isl::isl_loss(SoftHistogram{{1.0, 0.0}}, 1), 1.0, 1e-15);
}

TEST(TheoreticalIsl, Examples) {
    EXPECT_EQ(isl::theoretical_isl(RankHistogram{{5, 5, 5, 5}, 20}, 1), 0.0);
    EXPECT_NEAR(isl::theoretical_isl(RankHistogram{{40, 0, 0, 0}, 40}, 1), 1.5, 1e-15);
}

TEST(RankHistogram, FromRanks) {
    const int r[] = {0, 2, 2, 1, 2};
    const auto h = RankHistogram::from_ranks(r, 2);
    EXPECT_EQ(h.counts, (std::vector<std::size_t>{1, 1, 3}));
    EXPECT_EQ(h.total, 5u);
}

TEST(QkOracle, MatchedModelIsUniform) {
    const auto p = Distribution::normal(0, 1);
    for (int n = 0; n <= 4; ++n) EXPECT_NEAR(isl::q_k_oracle(p, [&](double x) { return p.cdf(x); }, 4, n), 0.2, 1e-5);
}

TEST(QkOracle, UniformClosedForm) {
    const auto p = Distribution::uniform(0, 1);
    const auto pt = Distribution::uniform(0, 2);
    const auto cuts = pt.breakpoints();
    const auto q = isl::q_k_oracle_all(p, [&](double x) { return pt.cdf(x); }, 1, cuts);
    ASSERT_EQ(q.size(), 2u);
    EXPECT_NEAR(q[0], 0.75, 1e-10);
    EXPECT_NEAR(q[1], 0.25, 1e-10);
}

TEST(QkOracle, SumsToOne) {
    const auto p = isl::model1();
    const auto pt = Distribution::cauchy(1, 3);
    const auto q = isl::q_k_oracle_all(p, [&](double x) { return pt.cdf(x); }, 7);
    double s = 0;
    for (double v : q) s += v;
    EXPECT_NEAR(s, 1.0, 1e-8);
}

TEST(QkOracle, AgreesWithSimulation) {
    const auto p = Distribution::normal(0, 1);
    const auto pt = Distribution::normal(0.5, 1.2);
    const auto q = isl::q_k_oracle_all(p, [&](double x) { return pt.cdf(x); }, 5);
    Stream rng(8);
    const auto h = isl::simulate_rank_histogram(p, pt, 5, 200000, rng);
    for (std::size_t n = 0; n < q.size(); ++n) EXPECT_NEAR(double(h.counts[n]) / h.total, q[n], 0.005);
}

TEST(L1Distance, ClosedForms) {
    EXPECT_NEAR(isl::l1_density_distance(Distribution::uniform(0, 1), Distribution::uniform(0, 2)), 1.0, 1e-9);
    // Equal-variance normals: 2 (2 Phi(delta / 2 sigma) - 1).
    const boost::math::normal_distribution<double> std_normal;
    const double expected = 2 * (2 * boost::math::cdf(std_normal, 0.05) - 1);
    EXPECT_NEAR(isl::l1_density_distance(Distribution::normal(0, 1), Distribution::normal(0.1, 1)), expected, 1e-9);
    EXPECT_NEAR(isl::l1_density_distance(Distribution::cauchy(0, 1), Distribution::cauchy(0, 1)), 0.0, 1e-12);
}

TEST(DeviationBound, Examples) {
    const auto same = isl::verify_theorem2_bound(Distribution::normal(0, 1), Distribution::normal(0, 1), 6);
    EXPECT_NEAR(same.epsilon, 0.0, 1e-9);
    EXPECT_LE(same.max_deviation, 1e-6);

    const auto near = isl::verify_theorem2_bound(Distribution::normal(0, 1), Distribution::normal(0.1, 1), 10);
    EXPECT_EQ(near.max_violation, 0.0);
    EXPECT_LT(near.max_deviation, near.epsilon);

    const auto uu = isl::verify_theorem2_bound(Distribution::uniform(0, 1), Distribution::uniform(0, 2), 1);
    EXPECT_NEAR(uu.epsilon, 1.0, 1e-9);
    EXPECT_NEAR(uu.max_deviation, 0.25, 1e-9);
    EXPECT_EQ(uu.max_violation, 0.0);
}

TEST(ChiSquare, Examples) {
    const auto flat = isl::chi_square_uniformity(RankHistogram{{10, 10, 10, 10}, 40}, 0.05);
    EXPECT_EQ(flat.statistic, 0.0);
    EXPECT_TRUE(flat.accept);
    EXPECT_EQ(flat.dof, 3);

    const auto skew = isl::chi_square_uniformity(RankHistogram{{20, 0, 0, 20}, 40}, 0.05);
    EXPECT_DOUBLE_EQ(skew.statistic, 40.0);
    EXPECT_FALSE(skew.accept);
    EXPECT_NEAR(skew.critical_value, 7.815, 5e-4);

    EXPECT_THROW(isl::chi_square_uniformity(RankHistogram::empty(3), 0.05), std::invalid_argument);
    EXPECT_TRUE(isl::chi_square_uniformity(RankHistogram{{1, 1, 1, 1}, 4}, 0.05).low_expected_count);
}

TEST(ChiSquare, CriticalValueSatisfiesGammaIdentity) {
    // P(X > c) = Q(dof/2, c/2) for X ~ chi-square(dof).
    for (int dof : {1, 2, 3, 9, 30}) {
        for (double a : {0.01, 0.05}) {
            const double c = isl::chi_square_critical_value(dof, a);
            EXPECT_NEAR(boost::math::gamma_q(dof / 2.0, c / 2.0), a, 1e-12);
        }
    }
    EXPECT_NEAR(isl::chi_square_critical_value(1, 0.05), 3.841458820694124, 1e-12);
}

TEST(ChiSquare, RejectionRateIsCalibrated) {
    Stream rng(17);
    const int K = 10, trials = 1000;
    int rejected = 0;
    for (int t = 0; t < trials; ++t) {
        auto h = RankHistogram::empty(K);
        for (int i = 0; i < 1000; ++i) h.add(static_cast<int>(rng.below(K + 1)));
        rejected += !isl::chi_square_uniformity(h, 0.05).accept;
    }
    EXPECT_NEAR(rejected / double(trials), 0.05, 0.02);
}

TEST(MomentCheck, ExactModel) {
    const auto p = Distribution::normal(0, 1);
    Stream rng(5);
    const auto m = isl::moment_uniformity_check(p, [&](Stream& r) { return p.sample(r); }, 2, 20000, rng);
    ASSERT_EQ(m.size(), 2u);
    EXPECT_NEAR(m[0].value, 0.5, 0.01);
    EXPECT_NEAR(m[1].value, 1.0 / 3.0, 0.01);
    EXPECT_TRUE(m[0].within(4));
    EXPECT_DOUBLE_EQ(m[1].expected, 1.0 / 3.0);
}

TEST(MomentCheck, DetectsMismatch) {
    // E[Phi(Y)] for Y ~ N(2, 1) is Phi(2 / sqrt(2)).
    const boost::math::normal_distribution<double> std_normal;
    const double expected = boost::math::cdf(std_normal, 2.0 / std::sqrt(2.0));
    EXPECT_NEAR(expected, 0.9214, 5e-5);
    const auto gen = Distribution::normal(0, 1);
    Stream rng(6);
    const auto m = isl::moment_uniformity_check(Distribution::normal(2, 1), [&](Stream& r) { return gen.sample(r); },
                                                1, 20000, rng);
    EXPECT_NEAR(m[0].value, expected, 0.01);
    EXPECT_FALSE(m[0].within(3));
}

TEST(IslConfig, Validation) {
    isl::IslConfig c;
    EXPECT_NO_THROW(c.validate());
    c.k = 0;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c = {};
    c.nu = 0;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c = {};
    c.alpha = -1;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c = {};
    c.norm_order = 3;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c = {};
    c.batch_size = 0;
    EXPECT_THROW(c.validate(), std::invalid_argument);
}
