#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <boost/math/distributions/cauchy.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/pareto.hpp>

#include "isl/distributions.hpp"

using isl::Distribution;
using isl::NoiseSource;
using isl::Stream;

namespace {

double boost_phi(double x) { return boost::math::cdf(boost::math::normal_distribution<double>(0.0, 1.0), x); }

}  // namespace

TEST(Distribution, RejectsBadParameters) {
    EXPECT_THROW(Distribution::normal(0, 0), std::invalid_argument);
    EXPECT_THROW(Distribution::normal(0, -1), std::invalid_argument);
    EXPECT_THROW(Distribution::uniform(1, 1), std::invalid_argument);
    EXPECT_THROW(Distribution::cauchy(0, 0), std::invalid_argument);
    EXPECT_THROW(Distribution::pareto(0, 1), std::invalid_argument);
    EXPECT_THROW(Distribution::pareto(1, 0), std::invalid_argument);
    EXPECT_THROW(Distribution::mixture({Distribution::normal(0, 1)}, {0.5}), std::invalid_argument);
    EXPECT_THROW(Distribution::mixture({Distribution::normal(0, 1), Distribution::normal(1, 1)}, {1.5, -0.5}),
                 std::invalid_argument);
    EXPECT_THROW(Distribution::mixture({}), std::invalid_argument);
}

TEST(Distribution, NormalSampleMean) {
    Stream rng(5, "data");
    const auto xs = Distribution::normal(4, 2).sample(1000000, rng);
    double s = 0;
    for (double x : xs) s += x;
    const double mean = s / xs.size();
    EXPECT_GE(mean, 3.99);
    EXPECT_LE(mean, 4.01);
}

TEST(Distribution, SingleComponentMixtureMatchesComponent) {
    const auto n = Distribution::normal(0, 1);
    const auto m = Distribution::mixture({n}, {1.0});
    Stream a(9), b(9);
    for (int i = 0; i < 1000; ++i) ASSERT_EQ(n.sample(a), m.sample(b));
    for (double x : {-2.0, -0.3, 0.0, 1.7}) {
        EXPECT_DOUBLE_EQ(n.cdf(x), m.cdf(x));
        EXPECT_DOUBLE_EQ(n.pdf(x), m.pdf(x));
    }
}

TEST(Distribution, ParetoSupportBound) {
    Stream rng(1);
    const auto xs = Distribution::pareto(1, 1).sample(100000, rng);
    EXPECT_GE(*std::min_element(xs.begin(), xs.end()), 1.0);
}

TEST(Distribution, CdfExamples) {
    EXPECT_DOUBLE_EQ(Distribution::uniform(-2, 2).cdf(0), 0.5);
    EXPECT_DOUBLE_EQ(Distribution::cauchy(1, 2).cdf(1), 0.5);
    const auto m = Distribution::mixture({Distribution::normal(-5, 2), Distribution::pareto(5, 1)}, {0.5, 0.5});
    const double expected = 0.5 * boost_phi(2.5);
    EXPECT_NEAR(m.cdf(0), expected, 1e-14);
    EXPECT_NEAR(m.cdf(0), 0.4969, 5e-5);
}

TEST(Distribution, CdfAgainstBoost) {
    const boost::math::normal_distribution<double> bn(4, 2);
    const boost::math::cauchy_distribution<double> bc(1, 2);
    const boost::math::pareto_distribution<double> bp(1, 1.5);
    for (double x = -10; x <= 10; x += 0.37) {
        EXPECT_NEAR(Distribution::normal(4, 2).cdf(x), boost::math::cdf(bn, x), 1e-14);
        EXPECT_NEAR(Distribution::normal(4, 2).pdf(x), boost::math::pdf(bn, x), 1e-14);
        EXPECT_NEAR(Distribution::cauchy(1, 2).cdf(x), boost::math::cdf(bc, x), 1e-14);
        EXPECT_NEAR(Distribution::cauchy(1, 2).pdf(x), boost::math::pdf(bc, x), 1e-14);
        if (x >= 1) {
            EXPECT_NEAR(Distribution::pareto(1, 1.5).cdf(x), boost::math::cdf(bp, x), 1e-14);
            EXPECT_NEAR(Distribution::pareto(1, 1.5).pdf(x), boost::math::pdf(bp, x), 1e-14);
        } else {
            EXPECT_EQ(Distribution::pareto(1, 1.5).cdf(x), 0.0);
            EXPECT_EQ(Distribution::pareto(1, 1.5).pdf(x), 0.0);
        }
    }
}

TEST(Distribution, QuantileExamples) {
    EXPECT_DOUBLE_EQ(Distribution::uniform(-2, 2).quantile(0.75), 1.0);
    EXPECT_DOUBLE_EQ(Distribution::pareto(1, 1).quantile(0.5), 2.0);
    EXPECT_THROW(Distribution::normal(0, 1).quantile(0.0), std::domain_error);
    EXPECT_THROW(Distribution::normal(0, 1).quantile(1.0), std::domain_error);
}

TEST(Distribution, Model1MedianByIndependentBisection) {
    auto F = [](double x) { return 0.5 * boost_phi((x - 5) / 2) + 0.5 * boost_phi(x + 1); };
    double lo = -10, hi = 10;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (F(mid) < 0.5 ? lo : hi) = mid;
    }
    const double x = isl::model1().quantile(0.5);
    EXPECT_NEAR(x, 0.5 * (lo + hi), 1e-7);
    EXPECT_NEAR(F(x), 0.5, 1e-8);
}

TEST(Distribution, QuantileInvertsCdf) {
    const Distribution ds[] = {Distribution::normal(4, 2), Distribution::uniform(-2, 2), Distribution::cauchy(1, 2),
                               Distribution::pareto(1, 1)};
    for (const auto& d : ds) {
        for (double u = 0.01; u < 1.0; u += 0.01) {
            const double x = d.quantile(u);
            EXPECT_NEAR(d.quantile(d.cdf(x)), x, 1e-8 * std::max(1.0, std::abs(x))) << d.to_string() << " u=" << u;
        }
    }
}

TEST(Distribution, ParseRoundTrip) {
    for (const char* text : {"normal:4,2", "uniform:-2,2", "cauchy:1,2", "pareto:1,1",
                             "mix:[normal:5,2@0.3;normal:-1,1@0.7]"}) {
        const auto d = Distribution::parse(text);
        const auto d2 = Distribution::parse(d.to_string());
        for (double x : {-3.0, 0.0, 1.5, 6.0}) EXPECT_DOUBLE_EQ(d.cdf(x), d2.cdf(x)) << text;
    }
    EXPECT_DOUBLE_EQ(Distribution::parse("model1").cdf(0.7), isl::model1().cdf(0.7));
    EXPECT_THROW(Distribution::parse("gamma:1,2"), std::invalid_argument);
    EXPECT_THROW(Distribution::parse("normal:1"), std::invalid_argument);
    EXPECT_THROW(Distribution::parse("normal"), std::invalid_argument);
}

TEST(Distribution, MixtureSamplesFollowCdf) {
    Stream rng(3);
    const auto d = isl::model3();
    const auto xs = d.sample(200000, rng);
    for (double x : {-8.0, -5.0, 0.0, 6.0, 20.0}) {
        const double emp = std::count_if(xs.begin(), xs.end(), [&](double v) { return v <= x; }) / double(xs.size());
        EXPECT_NEAR(emp, d.cdf(x), 0.005) << x;
    }
}

TEST(NoiseSource, OptimalTransformExamples) {
    const auto z = NoiseSource::standard_normal();
    EXPECT_NEAR(isl::optimal_transform(Distribution::normal(0, 1), z, 1.3, false), 1.3, 1e-12);
    EXPECT_NEAR(isl::optimal_transform(Distribution::normal(4, 2), z, 0.0, false), 4.0, 1e-12);
    EXPECT_NEAR(isl::optimal_transform(Distribution::uniform(-2, 2), z, 0.0, true), 0.0, 1e-12);
    // Reflection mirrors the increasing map.
    EXPECT_NEAR(isl::optimal_transform(Distribution::normal(0, 1), z, 1.3, true), -1.3, 1e-12);
}

TEST(NoiseSource, UniformCdfAndParse) {
    const auto u = NoiseSource::parse("uniform:-1,1");
    EXPECT_EQ(u.type(), NoiseSource::Type::Uniform);
    EXPECT_DOUBLE_EQ(u.cdf(0.0), 0.5);
    EXPECT_DOUBLE_EQ(u.ccdf(0.5), 0.25);
    EXPECT_EQ(NoiseSource::parse("normal").type(), NoiseSource::Type::StandardNormal);
    EXPECT_NEAR(NoiseSource::standard_normal().ccdf(8.0), boost::math::cdf(
        boost::math::complement(boost::math::normal_distribution<double>(), 8.0)), 1e-25);
}

TEST(Distribution, StandardNormalQuantile) {
    for (double u : {1e-10, 0.01, 0.3, 0.5, 0.77, 0.999}) {
        EXPECT_NEAR(isl::standard_normal_quantile(u),
                    boost::math::quantile(boost::math::normal_distribution<double>(), u), 1e-12);
    }
}
