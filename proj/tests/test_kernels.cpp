#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "isl/autodiff.hpp"
#include "isl/isl.hpp"
#include "isl/kernels.hpp"

using isl::kernels::Backend;
using isl::Stream;

namespace {

struct Batch {
    std::vector<double> y, s;
};

Batch make_batch(std::size_t P, std::size_t K, std::uint64_t seed) {
    Stream rng(seed);
    Batch b{std::vector<double>(P), std::vector<double>(P * K)};
    for (auto& v : b.y) v = rng.normal();
    for (auto& v : b.s) v = 0.3 + 1.2 * rng.normal();
    return b;
}

}  // namespace

TEST(Kernels, SerialAndOpenMPAreBitIdentical) {
    for (std::size_t P : {1, 17, 300, 2000}) {
        const std::size_t K = 7;
        const auto b = make_batch(P, K, P);
        for (int l : {1, 2}) {
            const isl::kernels::SurrogateParams prm{12.0, 0.6, l};
            const auto a = isl::kernels::surrogate_loss(b.y, b.s, K, prm, true, Backend::Serial);
            const auto c = isl::kernels::surrogate_loss(b.y, b.s, K, prm, true, Backend::OpenMP);
            EXPECT_EQ(a.loss, c.loss);
            EXPECT_EQ(a.q, c.q);
            EXPECT_EQ(a.soft_counts, c.soft_counts);
            EXPECT_EQ(a.d_samples, c.d_samples);
        }
        EXPECT_EQ(isl::kernels::rank_statistics(b.y, b.s, K, Backend::Serial),
                  isl::kernels::rank_statistics(b.y, b.s, K, Backend::OpenMP));
    }
}

TEST(Kernels, MatchScalarDefinitions) {
    const std::size_t P = 50, K = 5;
    const auto b = make_batch(P, K, 3);
    const isl::kernels::SurrogateParams prm{15.0, 0.5, 2};
    const auto r = isl::kernels::surrogate_loss(b.y, b.s, K, prm, false, Backend::Serial);
    const auto ranks = isl::kernels::rank_statistics(b.y, b.s, K, Backend::Serial);
    std::vector<double> counts(P);
    for (std::size_t i = 0; i < P; ++i) {
        const std::span<const double> row(b.s.data() + i * K, K);
        counts[i] = isl::soft_count(b.y[i], row, prm.alpha);
        EXPECT_NEAR(r.soft_counts[i], counts[i], 1e-12);
        EXPECT_EQ(ranks[i], isl::rank_statistic(b.y[i], row));
    }
    const auto q = isl::soft_histogram(counts, K, prm.nu);
    for (std::size_t k = 0; k <= K; ++k) EXPECT_NEAR(r.q[k], q.q[k], 1e-12);
    EXPECT_NEAR(r.loss, isl::isl_loss(q, 2), 1e-12);
    EXPECT_TRUE(r.d_samples.empty());
}

TEST(Kernels, GradientMatchesFiniteDifference) {
    const std::size_t P = 12, K = 4;
    const auto b = make_batch(P, K, 9);
    for (int l : {1, 2}) {
        const isl::kernels::SurrogateParams prm{3.0, 0.7, l};
        const auto r = isl::kernels::surrogate_loss(b.y, b.s, K, prm, true, Backend::Serial);
        const auto fd = isl::ad::finite_difference(
            [&](std::span<const double> s) {
                return isl::kernels::surrogate_loss(b.y, s, K, prm, false, Backend::Serial).loss;
            },
            b.s, 1e-6);
        for (std::size_t i = 0; i < fd.size(); ++i) {
            EXPECT_NEAR(r.d_samples[i], fd[i], 1e-7 + 1e-5 * std::abs(fd[i])) << "l=" << l << " i=" << i;
        }
    }
}

TEST(Kernels, ShapeChecks) {
    const std::vector<double> y(3), s(8);
    EXPECT_THROW(isl::kernels::surrogate_loss(y, s, 3, {}, false, Backend::Serial), std::invalid_argument);
    EXPECT_THROW(isl::kernels::rank_statistics(y, s, 3, Backend::Serial), std::invalid_argument);
}
