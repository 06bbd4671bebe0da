#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "isl/distributions.hpp"
#include "isl/kernels.hpp"
#include "isl/random.hpp"

namespace isl {

struct IslConfig {
    int k = 10;
    double alpha = 15.0;
    double nu = 0.5;
    int norm_order = 2;
    std::size_t batch_size = 100;

    void validate() const;
    kernels::SurrogateParams surrogate() const { return {alpha, nu, norm_order}; }
};

// Counts of the hard rank statistic over bins 0..K.
struct RankHistogram {
    std::vector<std::size_t> counts;
    std::size_t total = 0;

    static RankHistogram empty(int K) { return {std::vector<std::size_t>(static_cast<std::size_t>(K) + 1, 0), 0}; }
    static RankHistogram from_ranks(std::span<const int> ranks, int K);
    int k() const noexcept { return static_cast<int>(counts.size()) - 1; }
    void add(int rank);
};

// Kernel-smoothed histogram of soft counts. Entries lie in [0, 1]; the sum
// is not normalized.
struct SoftHistogram {
    std::vector<double> q;
    int k() const noexcept { return static_cast<int>(q.size()) - 1; }
};

// Number of samples strictly below y.
int rank_statistic(double y, std::span<const double> samples);

// Sum of sigmoid(alpha * (y - s)) over the samples.
double soft_count(double y, std::span<const double> samples, double alpha);

// q[k] = mean over i of exp(-(a_i - k)^2 / (2 nu^2)), k = 0..K.
SoftHistogram soft_histogram(std::span<const double> soft_counts, int K, double nu);

// || 1/(K+1) - q ||_l for l in {1, 2}.
double isl_loss(const SoftHistogram& q, int norm_order);

// Histogram of `trials` rank statistics of y ~ p against K draws of p~.
RankHistogram simulate_rank_histogram(const Distribution& p, const Distribution& p_tilde, int K,
                                      std::size_t trials, Stream& rng);

// Same norm on the normalized hard histogram. Diagnostics only.
double theoretical_isl(const RankHistogram& hist, int norm_order);

// Probability that the rank statistic equals n when data ~ p and the model
// has cdf `model_cdf`: the integral of Binom(n; K, F~(y)) p(y) dy over the
// whole line, split at p's breakpoints and locations plus `extra_cuts`
// (e.g. where the model cdf has kinks). Absolute error <= 1e-6 or
// NumericError("quadrature").
double q_k_oracle(const Distribution& p, const std::function<double(double)>& model_cdf, int K, int n,
                  std::span<const double> extra_cuts = {});
std::vector<double> q_k_oracle_all(const Distribution& p, const std::function<double(double)>& model_cdf, int K,
                                   std::span<const double> extra_cuts = {});

// Total-variation style discrepancy, the integral of |p - p~|.
double l1_density_distance(const Distribution& p, const Distribution& p_tilde);

struct BoundReport {
    double epsilon = 0.0;          // integral of |p - p~|
    std::vector<double> q;         // Q_K(n), n = 0..K
    double max_deviation = 0.0;    // max_n |Q_K(n) - 1/(K+1)|
    double max_violation = 0.0;    // max(0, max_deviation - epsilon)
};

// Checks that the rank pmf stays within epsilon of uniform.
BoundReport verify_theorem2_bound(const Distribution& p, const Distribution& p_tilde, int K);

struct ChiSquareReport {
    double statistic = 0.0;
    double critical_value = 0.0;
    int dof = 0;
    bool accept = false;
    bool low_expected_count = false;  // some expected count < 5
};

// Pearson test of the histogram against the discrete uniform on 0..K.
// Throws std::invalid_argument on an empty histogram.
ChiSquareReport chi_square_uniformity(const RankHistogram& hist, double significance);

// Upper `significance` quantile of chi-square with `dof` degrees of freedom.
double chi_square_critical_value(int dof, double significance);

struct MomentEstimate {
    int n = 0;
    double value = 0.0;
    double std_error = 0.0;
    double expected = 0.0;  // 1/(n+1)
    bool within(double n_se) const;
};

// Monte Carlo estimates of E[F~(Y)^n], n = 1..n_max, with Y ~ p and F~ the
// empirical cdf of `generator_samples` model draws (default 10 * n_samples).
std::vector<MomentEstimate> moment_uniformity_check(const Distribution& p,
                                                    const std::function<double(Stream&)>& sampler, int n_max,
                                                    std::size_t n_samples, Stream& rng,
                                                    std::size_t generator_samples = 0);

}  // namespace isl
