#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "isl/distributions.hpp"

namespace isl {

// One line of a property-suite report.
struct CheckResult {
    std::string suite;
    std::string name;
    bool pass = false;
    double value = 0.0;      // the measured quantity
    double threshold = 0.0;  // what it was compared against
    std::string detail;
};

struct DistributionPair {
    std::string name;
    Distribution p;
    Distribution p_tilde;
    int k = 0;
};

// Targets for the calibration suite: N(0,1), U(-1,1), Cauchy(0,1), Pareto(1,2).
std::vector<std::pair<std::string, Distribution>> calibration_targets();
// Pairs with K <= 10 for the oracle suite; the first is U(0,1) vs U(0,2), K=1.
std::vector<DistributionPair> oracle_pairs();
// Perturbed pairs for the bound suite.
std::vector<DistributionPair> perturbed_pairs();

// Rank statistics with p~ = p pass chi-square uniformity at `significance`.
std::vector<CheckResult> verify_calibration(const std::vector<int>& ks, std::size_t trials, double significance,
                                            std::uint64_t seed);
// Quadrature pmf vs a Monte Carlo pmf from `draws` draws, per-bin tolerance.
std::vector<CheckResult> verify_oracle(std::size_t draws, double tolerance, std::uint64_t seed);
// max_n |Q_K(n) - 1/(K+1)| <= integral |p - p~| + tolerance.
std::vector<CheckResult> verify_bound(double tolerance);

std::string format_check(const CheckResult& r);

}  // namespace isl
