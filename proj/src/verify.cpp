#include "isl/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "isl/isl.hpp"

namespace isl {

std::vector<std::pair<std::string, Distribution>> calibration_targets() {
    return {{"N(0,1)", Distribution::normal(0.0, 1.0)},
            {"U(-1,1)", Distribution::uniform(-1.0, 1.0)},
            {"Cauchy(0,1)", Distribution::cauchy(0.0, 1.0)},
            {"Pareto(1,2)", Distribution::pareto(1.0, 2.0)}};
}

std::vector<DistributionPair> oracle_pairs() {
    return {{"U(0,1) vs U(0,2)", Distribution::uniform(0.0, 1.0), Distribution::uniform(0.0, 2.0), 1},
            {"N(0,1) vs N(0.5,1.2)", Distribution::normal(0.0, 1.0), Distribution::normal(0.5, 1.2), 5},
            {"N(0,1) vs Cauchy(0,1)", Distribution::normal(0.0, 1.0), Distribution::cauchy(0.0, 1.0), 10},
            {"model1 vs N(2,3)", model1(), Distribution::normal(2.0, 3.0), 7},
            {"Pareto(1,2) vs Pareto(1,3)", Distribution::pareto(1.0, 2.0), Distribution::pareto(1.0, 3.0), 4}};
}

std::vector<DistributionPair> perturbed_pairs() {
    return {{"N(0,1) vs N(0.3,1)", Distribution::normal(0.0, 1.0), Distribution::normal(0.3, 1.0), 5},
            {"N(0,1) vs N(0,1.5)", Distribution::normal(0.0, 1.0), Distribution::normal(0.0, 1.5), 10},
            {"U(-1,1) vs U(-1,1.2)", Distribution::uniform(-1.0, 1.0), Distribution::uniform(-1.0, 1.2), 3},
            {"model1 vs N(2,3.2)", model1(), Distribution::normal(2.0, 3.2), 10},
            {"Cauchy(0,1) vs Cauchy(0.5,1.3)", Distribution::cauchy(0.0, 1.0), Distribution::cauchy(0.5, 1.3), 7}};
}

std::vector<CheckResult> verify_calibration(const std::vector<int>& ks, std::size_t trials, double significance,
                                            std::uint64_t seed) {
    std::vector<CheckResult> out;
    for (const auto& [name, p] : calibration_targets()) {
        for (int K : ks) {
            Stream rng(seed, "calibration:" + name + ":" + std::to_string(K));
            const auto hist = simulate_rank_histogram(p, p, K, trials, rng);
            const auto chi = chi_square_uniformity(hist, significance);
            out.push_back({"theorem1", name + " K=" + std::to_string(K), chi.accept, chi.statistic, chi.critical_value,
                           std::to_string(trials) + " draws"});
        }
    }
    return out;
}

std::vector<CheckResult> verify_oracle(std::size_t draws, double tolerance, std::uint64_t seed) {
    std::vector<CheckResult> out;
    for (const auto& pair : oracle_pairs()) {
        const auto cuts = pair.p_tilde.breakpoints();
        const auto q = q_k_oracle_all(pair.p, [&](double x) { return pair.p_tilde.cdf(x); }, pair.k, cuts);
        Stream rng(seed, "oracle:" + pair.name);
        const auto hist = simulate_rank_histogram(pair.p, pair.p_tilde, pair.k, draws, rng);
        double worst = 0.0;
        for (std::size_t n = 0; n < q.size(); ++n) {
            const double mc = static_cast<double>(hist.counts[n]) / static_cast<double>(hist.total);
            worst = std::max(worst, std::abs(mc - q[n]));
        }
        out.push_back({"oracle", pair.name + " K=" + std::to_string(pair.k), worst <= tolerance, worst, tolerance,
                       "max per-bin |quadrature - MC|"});
    }
    return out;
}

std::vector<CheckResult> verify_bound(double tolerance) {
    std::vector<CheckResult> out;
    for (const auto& pair : perturbed_pairs()) {
        const auto r = verify_theorem2_bound(pair.p, pair.p_tilde, pair.k);
        char detail[128];
        std::snprintf(detail, sizeof detail, "max deviation %.6g, epsilon %.6g", r.max_deviation, r.epsilon);
        out.push_back({"theorem2", pair.name + " K=" + std::to_string(pair.k), r.max_violation <= tolerance,
                       r.max_violation, tolerance, detail});
    }
    return out;
}

std::string format_check(const CheckResult& r) {
    char buf[512];
    std::snprintf(buf, sizeof buf, "%s %-9s %-36s value=%.6g threshold=%.6g  %s", r.pass ? "PASS" : "FAIL",
                  r.suite.c_str(), r.name.c_str(), r.value, r.threshold, r.detail.c_str());
    return buf;
}

}  // namespace isl
