#include "isl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "isl/trainer.hpp"

namespace isl {

TransformPolicy parse_transform_policy(std::string_view name) {
    if (name == "increasing") return TransformPolicy::FixedIncreasing;
    if (name == "decreasing") return TransformPolicy::FixedDecreasing;
    if (name == "best") return TransformPolicy::BestOfTwo;
    throw std::invalid_argument("unknown transform policy '" + std::string(name) + "'");
}

std::string to_string(TransformPolicy p) {
    switch (p) {
        case TransformPolicy::FixedIncreasing: return "increasing";
        case TransformPolicy::FixedDecreasing: return "decreasing";
        case TransformPolicy::BestOfTwo: break;
    }
    return "best";
}

void MetricConfig::validate() const {
    if (n_monte_carlo < 1000) throw std::invalid_argument("n_monte_carlo must be >= 1000");
}

double ksd(std::span<const double> model_samples, const Distribution& target) {
    if (model_samples.empty()) throw std::invalid_argument("KSD of an empty sample");
    std::vector<double> s(model_samples.begin(), model_samples.end());
    std::sort(s.begin(), s.end());
    const double n = static_cast<double>(s.size());
    double d = 0.0;
    std::size_t i = 0;
    while (i < s.size()) {
        std::size_t j = i;
        while (j < s.size() && s[j] == s[i]) ++j;
        const double F = target.cdf(s[i]);
        d = std::max({d, std::abs(F - static_cast<double>(i) / n), std::abs(F - static_cast<double>(j) / n)});
        i = j;
    }
    return d;
}

namespace {

struct Sums {
    double abs = 0.0;
    double sq = 0.0;
};

Sums accumulate(const std::vector<double>& g, const std::vector<double>& f) {
    Sums s;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double e = std::abs(f[i] - g[i]);
        s.abs += e;
        s.sq += e * e;
    }
    return s;
}

MaeMse compare(const std::vector<double>& z, const std::vector<double>& g, const NoiseSource& noise,
               const Distribution& target, TransformPolicy policy) {
    const double n = static_cast<double>(z.size());
    auto branch = [&](bool reflected) {
        std::vector<double> f(z.size());
        for (std::size_t i = 0; i < z.size(); ++i) f[i] = optimal_transform(target, noise, z[i], reflected);
        const auto s = accumulate(g, f);
        return MaeMse{s.abs / n, s.sq / n, reflected};
    };
    if (policy == TransformPolicy::FixedIncreasing) return branch(false);
    if (policy == TransformPolicy::FixedDecreasing) return branch(true);
    const auto up = branch(false);
    const auto down = branch(true);
    return down.mae < up.mae ? down : up;
}

}  // namespace

MaeMse mae_mse_transform(const std::function<double(double)>& generator, const NoiseSource& noise,
                         const Distribution& target, const MetricConfig& cfg) {
    cfg.validate();
    Stream rng(cfg.seed, "metrics");
    std::vector<double> z(cfg.n_monte_carlo);
    for (auto& v : z) v = noise.sample(rng);
    std::vector<double> g(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) g[i] = generator(z[i]);
    return compare(z, g, noise, target, cfg.policy);
}

MaeMse mae_mse_transform(std::span<const double> theta, const Mlp& generator, const NoiseSource& noise,
                         const Distribution& target, const MetricConfig& cfg) {
    cfg.validate();
    Stream rng(cfg.seed, "metrics");
    std::vector<double> z(cfg.n_monte_carlo);
    for (auto& v : z) v = noise.sample(rng);
    return compare(z, evaluate_batch(theta, generator, z), noise, target, cfg.policy);
}

ForecastMetrics forecast_metrics(const ForecastResult& forecast, std::span<const double> actual,
                                 std::span<const double> rho_levels) {
    const std::size_t n = forecast.horizon * forecast.dim;
    if (actual.size() != n) throw ShapeError("actual values must be horizon x d");
    const auto med = forecast.rho_index(0.5);
    if (!med) throw std::invalid_argument("forecast has no 0.5 quantile");
    double denom = 0.0;
    for (double y : actual) denom += std::abs(y);
    if (!(denom > 0.0)) throw std::domain_error("sum |y| is zero; ND and QL are undefined");

    ForecastMetrics m;
    const auto& median = forecast.quantiles[*med];
    double abs_err = 0.0;
    double sq_err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = median[i] - actual[i];
        abs_err += std::abs(e);
        sq_err += e * e;
    }
    m.nd = abs_err / denom;
    m.rmse = std::sqrt(sq_err / static_cast<double>(n));
    for (double rho : rho_levels) {
        const auto q = forecast.rho_index(rho);
        if (!q) throw std::invalid_argument("forecast has no " + std::to_string(rho) + " quantile");
        const auto& yq = forecast.quantiles[*q];
        double risk = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double diff = actual[i] - yq[i];
            risk += diff > 0.0 ? rho * diff : (1.0 - rho) * -diff;
        }
        m.rho.push_back(rho);
        m.ql.push_back(2.0 * risk / denom);
    }
    return m;
}

std::string markdown_header() { return "| target | KSD | MAE | MSE |\n|---|---|---|---|"; }

std::string markdown_row(const std::string& name, double ksd_value, const MaeMse& m) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "| %s | %.4g | %.4g | %.4g |", name.c_str(), ksd_value, m.mae, m.mse);
    return buf;
}

}  // namespace isl
