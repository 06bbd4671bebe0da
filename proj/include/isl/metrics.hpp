#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "isl/distributions.hpp"
#include "isl/nn.hpp"
#include "isl/timeseries.hpp"

namespace isl {

enum class TransformPolicy { FixedIncreasing, FixedDecreasing, BestOfTwo };

TransformPolicy parse_transform_policy(std::string_view name);
std::string to_string(TransformPolicy p);

struct MetricConfig {
    std::size_t n_monte_carlo = 100000;
    std::uint64_t seed = 0;
    TransformPolicy policy = TransformPolicy::BestOfTwo;

    void validate() const;
};

// sup_x |F(x) - F_n(x)| over the jumps of the empirical cdf, taking both
// sides of each jump. Ties are merged into one jump.
double ksd(std::span<const double> model_samples, const Distribution& target);

struct MaeMse {
    double mae = 0.0;
    double mse = 0.0;
    bool reflected = false;  // which monotone transform was compared against
};

// Monte Carlo of |f(z) - g(z)| and its square over z ~ noise, f the optimal
// transform onto `target`.
MaeMse mae_mse_transform(const std::function<double(double)>& generator, const NoiseSource& noise,
                         const Distribution& target, const MetricConfig& cfg);
MaeMse mae_mse_transform(std::span<const double> theta, const Mlp& generator, const NoiseSource& noise,
                         const Distribution& target, const MetricConfig& cfg);

struct ForecastMetrics {
    double nd = 0.0;
    double rmse = 0.0;
    std::vector<double> rho;
    std::vector<double> ql;  // one per rho
};

// ND and RMSE of the median forecast; QL_rho = 2 sum P_rho(y, yhat_rho) /
// sum |y|. `actual` is horizon x d, row-major. The forecast must hold the
// 0.5 level and every requested rho.
ForecastMetrics forecast_metrics(const ForecastResult& forecast, std::span<const double> actual,
                                 std::span<const double> rho_levels);

// Markdown row "| name | ksd | mae | mse |" with 4 significant digits.
std::string markdown_row(const std::string& name, double ksd_value, const MaeMse& m);
std::string markdown_header();

}  // namespace isl
