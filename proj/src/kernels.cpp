#include "isl/kernels.hpp"

#include <cmath>
#include <cstdint>

#include "isl/autodiff.hpp"
#include "isl/errors.hpp"
#include "isl/isl.hpp"

namespace isl::kernels {

namespace {

constexpr std::int64_t parallel_threshold = 256;

void check_shapes(std::span<const double> y, std::span<const double> samples, std::size_t K) {
    if (K == 0) throw ShapeError("K must be >= 1");
    if (samples.size() != y.size() * K) throw ShapeError("samples must be a P x K matrix");
    if (y.empty()) throw ShapeError("no data points");
}

inline double kernel(double a, std::size_t k, double two_nu2) {
    const double d = a - static_cast<double>(k);
    return std::exp(-(d * d) / two_nu2);
}

// dL/dq for the l1 or l2 distance to the uniform pmf.
std::vector<double> loss_slope(const std::vector<double>& q, double loss, int norm_order) {
    const double u = 1.0 / static_cast<double>(q.size());
    std::vector<double> dq(q.size(), 0.0);
    for (std::size_t k = 0; k < q.size(); ++k) {
        const double diff = q[k] - u;
        if (norm_order == 1) {
            dq[k] = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
        } else if (loss > 0.0) {
            dq[k] = diff / loss;
        }
    }
    return dq;
}

// Per-point gradient: dL/da_j, then spread over the point's samples.
inline void point_gradient(std::size_t j, std::span<const double> y, std::span<const double> samples,
                           std::size_t K, const SurrogateParams& p, const std::vector<double>& psi,
                           const std::vector<double>& dq, double a, double inv_p, std::vector<double>& out) {
    const double nu2 = p.nu * p.nu;
    double da = 0.0;
    for (std::size_t k = 0; k <= K; ++k) {
        da += dq[k] * psi[j * (K + 1) + k] * (-(a - static_cast<double>(k)) / nu2);
    }
    da *= inv_p;
    for (std::size_t i = 0; i < K; ++i) {
        const double s = ad::sigmoid(p.alpha * (y[j] - samples[j * K + i]));
        out[j * K + i] = da * (-p.alpha) * s * (1.0 - s);
    }
}

}  // namespace

SurrogateResult surrogate_loss(std::span<const double> y, std::span<const double> samples, std::size_t K,
                               const SurrogateParams& params, bool with_grad, Backend backend) {
    check_shapes(y, samples, K);
    const auto P = static_cast<std::int64_t>(y.size());
    const double two_nu2 = 2.0 * params.nu * params.nu;
    const bool par = backend == Backend::OpenMP && P > parallel_threshold;

    SurrogateResult r;
    r.soft_counts.resize(y.size());
    std::vector<double> psi(y.size() * (K + 1));

#pragma omp parallel for schedule(static) if (par)
    for (std::int64_t j = 0; j < P; ++j) {
        const auto row = samples.subspan(static_cast<std::size_t>(j) * K, K);
        const double a = soft_count(y[static_cast<std::size_t>(j)], row, params.alpha);
        r.soft_counts[static_cast<std::size_t>(j)] = a;
        for (std::size_t k = 0; k <= K; ++k) psi[static_cast<std::size_t>(j) * (K + 1) + k] = kernel(a, k, two_nu2);
    }

    // Bin sums run over j in index order in both backends.
    r.q.assign(K + 1, 0.0);
    const auto bins = static_cast<std::int64_t>(K + 1);
#pragma omp parallel for schedule(static) if (par)
    for (std::int64_t k = 0; k < bins; ++k) {
        double acc = 0.0;
        for (std::int64_t j = 0; j < P; ++j) acc += psi[static_cast<std::size_t>(j * bins + k)];
        r.q[static_cast<std::size_t>(k)] = acc / static_cast<double>(P);
    }
    r.loss = isl_loss(SoftHistogram{r.q}, params.norm_order);

    if (!with_grad) return r;
    const auto dq = loss_slope(r.q, r.loss, params.norm_order);
    r.d_samples.assign(samples.size(), 0.0);
    const double inv_p = 1.0 / static_cast<double>(P);
#pragma omp parallel for schedule(static) if (par)
    for (std::int64_t j = 0; j < P; ++j) {
        const auto jj = static_cast<std::size_t>(j);
        point_gradient(jj, y, samples, K, params, psi, dq, r.soft_counts[jj], inv_p, r.d_samples);
    }
    return r;
}

std::vector<int> rank_statistics(std::span<const double> y, std::span<const double> samples, std::size_t K,
                                 Backend backend) {
    check_shapes(y, samples, K);
    const auto P = static_cast<std::int64_t>(y.size());
    std::vector<int> ranks(y.size());
#pragma omp parallel for schedule(static) if (backend == Backend::OpenMP && P > parallel_threshold)
    for (std::int64_t j = 0; j < P; ++j) {
        const auto jj = static_cast<std::size_t>(j);
        ranks[jj] = rank_statistic(y[jj], samples.subspan(jj * K, K));
    }
    return ranks;
}

}  // namespace isl::kernels
