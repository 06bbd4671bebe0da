#pragma once

// Hot loops of the surrogate loss and the hard rank statistic, in two
// flavors: a serial reference and an OpenMP version. Both use the same
// per-element arithmetic and fixed-order reductions, so their results are
// bit-identical; tests compare them directly.

#include <cstddef>
#include <span>
#include <vector>

namespace isl::kernels {

enum class Backend { Serial, OpenMP };

struct SurrogateParams {
    double alpha = 15.0;
    double nu = 0.5;
    int norm_order = 2;
};

struct SurrogateResult {
    double loss = 0.0;
    std::vector<double> soft_counts;  // one per data point
    std::vector<double> q;            // soft histogram, K+1 bins
    std::vector<double> d_samples;    // dL/d sample, same P x K layout as the input
};

// ISL surrogate over P data points, each with its own K generator samples
// (row-major P x K in `samples`). With `with_grad`, also returns the gradient
// of the loss with respect to every sample.
SurrogateResult surrogate_loss(std::span<const double> y, std::span<const double> samples, std::size_t K,
                               const SurrogateParams& params, bool with_grad, Backend backend);

// Hard rank statistic of every data point against its own row of K samples.
std::vector<int> rank_statistics(std::span<const double> y, std::span<const double> samples, std::size_t K,
                                 Backend backend);

}  // namespace isl::kernels
