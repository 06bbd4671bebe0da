#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "isl/distributions.hpp"
#include "isl/errors.hpp"
#include "isl/isl.hpp"
#include "isl/kernels.hpp"
#include "isl/nn.hpp"

namespace isl {

// Increasing K stages; training advances to the next stage when the hard
// rank statistics pass a chi-square uniformity test.
struct ProgressiveKSchedule {
    std::vector<int> k_values{2, 3, 5, 7, 10};
    std::size_t test_period = 100;  // mini-batch iterations between tests
    double significance = 0.05;

    // {2, 3, 5, 7, 10, 14, ...}: each stage ceil(1.4x) the previous, capped
    // and terminated at k_max.
    static ProgressiveKSchedule geometric(int k_max);
    static ProgressiveKSchedule fixed(int k);

    void validate() const;
    int k_max() const { return k_values.back(); }
};

// Index of the stage to train next: one past `current_index` when the
// histogram passes the test and a later stage exists, otherwise unchanged.
std::size_t k_gate(const RankHistogram& hist, const ProgressiveKSchedule& schedule, std::size_t current_index);

// How generator noise is drawn within one mini-batch iteration.
enum class NoiseSharing {
    PerPoint,  // K fresh draws for every data point in the batch
    Shared,    // one set of K draws reused by the whole batch
};

struct TrainConfig {
    std::size_t epochs = 1000;
    double learning_rate = 1e-2;
    IslConfig isl;  // `isl.k` is ignored; K comes from the schedule
    ProgressiveKSchedule schedule;
    std::uint64_t seed = 0;
    double clip_norm = 10.0;
    NoiseSharing noise_sharing = NoiseSharing::PerPoint;

    void validate(std::size_t n_data) const;
};

struct EpochRecord {
    std::size_t epoch = 0;
    int current_k = 0;
    double surrogate_loss = 0.0;    // mean over the epoch's iterations
    double theoretical_loss = 0.0;  // end-of-epoch hard histogram, fresh draws
    double chi_square_statistic = 0.0;
    bool accepted = false;
    std::size_t clipped = 0;        // iterations whose gradient was clipped
};

struct KTransition {
    std::size_t iteration = 0;
    std::size_t epoch = 0;
    int from_k = 0;
    int to_k = 0;
};

struct RunLog {
    std::vector<EpochRecord> records;
    std::vector<KTransition> transitions;
};

// Raised when the loss or gradient stops being finite.
class DivergenceError : public NumericError {
public:
    DivergenceError(std::size_t epoch, int k, double theta_norm, const std::string& what)
        : NumericError("train", what), epoch_(epoch), k_(k), theta_norm_(theta_norm) {}
    std::size_t epoch() const noexcept { return epoch_; }
    int k() const noexcept { return k_; }
    double theta_norm() const noexcept { return theta_norm_; }

private:
    std::size_t epoch_;
    int k_;
    double theta_norm_;
};

struct TrainResult {
    ParamVector theta;
    RunLog log;
};

struct BatchLoss {
    double loss = 0.0;
    std::vector<double> grad;  // dL/dtheta, empty unless requested
};

// Surrogate loss of one mini-batch `y` (M points) for a 1 -> 1 generator fed
// the noise `z`: M * K values for per-point sharing (row j * K + i serves
// point j), K values for shared noise.
BatchLoss batch_surrogate(const Mlp& generator, std::span<const double> theta, std::span<const double> y,
                          std::span<const double> z, std::size_t K, const kernels::SurrogateParams& params,
                          NoiseSharing sharing, bool with_grad,
                          kernels::Backend backend = kernels::Backend::OpenMP);

// Mini-batch ISL training of a 1 -> 1 generator.
TrainResult train_1d(const Mlp& generator, ParamVector theta, const NoiseSource& noise,
                     std::span<const double> data, const TrainConfig& cfg,
                     kernels::Backend backend = kernels::Backend::OpenMP);

// Generator outputs for a row-major batch of inputs.
std::vector<double> evaluate_batch(std::span<const double> theta, const Mlp& generator,
                                   std::span<const double> inputs);

// n generator samples g(z_i), z_i drawn from `noise` with `rng`.
std::vector<double> evaluate_generator(std::span<const double> theta, const Mlp& generator,
                                       const NoiseSource& noise, std::size_t n, Stream& rng);

// Hard rank histogram of `data` with K fresh model draws per point.
RankHistogram hard_histogram(std::span<const double> theta, const Mlp& generator, const NoiseSource& noise,
                             std::span<const double> data, int K, Stream& rng,
                             kernels::Backend backend = kernels::Backend::OpenMP);

}  // namespace isl
