#include "isl/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace isl {

ProgressiveKSchedule ProgressiveKSchedule::geometric(int k_max) {
    if (k_max < 1) throw std::invalid_argument("K_max must be >= 1");
    ProgressiveKSchedule s;
    s.k_values.clear();
    int k = std::min(2, k_max);
    while (k < k_max) {
        s.k_values.push_back(k);
        k = std::max(k + 1, static_cast<int>(std::ceil(1.4 * k)));
    }
    s.k_values.push_back(k_max);
    return s;
}

ProgressiveKSchedule ProgressiveKSchedule::fixed(int k) {
    ProgressiveKSchedule s;
    s.k_values = {k};
    return s;
}

void ProgressiveKSchedule::validate() const {
    if (k_values.empty() || k_values.front() < 1) throw std::invalid_argument("K schedule must start at K >= 1");
    for (std::size_t i = 1; i < k_values.size(); ++i) {
        if (k_values[i] <= k_values[i - 1]) throw std::invalid_argument("K schedule must be strictly increasing");
    }
    if (test_period < 1) throw std::invalid_argument("test period must be >= 1");
    if (!(significance > 0.0 && significance < 1.0)) throw std::invalid_argument("significance must be in (0, 1)");
}

std::size_t k_gate(const RankHistogram& hist, const ProgressiveKSchedule& schedule, std::size_t current_index) {
    if (current_index + 1 >= schedule.k_values.size()) return current_index;
    return chi_square_uniformity(hist, schedule.significance).accept ? current_index + 1 : current_index;
}

void TrainConfig::validate(std::size_t n_data) const {
    if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be > 0");
    isl.validate();
    schedule.validate();
    if (n_data < isl.batch_size) throw std::invalid_argument("need N >= M (data size >= batch size)");
    if (!(clip_norm > 0.0)) throw std::invalid_argument("clip norm must be > 0");
}

std::vector<double> evaluate_batch(std::span<const double> theta, const Mlp& generator,
                                   std::span<const double> inputs) {
    Mlp::Trace trace;
    generator.forward_train(theta, inputs, inputs.size() / generator.input_width(), trace);
    return {trace.output().begin(), trace.output().end()};
}

std::vector<double> evaluate_generator(std::span<const double> theta, const Mlp& generator,
                                       const NoiseSource& noise, std::size_t n, Stream& rng) {
    std::vector<double> z(n);
    for (auto& v : z) v = noise.sample(rng);
    return evaluate_batch(theta, generator, z);
}

RankHistogram hard_histogram(std::span<const double> theta, const Mlp& generator, const NoiseSource& noise,
                             std::span<const double> data, int K, Stream& rng, kernels::Backend backend) {
    const auto k = static_cast<std::size_t>(K);
    std::vector<double> z(data.size() * k);
    for (auto& v : z) v = noise.sample(rng);
    const auto samples = evaluate_batch(theta, generator, z);
    const auto ranks = kernels::rank_statistics(data, samples, k, backend);
    return RankHistogram::from_ranks(ranks, K);
}

BatchLoss batch_surrogate(const Mlp& generator, std::span<const double> theta, std::span<const double> y,
                          std::span<const double> z, std::size_t K, const kernels::SurrogateParams& params,
                          NoiseSharing sharing, bool with_grad, kernels::Backend backend) {
    const std::size_t M = y.size();
    const bool shared = sharing == NoiseSharing::Shared;
    const std::size_t rows = shared ? K : M * K;
    if (z.size() != rows) throw ShapeError("noise size does not match the batch");
    Mlp::Trace trace;
    generator.forward_train(theta, z, rows, trace);
    const auto out = trace.output();
    std::vector<double> samples(M * K);
    for (std::size_t j = 0; j < M; ++j) {
        for (std::size_t i = 0; i < K; ++i) samples[j * K + i] = shared ? out[i] : out[j * K + i];
    }
    const auto r = kernels::surrogate_loss(y, samples, K, params, with_grad, backend);
    BatchLoss result{r.loss, {}};
    if (!with_grad) return result;
    result.grad.assign(theta.size(), 0.0);
    if (shared) {
        // Sum each shared sample's gradient over data points in index order.
        std::vector<double> d_sample(K, 0.0);
        for (std::size_t j = 0; j < M; ++j) {
            for (std::size_t i = 0; i < K; ++i) d_sample[i] += r.d_samples[j * K + i];
        }
        generator.backward(theta, trace, d_sample, result.grad);
    } else {
        generator.backward(theta, trace, r.d_samples, result.grad);
    }
    return result;
}

TrainResult train_1d(const Mlp& generator, ParamVector theta, const NoiseSource& noise,
                     std::span<const double> data, const TrainConfig& cfg, kernels::Backend backend) {
    cfg.validate(data.size());
    if (generator.input_width() != 1 || generator.output_width() != 1) {
        throw ShapeError("train_1d needs a 1 -> 1 generator");
    }
    if (theta.values.size() != generator.num_params()) throw ShapeError("theta does not match the generator");
    for (double y : data) {
        if (!std::isfinite(y)) throw std::invalid_argument("training data must be finite");
    }

    Stream batch_rng(cfg.seed, "batches");
    Stream noise_rng(cfg.seed, "model-noise");
    Stream gate_rng(cfg.seed, "gate");
    Stream diag_rng(cfg.seed, "diagnostics");

    const std::size_t N = data.size();
    const std::size_t M = cfg.isl.batch_size;
    const std::size_t iters_per_epoch = N / M;
    const auto params = cfg.isl.surrogate();
    const auto& schedule = cfg.schedule;

    AdamState adam(theta.values.size(), AdamConfig{cfg.learning_rate});
    std::vector<std::size_t> order(N);
    std::iota(order.begin(), order.end(), 0);

    TrainResult result;
    std::size_t stage = 0;
    std::size_t iteration = 0;
    std::size_t since_test = 0;
    std::vector<double> batch(M);
    std::vector<double> z;

    auto diverged = [&](std::size_t epoch, int K, const std::string& what) {
        std::ostringstream os;
        os << what << " at epoch " << epoch << ", K=" << K << ", |theta|=" << theta.norm();
        return DivergenceError(epoch, K, theta.norm(), os.str());
    };

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        // Sampling without replacement within an epoch.
        for (std::size_t i = N; i > 1; --i) std::swap(order[i - 1], order[batch_rng.below(i)]);

        EpochRecord rec;
        rec.epoch = epoch;
        double loss_sum = 0.0;
        for (std::size_t it = 0; it < iters_per_epoch; ++it) {
            const int K = schedule.k_values[stage];
            const auto k = static_cast<std::size_t>(K);
            for (std::size_t j = 0; j < M; ++j) batch[j] = data[order[it * M + j]];

            const bool shared = cfg.noise_sharing == NoiseSharing::Shared;
            z.resize(shared ? k : M * k);
            for (auto& v : z) v = noise.sample(noise_rng);
            auto r = batch_surrogate(generator, theta.values, batch, z, k, params, cfg.noise_sharing, true, backend);
            if (!std::isfinite(r.loss)) throw diverged(epoch, K, "non-finite surrogate loss");
            auto& grad = r.grad;
            if (!std::all_of(grad.begin(), grad.end(), [](double g) { return std::isfinite(g); })) {
                throw diverged(epoch, K, "non-finite gradient");
            }
            if (clip_global_norm(grad, cfg.clip_norm)) ++rec.clipped;
            adam.step(theta.values, grad);
            if (!theta.all_finite()) throw diverged(epoch, K, "non-finite parameters");

            loss_sum += r.loss;
            ++iteration;
            ++since_test;

            if (since_test >= schedule.test_period && stage + 1 < schedule.k_values.size()) {
                since_test = 0;
                const auto hist = hard_histogram(theta.values, generator, noise, data, K, gate_rng, backend);
                const auto next = k_gate(hist, schedule, stage);
                if (next != stage) {
                    result.log.transitions.push_back({iteration, epoch, K, schedule.k_values[next]});
                    stage = next;
                }
            }
        }

        const int K = schedule.k_values[stage];
        rec.current_k = K;
        rec.surrogate_loss = loss_sum / static_cast<double>(iters_per_epoch);
        const auto hist = hard_histogram(theta.values, generator, noise, data, K, diag_rng, backend);
        rec.theoretical_loss = theoretical_isl(hist, cfg.isl.norm_order);
        const auto chi = chi_square_uniformity(hist, schedule.significance);
        rec.chi_square_statistic = chi.statistic;
        rec.accepted = chi.accept;
        result.log.records.push_back(rec);
    }
    result.theta = std::move(theta);
    return result;
}

}  // namespace isl
