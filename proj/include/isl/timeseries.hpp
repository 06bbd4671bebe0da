#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "isl/isl.hpp"
#include "isl/kernels.hpp"
#include "isl/nn.hpp"
#include "isl/random.hpp"
#include "isl/trainer.hpp"

namespace isl {

// One T x d series, row-major: values[t * dim + c].
struct Series {
    std::string id;
    std::size_t length = 0;
    std::size_t dim = 1;
    std::vector<double> values;

    double at(std::size_t t, std::size_t c) const { return values[t * dim + c]; }
    std::span<const double> row(std::size_t t) const {
        return std::span<const double>(values).subspan(t * dim, dim);
    }
};

struct SeriesBatch {
    std::vector<Series> series;

    std::size_t dim() const { return series.empty() ? 0 : series.front().dim; }
    // Throws ShapeError on inconsistent d or bad sizes, std::invalid_argument
    // on non-finite entries.
    void validate() const;
};

// RNN over the observed series plus a generator g(z, h) with one noise
// input and d outputs. Parameters are one flat vector: RNN slots first, then
// the generator's with a "gen." prefix.
class TemporalModel {
public:
    TemporalModel(RnnSpec rnn, MlpSpec generator);

    // RNN with `layers` x `hidden` cells and a dense generator with the given
    // hidden widths; `generator_act` on its hidden layers.
    static TemporalModel make(std::size_t dim, std::size_t hidden, std::size_t layers, Activation rnn_act,
                              const std::vector<std::size_t>& generator_hidden, Activation generator_act);

    const Rnn& rnn() const noexcept { return rnn_; }
    const Mlp& generator() const noexcept { return generator_; }
    const ParamLayout& layout() const noexcept { return layout_; }
    std::size_t dim() const noexcept { return generator_.output_width(); }
    std::size_t hidden_width() const noexcept { return rnn_.hidden_width(); }
    std::size_t num_params() const noexcept { return layout_.size(); }

    ParamVector init(Stream& rng) const;

    std::span<const double> rnn_theta(std::span<const double> theta) const {
        return theta.first(rnn_.num_params());
    }
    std::span<const double> generator_theta(std::span<const double> theta) const {
        return theta.subspan(rnn_.num_params());
    }

    // State after consuming the start token (zero input, zero state).
    Rnn::State initial_state(std::span<const double> theta) const;
    // Feed one observation.
    Rnn::State advance(std::span<const double> theta, std::span<const double> y, const Rnn::State& s) const;
    // One draw from g(z, top(s)).
    std::vector<double> sample(std::span<const double> theta, const Rnn::State& s, double z) const;

private:
    Rnn rnn_;
    Mlp generator_;
    ParamLayout layout_;
};

// Rank of y[t] against K conditional draws, for every t and dimension
// (T x d, row-major). Teacher-forced: h[t] consumes y[t-1].
std::vector<int> temporal_statistics(const TemporalModel& model, std::span<const double> theta,
                                     const Series& series, int K, Stream& rng);

// Result of the windowed loss on one mini-batch.
struct TemporalLoss {
    double loss = 0.0;                 // mean of per_dim
    std::vector<double> per_dim;       // isl loss of each dimension's pooled soft histogram
    std::vector<int> ranks;            // hard ranks, (series, step) x dim
    std::vector<double> samples;       // generator draws, (series, step, k) x dim
    std::vector<double> grad;          // dL/dtheta when requested
};

// Loss over windows [offsets[m], offsets[m] + window) of `batch[m]` with
// explicit standard-normal noise laid out (series, step, k). The RNN state
// entering a window is rebuilt from the series start without gradient.
TemporalLoss temporal_loss(const TemporalModel& model, std::span<const double> theta,
                           std::span<const Series* const> batch, std::span<const std::size_t> offsets,
                           std::size_t window, std::span<const double> noise, const IslConfig& isl,
                           bool with_grad, kernels::Backend backend = kernels::Backend::OpenMP);

struct TemporalTrainConfig {
    std::size_t window = 50;
    std::size_t batch = 20;  // series per iteration, capped at the number of series
    IslConfig isl;           // `isl.k` is the fixed K
    std::size_t epochs = 100;
    double learning_rate = 1e-3;
    std::uint64_t seed = 0;
    double clip_norm = 10.0;

    void validate(const SeriesBatch& data) const;
};

// One epoch is ceil(N / batch) iterations. Series are drawn without
// replacement within an iteration, window offsets uniformly.
TrainResult train_temporal(const TemporalModel& model, ParamVector theta, const SeriesBatch& data,
                           const TemporalTrainConfig& cfg, kernels::Backend backend = kernels::Backend::OpenMP);

struct ForecastConfig {
    std::size_t horizon = 10;
    std::size_t trajectories = 200;
    std::vector<double> rho{0.1, 0.5, 0.9};
};

struct ForecastResult {
    std::size_t horizon = 0;
    std::size_t dim = 0;
    std::size_t history_length = 0;
    std::size_t n_trajectories = 0;
    std::vector<double> trajectories;            // (s, t, c) row-major
    std::vector<double> rho;
    std::vector<std::vector<double>> quantiles;  // per rho: horizon x dim

    double trajectory(std::size_t s, std::size_t t, std::size_t c) const {
        return trajectories[(s * horizon + t) * dim + c];
    }
    // Index into `rho`, or nullopt.
    std::optional<std::size_t> rho_index(double level) const;
};

// Warm up on `history` (tau0 x d), then sample trajectories recursively,
// feeding each draw back. Trajectory s uses rng.split(s).
ForecastResult forecast(const TemporalModel& model, std::span<const double> theta, const Series& history,
                        const ForecastConfig& cfg, const Stream& rng,
                        kernels::Backend backend = kernels::Backend::OpenMP);

// Type-7 (linear interpolation) quantile of sorted values.
double sorted_quantile(std::span<const double> sorted, double p);

// n univariate series X_t = sum_i phi_i X_{t-i} + xi_t with xi ~ N(0,
// noise_std^2). Values before t = 0 are zero; `initial` overrides the first
// values of every series.
SeriesBatch ar_generate(std::span<const double> phi, double noise_std, std::size_t T, std::size_t n_series,
                        Stream& rng, std::span<const double> initial = {});

// Per-dimension affine scaling of one series.
struct Scaling {
    std::vector<double> mean;
    std::vector<double> scale;
};

// z-score each dimension in place; a constant dimension gets scale 1.
Scaling standardize(Series& s);
void apply_scaling(Series& s, const Scaling& sc);
void invert_scaling(Series& s, const Scaling& sc);
// Undo a scaling on raw row-major values of width sc.mean.size().
void invert_scaling(std::span<double> values, const Scaling& sc);

enum class Grouping {
    Columns,       // each value column is its own univariate series
    Multivariate,  // one series, d = number of value columns
    ById,          // rows grouped by id column, d = number of value columns
};

struct CsvLayout {
    char delimiter = ',';
    std::string time_column;                 // optional; sorted by it when set
    std::vector<std::string> value_columns;  // empty = every other column
    Grouping grouping = Grouping::Columns;
    std::string id_column;                   // required for ById
    bool standardize = false;
};

struct IngestResult {
    SeriesBatch batch;
    std::vector<Scaling> scaling;  // one per series when standardized
    std::size_t dropped_rows = 0;
};

// Header row required. Rows with an empty or NA/NaN value are dropped and
// counted; non-numeric values raise IngestionError naming the lines.
IngestResult ingest_csv(const std::string& path, const CsvLayout& layout);

// Wide CSV: header "t,<id0>,<id1>,..." for univariate batches, or
// "series,t,v0,v1,..." in long form when d > 1.
void write_series_csv(const std::string& path, const SeriesBatch& batch);

}  // namespace isl
