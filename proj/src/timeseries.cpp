#include "isl/timeseries.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "isl/errors.hpp"

namespace isl {

void SeriesBatch::validate() const {
    if (series.empty()) throw std::invalid_argument("series batch is empty");
    const std::size_t d = series.front().dim;
    if (d == 0) throw ShapeError("series dimension must be >= 1");
    for (const auto& s : series) {
        if (s.dim != d) throw ShapeError("series '" + s.id + "' has dimension " + std::to_string(s.dim) +
                                         ", expected " + std::to_string(d));
        if (s.values.size() != s.length * s.dim) throw ShapeError("series '" + s.id + "' has a bad value count");
        for (double v : s.values) {
            if (!std::isfinite(v)) throw std::invalid_argument("series '" + s.id + "' has a non-finite value");
        }
    }
}

TemporalModel::TemporalModel(RnnSpec rnn, MlpSpec generator) : rnn_(rnn), generator_(std::move(generator)) {
    if (generator_.input_width() != 1 + rnn_.hidden_width()) {
        throw ShapeError("generator input width must be 1 + RNN hidden width");
    }
    if (rnn_.spec().input_width != generator_.output_width()) {
        throw ShapeError("RNN input width must equal the series dimension");
    }
    layout_ = rnn_.layout();
    layout_.append(generator_.layout(), "gen.");
}

TemporalModel TemporalModel::make(std::size_t dim, std::size_t hidden, std::size_t layers, Activation rnn_act,
                                  const std::vector<std::size_t>& generator_hidden, Activation generator_act) {
    return TemporalModel(RnnSpec{dim, hidden, layers, rnn_act},
                         MlpSpec::generator(1 + hidden, generator_hidden, dim, generator_act));
}

ParamVector TemporalModel::init(Stream& rng) const {
    auto r = rnn_.init(rng);
    auto g = generator_.init(rng);
    ParamVector p{layout_, std::move(r.values)};
    p.values.insert(p.values.end(), g.values.begin(), g.values.end());
    return p;
}

Rnn::State TemporalModel::initial_state(std::span<const double> theta) const {
    const std::vector<double> token(dim(), 0.0);
    return rnn_.step(rnn_theta(theta), token, rnn_.zero_state());
}

Rnn::State TemporalModel::advance(std::span<const double> theta, std::span<const double> y,
                                  const Rnn::State& s) const {
    return rnn_.step(rnn_theta(theta), y, s);
}

std::vector<double> TemporalModel::sample(std::span<const double> theta, const Rnn::State& s, double z) const {
    std::vector<double> in(1 + hidden_width());
    in[0] = z;
    const auto h = rnn_.top(s);
    std::copy(h.begin(), h.end(), in.begin() + 1);
    return generator_.forward(generator_theta(theta), in);
}

namespace {

void check_theta(const TemporalModel& model, std::span<const double> theta) {
    if (theta.size() != model.num_params()) {
        throw ShapeError("temporal model expects " + std::to_string(model.num_params()) + " parameters, got " +
                         std::to_string(theta.size()));
    }
}

// Generator inputs [z, h] for K draws conditioned on one state.
void fill_rows(std::vector<double>& rows, std::size_t first_row, std::span<const double> z,
               std::span<const double> h) {
    const std::size_t width = 1 + h.size();
    for (std::size_t i = 0; i < z.size(); ++i) {
        double* r = rows.data() + (first_row + i) * width;
        r[0] = z[i];
        std::copy(h.begin(), h.end(), r + 1);
    }
}

}  // namespace

std::vector<int> temporal_statistics(const TemporalModel& model, std::span<const double> theta,
                                     const Series& series, int K, Stream& rng) {
    check_theta(model, theta);
    if (series.dim != model.dim()) throw ShapeError("series dimension does not match the model");
    if (K < 1) throw std::invalid_argument("K must be >= 1");
    const auto k = static_cast<std::size_t>(K);
    const std::size_t d = series.dim;
    std::vector<int> ranks(series.length * d);
    std::vector<double> z(k);
    std::vector<double> rows(k * (1 + model.hidden_width()));
    std::vector<double> draws(k);
    Mlp::Trace trace;
    Rnn::State s = model.initial_state(theta);
    for (std::size_t t = 0; t < series.length; ++t) {
        if (t > 0) s = model.advance(theta, series.row(t - 1), s);
        for (auto& v : z) v = rng.normal();
        fill_rows(rows, 0, z, model.rnn().top(s));
        model.generator().forward_train(model.generator_theta(theta), rows, k, trace);
        const auto out = trace.output();
        for (std::size_t c = 0; c < d; ++c) {
            for (std::size_t i = 0; i < k; ++i) draws[i] = out[i * d + c];
            ranks[t * d + c] = rank_statistic(series.at(t, c), draws);
        }
    }
    return ranks;
}

TemporalLoss temporal_loss(const TemporalModel& model, std::span<const double> theta,
                           std::span<const Series* const> batch, std::span<const std::size_t> offsets,
                           std::size_t window, std::span<const double> noise, const IslConfig& isl,
                           bool with_grad, kernels::Backend backend) {
    check_theta(model, theta);
    isl.validate();
    const std::size_t M = batch.size();
    const std::size_t W = window;
    const auto K = static_cast<std::size_t>(isl.k);
    const std::size_t d = model.dim();
    const std::size_t H = model.hidden_width();
    if (M == 0 || W == 0) throw std::invalid_argument("temporal loss needs at least one series and step");
    if (offsets.size() != M) throw ShapeError("one window offset per series");
    if (noise.size() != M * W * K) throw ShapeError("noise must hold series x window x K draws");
    for (std::size_t m = 0; m < M; ++m) {
        if (batch[m]->dim != d) throw ShapeError("series dimension does not match the model");
        if (offsets[m] + W > batch[m]->length) throw ShapeError("window runs past the end of a series");
    }

    const auto rnn_theta = model.rnn_theta(theta);
    const auto gen_theta = model.generator_theta(theta);
    const std::size_t rows = W * K;
    std::vector<std::vector<Rnn::StepTrace>> steps(M, std::vector<Rnn::StepTrace>(W));
    std::vector<Mlp::Trace> traces(M);
    const bool par = backend == kernels::Backend::OpenMP && M > 1;
    const auto Mi = static_cast<std::int64_t>(M);

#pragma omp parallel for schedule(static) if (par)
    for (std::int64_t mi = 0; mi < Mi; ++mi) {
        const auto m = static_cast<std::size_t>(mi);
        const Series& y = *batch[m];
        const std::vector<double> token(d, 0.0);
        auto input = [&](std::size_t t) { return t == 0 ? std::span<const double>(token) : y.row(t - 1); };
        Rnn::State s = model.rnn().zero_state();
        for (std::size_t t = 0; t < offsets[m]; ++t) s = model.rnn().step(rnn_theta, input(t), s);
        std::vector<double> in(rows * (1 + H));
        for (std::size_t w = 0; w < W; ++w) {
            model.rnn().step_train(rnn_theta, input(offsets[m] + w), s, steps[m][w]);
            s = steps[m][w].next;
            fill_rows(in, w * K, noise.subspan((m * W + w) * K, K), model.rnn().top(s));
        }
        model.generator().forward_train(gen_theta, in, rows, traces[m]);
    }

    TemporalLoss r;
    r.samples.resize(M * rows * d);
    for (std::size_t m = 0; m < M; ++m) {
        const auto out = traces[m].output();
        std::copy(out.begin(), out.end(), r.samples.begin() + static_cast<std::ptrdiff_t>(m * rows * d));
    }

    // Pool (series, step) points per dimension.
    const std::size_t P = M * W;
    std::vector<double> y_c(P);
    std::vector<double> s_c(P * K);
    std::vector<std::vector<double>> d_samples(d);
    r.per_dim.resize(d);
    r.ranks.resize(P * d);
    for (std::size_t c = 0; c < d; ++c) {
        for (std::size_t m = 0; m < M; ++m) {
            for (std::size_t w = 0; w < W; ++w) y_c[m * W + w] = batch[m]->at(offsets[m] + w, c);
        }
        for (std::size_t p = 0; p < P * K; ++p) s_c[p] = r.samples[p * d + c];
        auto res = kernels::surrogate_loss(y_c, s_c, K, isl.surrogate(), with_grad, backend);
        r.per_dim[c] = res.loss;
        d_samples[c] = std::move(res.d_samples);
        const auto ranks = kernels::rank_statistics(y_c, s_c, K, backend);
        for (std::size_t p = 0; p < P; ++p) r.ranks[p * d + c] = ranks[p];
    }
    double total = 0.0;
    for (double l : r.per_dim) total += l;
    r.loss = total / static_cast<double>(d);
    if (!with_grad) return r;

    const std::size_t n_rnn = model.rnn().num_params();
    std::vector<std::vector<double>> grads(M);
    const double inv_d = 1.0 / static_cast<double>(d);
#pragma omp parallel for schedule(static) if (par)
    for (std::int64_t mi = 0; mi < Mi; ++mi) {
        const auto m = static_cast<std::size_t>(mi);
        auto& g = grads[m];
        g.assign(model.num_params(), 0.0);
        std::vector<double> d_out(rows * d);
        for (std::size_t row = 0; row < rows; ++row) {
            for (std::size_t c = 0; c < d; ++c) d_out[row * d + c] = d_samples[c][m * rows + row] * inv_d;
        }
        std::vector<double> d_in(rows * (1 + H));
        model.generator().backward(gen_theta, traces[m], d_out, std::span<double>(g).subspan(n_rnn), d_in);
        std::vector<std::vector<double>> d_top(W, std::vector<double>(H, 0.0));
        for (std::size_t w = 0; w < W; ++w) {
            for (std::size_t i = 0; i < K; ++i) {
                const double* src = d_in.data() + (w * K + i) * (1 + H) + 1;
                for (std::size_t h = 0; h < H; ++h) d_top[w][h] += src[h];
            }
        }
        model.rnn().backward(rnn_theta, steps[m], d_top, std::span<double>(g).first(n_rnn));
    }
    r.grad.assign(model.num_params(), 0.0);
    for (const auto& g : grads) {
        for (std::size_t i = 0; i < g.size(); ++i) r.grad[i] += g[i];
    }
    return r;
}

void TemporalTrainConfig::validate(const SeriesBatch& data) const {
    data.validate();
    isl.validate();
    if (window < 1) throw std::invalid_argument("window must be >= 1");
    if (batch < 1) throw std::invalid_argument("batch must be >= 1");
    if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be > 0");
    if (!(clip_norm > 0.0)) throw std::invalid_argument("clip norm must be > 0");
    for (const auto& s : data.series) {
        if (s.length < window) throw std::invalid_argument("window exceeds the length of series '" + s.id + "'");
    }
}

TrainResult train_temporal(const TemporalModel& model, ParamVector theta, const SeriesBatch& data,
                           const TemporalTrainConfig& cfg, kernels::Backend backend) {
    cfg.validate(data);
    check_theta(model, theta.values);
    if (data.dim() != model.dim()) throw ShapeError("data dimension does not match the model");

    Stream batch_rng(cfg.seed, "batches");
    Stream noise_rng(cfg.seed, "model-noise");
    const std::size_t N = data.series.size();
    const std::size_t M = std::min(cfg.batch, N);
    const std::size_t W = cfg.window;
    const int K = cfg.isl.k;
    const std::size_t iters = (N + M - 1) / M;

    AdamState adam(theta.values.size(), AdamConfig{cfg.learning_rate});
    std::vector<std::size_t> pool(N);
    std::vector<const Series*> batch(M);
    std::vector<std::size_t> offsets(M);
    std::vector<double> noise(M * W * static_cast<std::size_t>(K));

    TrainResult result;
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        EpochRecord rec;
        rec.epoch = epoch;
        rec.current_k = K;
        double loss_sum = 0.0;
        auto hist = RankHistogram::empty(K);
        for (std::size_t it = 0; it < iters; ++it) {
            // Partial Fisher-Yates: M distinct series.
            std::iota(pool.begin(), pool.end(), 0);
            for (std::size_t m = 0; m < M; ++m) {
                std::swap(pool[m], pool[m + batch_rng.below(N - m)]);
                batch[m] = &data.series[pool[m]];
                offsets[m] = batch_rng.below(batch[m]->length - W + 1);
            }
            for (auto& v : noise) v = noise_rng.normal();
            auto r = temporal_loss(model, theta.values, batch, offsets, W, noise, cfg.isl, true, backend);
            auto fail = [&](const std::string& what) {
                std::ostringstream os;
                os << what << " at epoch " << epoch << ", K=" << K << ", |theta|=" << theta.norm();
                return DivergenceError(epoch, K, theta.norm(), os.str());
            };
            if (!std::isfinite(r.loss)) throw fail("non-finite temporal loss");
            if (!std::all_of(r.grad.begin(), r.grad.end(), [](double g) { return std::isfinite(g); })) {
                throw fail("non-finite gradient");
            }
            if (clip_global_norm(r.grad, cfg.clip_norm)) ++rec.clipped;
            adam.step(theta.values, r.grad);
            if (!theta.all_finite()) throw fail("non-finite parameters");
            loss_sum += r.loss;
            for (int a : r.ranks) hist.add(a);
        }
        rec.surrogate_loss = loss_sum / static_cast<double>(iters);
        rec.theoretical_loss = theoretical_isl(hist, cfg.isl.norm_order);
        const auto chi = chi_square_uniformity(hist, 0.05);
        rec.chi_square_statistic = chi.statistic;
        rec.accepted = chi.accept;
        result.log.records.push_back(rec);
    }
    result.theta = std::move(theta);
    return result;
}

std::optional<std::size_t> ForecastResult::rho_index(double level) const {
    for (std::size_t i = 0; i < rho.size(); ++i) {
        if (std::abs(rho[i] - level) < 1e-12) return i;
    }
    return std::nullopt;
}

double sorted_quantile(std::span<const double> sorted, double p) {
    if (sorted.empty()) throw std::invalid_argument("quantile of an empty sample");
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("quantile level must be in [0, 1]");
    const double h = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

ForecastResult forecast(const TemporalModel& model, std::span<const double> theta, const Series& history,
                        const ForecastConfig& cfg, const Stream& rng, kernels::Backend backend) {
    check_theta(model, theta);
    if (history.length < 1) throw std::invalid_argument("forecast needs at least one observed step");
    if (history.dim != model.dim()) throw ShapeError("history dimension does not match the model");
    if (cfg.horizon < 1 || cfg.trajectories < 1) throw std::invalid_argument("horizon and trajectories must be >= 1");
    for (double p : cfg.rho) {
        if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("quantile level must be in [0, 1]");
    }

    Rnn::State warm = model.initial_state(theta);
    for (std::size_t t = 0; t < history.length; ++t) warm = model.advance(theta, history.row(t), warm);

    ForecastResult f;
    f.horizon = cfg.horizon;
    f.dim = model.dim();
    f.history_length = history.length;
    f.n_trajectories = cfg.trajectories;
    f.rho = cfg.rho;
    f.trajectories.resize(cfg.trajectories * cfg.horizon * f.dim);
    const auto S = static_cast<std::int64_t>(cfg.trajectories);
#pragma omp parallel for schedule(static) if (backend == kernels::Backend::OpenMP && S > 1)
    for (std::int64_t si = 0; si < S; ++si) {
        const auto s = static_cast<std::size_t>(si);
        Stream sub = rng.split(s);
        Rnn::State state = warm;
        for (std::size_t t = 0; t < cfg.horizon; ++t) {
            const auto y = model.sample(theta, state, sub.normal());
            std::copy(y.begin(), y.end(), f.trajectories.begin() + static_cast<std::ptrdiff_t>((s * cfg.horizon + t) * f.dim));
            if (t + 1 < cfg.horizon) state = model.advance(theta, y, state);
        }
    }

    f.quantiles.assign(f.rho.size(), std::vector<double>(cfg.horizon * f.dim));
    std::vector<double> column(cfg.trajectories);
    for (std::size_t t = 0; t < cfg.horizon; ++t) {
        for (std::size_t c = 0; c < f.dim; ++c) {
            for (std::size_t s = 0; s < cfg.trajectories; ++s) column[s] = f.trajectory(s, t, c);
            std::sort(column.begin(), column.end());
            for (std::size_t q = 0; q < f.rho.size(); ++q) f.quantiles[q][t * f.dim + c] = sorted_quantile(column, f.rho[q]);
        }
    }
    return f;
}

SeriesBatch ar_generate(std::span<const double> phi, double noise_std, std::size_t T, std::size_t n_series,
                        Stream& rng, std::span<const double> initial) {
    if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) throw std::invalid_argument("noise std must be >= 0");
    SeriesBatch b;
    b.series.reserve(n_series);
    for (std::size_t n = 0; n < n_series; ++n) {
        Series s{"ar" + std::to_string(n), T, 1, std::vector<double>(T)};
        for (std::size_t t = 0; t < T; ++t) {
            // Noise is drawn for every step so the stream position does not
            // depend on `initial`.
            const double xi = noise_std * rng.normal();
            if (t < initial.size()) {
                s.values[t] = initial[t];
                continue;
            }
            double x = xi;
            for (std::size_t i = 0; i < phi.size() && i < t; ++i) x += phi[i] * s.values[t - 1 - i];
            s.values[t] = x;
        }
        b.series.push_back(std::move(s));
    }
    return b;
}

Scaling standardize(Series& s) {
    Scaling sc{std::vector<double>(s.dim, 0.0), std::vector<double>(s.dim, 1.0)};
    if (s.length == 0) return sc;
    for (std::size_t c = 0; c < s.dim; ++c) {
        double mean = 0.0;
        for (std::size_t t = 0; t < s.length; ++t) mean += s.at(t, c);
        mean /= static_cast<double>(s.length);
        double var = 0.0;
        for (std::size_t t = 0; t < s.length; ++t) var += (s.at(t, c) - mean) * (s.at(t, c) - mean);
        var /= static_cast<double>(s.length);
        sc.mean[c] = mean;
        sc.scale[c] = var > 0.0 ? std::sqrt(var) : 1.0;
    }
    apply_scaling(s, sc);
    return sc;
}

void apply_scaling(Series& s, const Scaling& sc) {
    if (sc.mean.size() != s.dim || sc.scale.size() != s.dim) throw ShapeError("scaling width mismatch");
    for (std::size_t i = 0; i < s.values.size(); ++i) {
        const std::size_t c = i % s.dim;
        s.values[i] = (s.values[i] - sc.mean[c]) / sc.scale[c];
    }
}

void invert_scaling(std::span<double> values, const Scaling& sc) {
    const std::size_t d = sc.mean.size();
    if (d == 0 || sc.scale.size() != d || values.size() % d != 0) throw ShapeError("scaling width mismatch");
    for (std::size_t i = 0; i < values.size(); ++i) values[i] = values[i] * sc.scale[i % d] + sc.mean[i % d];
}

void invert_scaling(Series& s, const Scaling& sc) {
    if (sc.mean.size() != s.dim) throw ShapeError("scaling width mismatch");
    invert_scaling(std::span<double>(s.values), sc);
}

namespace {

std::vector<std::string> split_fields(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (char ch : line) {
        if (ch == '"') {
            quoted = !quoted;
        } else if (ch == delim && !quoted) {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    for (auto& f : out) {
        const auto b = f.find_first_not_of(" \t");
        const auto e = f.find_last_not_of(" \t");
        f = b == std::string::npos ? std::string() : f.substr(b, e - b + 1);
    }
    return out;
}

bool is_missing(const std::string& f) {
    return f.empty() || f == "NA" || f == "na" || f == "NaN" || f == "nan" || f == "null" || f == "NULL";
}

std::optional<double> parse_number(const std::string& f) {
    double v = 0.0;
    const char* b = f.data();
    if (!f.empty() && f[0] == '+') ++b;
    const auto [ptr, ec] = std::from_chars(b, f.data() + f.size(), v);
    if (ec != std::errc() || ptr != f.data() + f.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

std::size_t column_index(const std::vector<std::string>& header, const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw IngestionError("column '" + name + "' not in header");
    return static_cast<std::size_t>(it - header.begin());
}

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

}  // namespace

IngestResult ingest_csv(const std::string& path, const CsvLayout& layout) {
    std::ifstream in(path);
    if (!in) throw IngestionError("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw IngestionError("'" + path + "' is empty; a header row is required");
    const auto header = split_fields(line, layout.delimiter);

    std::optional<std::size_t> time_col;
    if (!layout.time_column.empty()) time_col = column_index(header, layout.time_column);
    std::optional<std::size_t> id_col;
    if (layout.grouping == Grouping::ById) {
        if (layout.id_column.empty()) throw IngestionError("grouping by id needs an id column");
        id_col = column_index(header, layout.id_column);
    }
    std::vector<std::size_t> value_cols;
    if (layout.value_columns.empty()) {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (i != time_col && i != id_col) value_cols.push_back(i);
        }
    } else {
        for (const auto& name : layout.value_columns) value_cols.push_back(column_index(header, name));
    }
    if (value_cols.empty()) throw IngestionError("no value columns");

    struct Row {
        std::string time;
        std::string id;
        std::vector<double> values;
    };
    std::vector<Row> rows;
    std::vector<std::size_t> bad_lines;
    IngestResult result;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto fields = split_fields(line, layout.delimiter);
        if (fields.size() != header.size()) {
            bad_lines.push_back(lineno);
            continue;
        }
        Row row;
        if (time_col) row.time = fields[*time_col];
        if (id_col) row.id = fields[*id_col];
        bool missing = false;
        bool bad = false;
        for (std::size_t c : value_cols) {
            if (is_missing(fields[c])) {
                missing = true;
                continue;
            }
            const auto v = parse_number(fields[c]);
            if (!v) {
                bad = true;
                break;
            }
            row.values.push_back(*v);
        }
        if (bad) {
            bad_lines.push_back(lineno);
        } else if (missing) {
            ++result.dropped_rows;
        } else {
            rows.push_back(std::move(row));
        }
    }
    if (!bad_lines.empty()) {
        std::ostringstream os;
        os << "unparseable rows in '" << path << "' at line(s)";
        for (std::size_t i = 0; i < bad_lines.size() && i < 20; ++i) os << ' ' << bad_lines[i];
        if (bad_lines.size() > 20) os << " ...";
        throw IngestionError(os.str());
    }
    if (rows.empty()) throw IngestionError("'" + path + "' has no complete data rows");

    if (time_col) {
        std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
            const auto x = parse_number(a.time);
            const auto y = parse_number(b.time);
            if (x && y) return *x < *y;
            return a.time < b.time;
        });
    }

    const std::size_t d = value_cols.size();
    auto& out = result.batch.series;
    switch (layout.grouping) {
        case Grouping::Columns:
            for (std::size_t c = 0; c < d; ++c) {
                Series s{header[value_cols[c]], rows.size(), 1, {}};
                for (const auto& r : rows) s.values.push_back(r.values[c]);
                out.push_back(std::move(s));
            }
            break;
        case Grouping::Multivariate: {
            Series s{std::filesystem::path(path).stem().string(), rows.size(), d, {}};
            for (const auto& r : rows) s.values.insert(s.values.end(), r.values.begin(), r.values.end());
            out.push_back(std::move(s));
            break;
        }
        case Grouping::ById: {
            std::map<std::string, std::size_t> index;
            for (const auto& r : rows) {
                auto [it, fresh] = index.try_emplace(r.id, out.size());
                if (fresh) out.push_back(Series{r.id, 0, d, {}});
                auto& s = out[it->second];
                s.values.insert(s.values.end(), r.values.begin(), r.values.end());
                ++s.length;
            }
            break;
        }
    }
    if (layout.standardize) {
        for (auto& s : out) result.scaling.push_back(standardize(s));
    }
    result.batch.validate();
    return result;
}

void write_series_csv(const std::string& path, const SeriesBatch& batch) {
    batch.validate();
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write '" + path + "'");
    const bool wide = batch.dim() == 1 && std::all_of(batch.series.begin(), batch.series.end(), [&](const Series& s) {
                          return s.length == batch.series.front().length;
                      });
    if (wide) {
        os << 't';
        for (const auto& s : batch.series) os << ',' << s.id;
        os << '\n';
        for (std::size_t t = 0; t < batch.series.front().length; ++t) {
            os << t;
            for (const auto& s : batch.series) os << ',' << format_double(s.values[t]);
            os << '\n';
        }
    } else {
        os << "series,t";
        for (std::size_t c = 0; c < batch.dim(); ++c) os << ",v" << c;
        os << '\n';
        for (const auto& s : batch.series) {
            for (std::size_t t = 0; t < s.length; ++t) {
                os << s.id << ',' << t;
                for (std::size_t c = 0; c < s.dim; ++c) os << ',' << format_double(s.at(t, c));
                os << '\n';
            }
        }
    }
    if (!os) throw std::runtime_error("failed writing '" + path + "'");
}

}  // namespace isl
