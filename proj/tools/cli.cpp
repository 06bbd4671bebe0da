#include "isl/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "isl/distributions.hpp"
#include "isl/errors.hpp"
#include "isl/io.hpp"
#include "isl/isl.hpp"
#include "isl/metrics.hpp"
#include "isl/nn.hpp"
#include "isl/timeseries.hpp"
#include "isl/trainer.hpp"
#include "isl/verify.hpp"

#ifndef ISL_VERSION
#define ISL_VERSION "unknown"
#endif

namespace isl::cli {

namespace fs = std::filesystem;
using io::json;

namespace {

class PropertyFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::vector<std::string> split(const std::string& text, char delim) {
    std::vector<std::string> out;
    if (text.empty()) return out;
    std::string cur;
    std::istringstream is(text);
    while (std::getline(is, cur, delim)) {
        const auto b = cur.find_first_not_of(" \t");
        const auto e = cur.find_last_not_of(" \t");
        out.push_back(b == std::string::npos ? std::string() : cur.substr(b, e - b + 1));
    }
    return out;
}

std::vector<double> parse_doubles(const std::string& text, const std::string& what) {
    std::vector<double> out;
    for (const auto& f : split(text, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(f, &used));
            if (used != f.size()) throw std::invalid_argument(f);
        } catch (const std::logic_error&) {
            throw std::invalid_argument("bad number '" + f + "' in " + what);
        }
    }
    return out;
}

std::vector<std::size_t> parse_sizes(const std::string& text, const std::string& what) {
    std::vector<std::size_t> out;
    for (double v : parse_doubles(text, what)) {
        if (!(v >= 1.0) || v != std::floor(v)) throw std::invalid_argument(what + " entries must be positive integers");
        out.push_back(static_cast<std::size_t>(v));
    }
    return out;
}

std::string utc_now() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// Config file: a JSON object (or a manifest, whose "config" is used) or
// flat `key = value` lines with # comments. Returned as "--key value" pairs.
std::vector<std::string> config_args(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::invalid_argument("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << is.rdbuf();
    const std::string text = ss.str();
    std::vector<std::string> out;
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{') {
        json j;
        try {
            j = json::parse(text);
        } catch (const json::exception& e) {
            throw std::invalid_argument("config file '" + path + "' is not valid JSON: " + e.what());
        }
        if (j.contains("config") && j.at("config").is_object()) j = j.at("config");
        for (const auto& [key, value] : j.items()) {
            std::string v;
            if (value.is_string()) {
                v = value.get<std::string>();
            } else if (value.is_array()) {
                for (std::size_t i = 0; i < value.size(); ++i) {
                    v += (i ? "," : "") + (value[i].is_string() ? value[i].get<std::string>() : value[i].dump());
                }
            } else {
                v = value.dump();
            }
            out.push_back("--" + key);
            out.push_back(v);
        }
        return out;
    }
    std::istringstream lines(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(lines, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument(path + ":" + std::to_string(lineno) + ": expected key = value");
        }
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        out.push_back("--" + trim(line.substr(0, eq)));
        out.push_back(trim(line.substr(eq + 1)));
    }
    return out;
}

struct Run {
    std::string command;
    std::vector<std::string> args;
    fs::path out_dir;
    std::ostream& out;
    std::ostream& err;
    CLI::App* sub = nullptr;
    std::string started;
    json artifacts = json::object();

    fs::path artifact(const std::string& key, const std::string& file) {
        artifacts[key] = file;
        return out_dir / file;
    }

    // Every option with its effective value, defaults included.
    json resolved_config() const {
        json cfg = json::object();
        for (const CLI::Option* opt : sub->get_options()) {
            if (opt->get_lnames().empty()) continue;
            const auto& name = opt->get_lnames().front();
            if (name == "help" || name == "config" || name == "out") continue;
            std::string value = opt->count() > 0 ? opt->results().back() : opt->get_default_str();
            if (value.empty() && opt->count() == 0) continue;
            cfg[name] = value;
        }
        return cfg;
    }

    void write_manifest(std::uint64_t seed) {
        json m = {{"command", command},
                  {"config", resolved_config()},
                  {"seed", seed},
                  {"version", ISL_VERSION},
                  {"started", started},
                  {"finished", utc_now()},
                  {"artifacts", artifacts}};
        io::write_json((out_dir / "manifest.json").string(), m);
    }
};

void add_layout_options(CLI::App* sub, CsvLayout& layout, std::string& value_columns, std::string& grouping,
                        std::string& delimiter) {
    sub->add_option("--delimiter", delimiter, "Field delimiter");
    sub->add_option("--time-column", layout.time_column, "Column to sort rows by");
    sub->add_option("--value-columns", value_columns, "Comma-separated value columns (default: all others)");
    sub->add_option("--grouping", grouping, "columns | multivariate | by-id");
    sub->add_option("--id-column", layout.id_column, "Series id column for by-id grouping");
    sub->add_option("--standardize", layout.standardize, "z-score each series (true/false)");
}

void finish_layout(CsvLayout& layout, const std::string& value_columns, const std::string& grouping,
                   const std::string& delimiter) {
    if (delimiter.size() != 1) throw std::invalid_argument("delimiter must be one character");
    layout.delimiter = delimiter[0];
    layout.value_columns = split(value_columns, ',');
    if (grouping == "columns") {
        layout.grouping = Grouping::Columns;
    } else if (grouping == "multivariate") {
        layout.grouping = Grouping::Multivariate;
    } else if (grouping == "by-id") {
        layout.grouping = Grouping::ById;
    } else {
        throw std::invalid_argument("unknown grouping '" + grouping + "'");
    }
}

json layout_json(const CsvLayout& l, const std::string& grouping) {
    return {{"delimiter", std::string(1, l.delimiter)},
            {"time_column", l.time_column},
            {"value_columns", l.value_columns},
            {"grouping", grouping},
            {"id_column", l.id_column},
            {"standardize", l.standardize}};
}

CsvLayout layout_from_json(const json& j) {
    CsvLayout l;
    std::string vc;
    for (const auto& c : j.at("value_columns")) vc += (vc.empty() ? "" : ",") + c.get<std::string>();
    l.time_column = j.at("time_column").get<std::string>();
    l.id_column = j.at("id_column").get<std::string>();
    l.standardize = j.at("standardize").get<bool>();
    finish_layout(l, vc, j.at("grouping").get<std::string>(), j.at("delimiter").get<std::string>());
    return l;
}

json scaling_json(const Scaling& s) { return {{"mean", s.mean}, {"scale", s.scale}}; }

Scaling scaling_from_json(const json& j) {
    return {j.at("mean").get<std::vector<double>>(), j.at("scale").get<std::vector<double>>()};
}

const Series& find_series(const SeriesBatch& b, const std::string& id) {
    if (id.empty()) return b.series.front();
    for (const auto& s : b.series) {
        if (s.id == id) return s;
    }
    throw std::invalid_argument("no series with id '" + id + "'");
}

void require_file(const std::string& path, const std::string& what) {
    if (path.empty() || !fs::is_regular_file(path)) throw std::invalid_argument(what + " '" + path + "' not found");
}

// ---- train1d ---------------------------------------------------------------

struct Train1dOptions {
    std::string target;
    std::string noise = "normal";
    int kmax = 10;
    std::size_t n = 1000;
    std::size_t epochs = 1000;
    double lr = 1e-2;
    std::size_t batch = 100;
    double alpha = 15.0;
    double nu = 0.5;
    int norm = 2;
    std::string hidden = "7,13,7";
    std::string activation = "elu";
    std::size_t test_period = 100;
    double significance = 0.05;
    std::string noise_sharing = "per-point";
    double clip = 10.0;
    std::size_t eval_samples = 100000;
    std::uint64_t seed = 0;
};

void add_train1d(CLI::App& app, Train1dOptions& o) {
    auto* s = app.add_subcommand("train1d", "Train a 1D generator with progressive K");
    s->add_option("--target", o.target, "Target distribution, e.g. normal:4,2")->required();
    s->add_option("--noise", o.noise, "Latent noise: normal | uniform:a,b");
    s->add_option("--kmax", o.kmax, "Largest K in the schedule");
    s->add_option("--n", o.n, "Training set size");
    s->add_option("--epochs", o.epochs, "Epochs");
    s->add_option("--lr", o.lr, "Adam learning rate");
    s->add_option("--batch", o.batch, "Mini-batch size M");
    s->add_option("--alpha", o.alpha, "Sigmoid slope");
    s->add_option("--nu", o.nu, "Soft-bin kernel width");
    s->add_option("--norm", o.norm, "Loss norm order (1 or 2)");
    s->add_option("--hidden", o.hidden, "Hidden widths, comma-separated");
    s->add_option("--activation", o.activation, "Hidden activation: relu | elu | tanh | identity");
    s->add_option("--test-period", o.test_period, "Iterations between K-advance tests");
    s->add_option("--significance", o.significance, "Chi-square significance for K advance");
    s->add_option("--noise-sharing", o.noise_sharing, "per-point | shared");
    s->add_option("--clip", o.clip, "Gradient global-norm clip");
    s->add_option("--eval-samples", o.eval_samples, "Monte Carlo draws for metrics");
    s->add_option("--seed", o.seed, "Random seed");
}

int cmd_train1d(Run& run, const Train1dOptions& o) {
    const auto target = Distribution::parse(o.target);
    const auto noise = NoiseSource::parse(o.noise);
    const Mlp gen(MlpSpec::generator(1, parse_sizes(o.hidden, "--hidden"), 1, parse_activation(o.activation)));

    TrainConfig cfg;
    cfg.epochs = o.epochs;
    cfg.learning_rate = o.lr;
    cfg.isl.k = o.kmax;
    cfg.isl.alpha = o.alpha;
    cfg.isl.nu = o.nu;
    cfg.isl.norm_order = o.norm;
    cfg.isl.batch_size = o.batch;
    cfg.schedule = ProgressiveKSchedule::geometric(o.kmax);
    cfg.schedule.test_period = o.test_period;
    cfg.schedule.significance = o.significance;
    cfg.seed = o.seed;
    cfg.clip_norm = o.clip;
    if (o.noise_sharing == "per-point") {
        cfg.noise_sharing = NoiseSharing::PerPoint;
    } else if (o.noise_sharing == "shared") {
        cfg.noise_sharing = NoiseSharing::Shared;
    } else {
        throw std::invalid_argument("unknown noise sharing '" + o.noise_sharing + "'");
    }
    MetricConfig mcfg{o.eval_samples, o.seed, TransformPolicy::BestOfTwo};
    mcfg.validate();
    cfg.validate(o.n);

    Stream data_rng(o.seed, "data");
    const auto data = target.sample(o.n, data_rng);
    Stream init_rng(o.seed, "init");
    const auto result = train_1d(gen, gen.init(init_rng), noise, data, cfg);

    Stream eval_rng(o.seed, "eval");
    auto samples = evaluate_generator(result.theta.values, gen, noise, o.eval_samples, eval_rng);
    const double ksd_value = ksd(samples, target);
    const auto mm = mae_mse_transform(result.theta.values, gen, noise, target, mcfg);
    Stream hist_rng(o.seed, "final-histogram");
    const auto hist = hard_histogram(result.theta.values, gen, noise, data, o.kmax, hist_rng);
    const auto& last = result.log.records.back();

    json meta = {{"target", target.to_string()}, {"noise", noise.to_string()}};
    io::save_checkpoint(run.artifact("checkpoint", "checkpoint.json").string(),
                        io::make_checkpoint(gen, result.theta, meta));
    io::write_run_log(run.artifact("run_log", "runlog.jsonl").string(), result.log);
    json hj = io::to_json(hist);
    hj["manifest"] = "manifest.json";
    io::write_json(run.artifact("rank_histogram", "histogram.json").string(), hj);

    // Plot grids: cdfs and densities over the target's central 99%.
    std::sort(samples.begin(), samples.end());
    const double lo = target.quantile(0.005);
    const double hi = target.quantile(0.995);
    std::vector<double> xs, tcdf, mcdf;
    for (int i = 0; i <= 200; ++i) {
        const double x = lo + (hi - lo) * i / 200.0;
        xs.push_back(x);
        tcdf.push_back(target.cdf(x));
        mcdf.push_back(static_cast<double>(std::upper_bound(samples.begin(), samples.end(), x) - samples.begin()) /
                       static_cast<double>(samples.size()));
    }
    io::write_columns_csv(run.artifact("cdf", "cdf.csv").string(), {"x", "target_cdf", "model_cdf"},
                          {xs, tcdf, mcdf});
    const int bins = 100;
    const double width = (hi - lo) / bins;
    std::vector<double> centers(bins), mdens(bins, 0.0), tdens(bins);
    for (double v : samples) {
        if (v < lo || v >= hi) continue;
        mdens[std::min(bins - 1, static_cast<int>((v - lo) / width))] += 1.0;
    }
    for (int b = 0; b < bins; ++b) {
        centers[b] = lo + (b + 0.5) * width;
        mdens[b] /= static_cast<double>(samples.size()) * width;
        tdens[b] = target.pdf(centers[b]);
    }
    io::write_columns_csv(run.artifact("density", "density.csv").string(),
                          {"x", "model_density", "target_density"}, {centers, mdens, tdens});
    std::vector<double> ep, ks;
    for (const auto& r : result.log.records) {
        ep.push_back(static_cast<double>(r.epoch));
        ks.push_back(r.current_k);
    }
    io::write_columns_csv(run.artifact("k_trace", "k_trace.csv").string(), {"epoch", "k"}, {ep, ks});

    json metrics = {{"target", target.to_string()},
                    {"ksd", ksd_value},
                    {"mae", mm.mae},
                    {"mse", mm.mse},
                    {"transform", mm.reflected ? "decreasing" : "increasing"},
                    {"n_monte_carlo", o.eval_samples},
                    {"seed", o.seed},
                    {"final_k", last.current_k},
                    {"final_theoretical_loss", last.theoretical_loss},
                    {"manifest", "manifest.json"}};
    io::write_json(run.artifact("metrics", "metrics.json").string(), metrics);
    run.write_manifest(o.seed);
    run.out << "ksd " << io::format_double(ksd_value) << " mae " << io::format_double(mm.mae) << " mse "
            << io::format_double(mm.mse) << " final K " << last.current_k << '\n';
    return exit_ok;
}

// ---- synth-ar --------------------------------------------------------------

struct SynthArOptions {
    std::string phi = "0.5,0.2";
    double noise_var = 0.01;
    std::optional<double> noise_std;
    std::size_t t = 1000;
    std::size_t series = 200;
    std::string file = "ar.csv";
    std::uint64_t seed = 0;
};

void add_synth_ar(CLI::App& app, SynthArOptions& o) {
    auto* s = app.add_subcommand("synth-ar", "Generate AR(p) series as CSV");
    s->add_option("--phi", o.phi, "AR coefficients, comma-separated");
    s->add_option("--noise-var", o.noise_var, "Innovation variance");
    s->add_option("--noise-std", o.noise_std, "Innovation standard deviation (overrides --noise-var)");
    s->add_option("--t", o.t, "Steps per series");
    s->add_option("--series", o.series, "Number of series");
    s->add_option("--file", o.file, "Output file name inside the output directory");
    s->add_option("--seed", o.seed, "Random seed");
}

int cmd_synth_ar(Run& run, const SynthArOptions& o) {
    if (!(o.noise_var >= 0.0)) throw std::invalid_argument("--noise-var must be >= 0");
    const double sd = o.noise_std ? *o.noise_std : std::sqrt(o.noise_var);
    if (!(sd >= 0.0)) throw std::invalid_argument("--noise-std must be >= 0");
    if (o.t < 1 || o.series < 1) throw std::invalid_argument("--t and --series must be >= 1");
    const auto phi = parse_doubles(o.phi, "--phi");
    Stream rng(o.seed, "ar");
    const auto batch = ar_generate(phi, sd, o.t, o.series, rng);
    write_series_csv(run.artifact("series", o.file).string(), batch);
    run.write_manifest(o.seed);
    run.out << "wrote " << o.series << " series of length " << o.t << '\n';
    return exit_ok;
}

// ---- train-ts --------------------------------------------------------------

struct TrainTsOptions {
    std::string data;
    CsvLayout layout{',', "", {}, Grouping::Columns, "", true};
    std::string value_columns;
    std::string grouping = "columns";
    std::string delimiter = ",";
    std::size_t hidden = 10;
    std::size_t layers = 2;
    std::string rnn_activation = "relu";
    std::string gen_hidden = "16,16";
    std::string gen_activation = "relu";
    std::size_t window = 50;
    std::size_t batch = 20;
    int k = 10;
    double alpha = 15.0;
    double nu = 0.5;
    int norm = 2;
    std::size_t epochs = 100;
    double lr = 1e-3;
    double clip = 10.0;
    std::uint64_t seed = 0;
};

void add_train_ts(CLI::App& app, TrainTsOptions& o) {
    auto* s = app.add_subcommand("train-ts", "Train the recurrent generator on series from a CSV");
    s->add_option("--data", o.data, "Input CSV")->required();
    add_layout_options(s, o.layout, o.value_columns, o.grouping, o.delimiter);
    s->add_option("--hidden", o.hidden, "RNN hidden width");
    s->add_option("--layers", o.layers, "RNN layers");
    s->add_option("--rnn-activation", o.rnn_activation, "RNN activation");
    s->add_option("--gen-hidden", o.gen_hidden, "Generator hidden widths, comma-separated");
    s->add_option("--gen-activation", o.gen_activation, "Generator hidden activation");
    s->add_option("--window", o.window, "Training window W");
    s->add_option("--batch", o.batch, "Series per iteration M");
    s->add_option("--k", o.k, "K");
    s->add_option("--alpha", o.alpha, "Sigmoid slope");
    s->add_option("--nu", o.nu, "Soft-bin kernel width");
    s->add_option("--norm", o.norm, "Loss norm order (1 or 2)");
    s->add_option("--epochs", o.epochs, "Epochs");
    s->add_option("--lr", o.lr, "Adam learning rate");
    s->add_option("--clip", o.clip, "Gradient global-norm clip");
    s->add_option("--seed", o.seed, "Random seed");
}

int cmd_train_ts(Run& run, TrainTsOptions& o) {
    require_file(o.data, "data file");
    finish_layout(o.layout, o.value_columns, o.grouping, o.delimiter);
    const auto ingested = ingest_csv(o.data, o.layout);
    const auto& data = ingested.batch;
    const auto model = TemporalModel::make(data.dim(), o.hidden, o.layers, parse_activation(o.rnn_activation),
                                           parse_sizes(o.gen_hidden, "--gen-hidden"),
                                           parse_activation(o.gen_activation));
    TemporalTrainConfig cfg;
    cfg.window = o.window;
    cfg.batch = o.batch;
    cfg.isl.k = o.k;
    cfg.isl.alpha = o.alpha;
    cfg.isl.nu = o.nu;
    cfg.isl.norm_order = o.norm;
    cfg.epochs = o.epochs;
    cfg.learning_rate = o.lr;
    cfg.clip_norm = o.clip;
    cfg.seed = o.seed;
    cfg.validate(data);

    Stream init_rng(o.seed, "init");
    const auto result = train_temporal(model, model.init(init_rng), data, cfg);

    json scaling = json::object();
    for (std::size_t i = 0; i < ingested.scaling.size(); ++i) {
        scaling[data.series[i].id] = scaling_json(ingested.scaling[i]);
    }
    json meta = {{"layout", layout_json(o.layout, o.grouping)},
                 {"scaling", scaling},
                 {"series", data.series.size()},
                 {"dropped_rows", ingested.dropped_rows}};
    io::save_checkpoint(run.artifact("checkpoint", "checkpoint.json").string(),
                        io::make_checkpoint(model, result.theta, meta));
    io::write_run_log(run.artifact("run_log", "runlog.jsonl").string(), result.log);
    run.write_manifest(o.seed);
    const auto& last = result.log.records.back();
    run.out << "series " << data.series.size() << " dropped rows " << ingested.dropped_rows << " final loss "
            << io::format_double(last.surrogate_loss) << " theoretical " << io::format_double(last.theoretical_loss)
            << '\n';
    return exit_ok;
}

// ---- forecast --------------------------------------------------------------

struct ForecastOptions {
    std::string checkpoint;
    std::string data;
    std::string series;
    std::size_t start = 0;
    std::size_t history = 20;
    std::size_t horizon = 10;
    std::size_t trajectories = 200;
    std::string rho = "0.1,0.5,0.9";
    std::uint64_t seed = 0;
};

void add_forecast(CLI::App& app, ForecastOptions& o) {
    auto* s = app.add_subcommand("forecast", "Sample forecast trajectories from a trained checkpoint");
    s->add_option("--checkpoint", o.checkpoint, "Temporal checkpoint")->required();
    s->add_option("--data", o.data, "CSV holding the history (read with the checkpoint's layout)")->required();
    s->add_option("--series", o.series, "Series id (default: first)");
    s->add_option("--start", o.start, "First history step");
    s->add_option("--history", o.history, "Conditioning length tau0");
    s->add_option("--horizon", o.horizon, "Forecast horizon");
    s->add_option("--trajectories", o.trajectories, "Sampled trajectories S");
    s->add_option("--rho", o.rho, "Quantile levels, comma-separated");
    s->add_option("--seed", o.seed, "Random seed");
}

int cmd_forecast(Run& run, const ForecastOptions& o) {
    require_file(o.checkpoint, "checkpoint");
    require_file(o.data, "data file");
    const auto ckpt = io::load_checkpoint(o.checkpoint);
    const auto model = io::temporal_from_checkpoint(ckpt);
    auto layout = layout_from_json(ckpt.meta.at("layout"));
    const bool standardize = layout.standardize;
    layout.standardize = false;
    const auto ingested = ingest_csv(o.data, layout);
    const Series& raw = find_series(ingested.batch, o.series);
    if (o.history < 1) throw std::invalid_argument("--history must be >= 1");
    if (o.start + o.history > raw.length) throw std::invalid_argument("history runs past the end of the series");

    Series hist{raw.id, o.history, raw.dim,
                std::vector<double>(raw.values.begin() + static_cast<std::ptrdiff_t>(o.start * raw.dim),
                                    raw.values.begin() + static_cast<std::ptrdiff_t>((o.start + o.history) * raw.dim))};
    std::optional<Scaling> scaling;
    if (standardize) {
        const auto& known = ckpt.meta.at("scaling");
        if (known.contains(raw.id)) {
            scaling = scaling_from_json(known.at(raw.id));
            apply_scaling(hist, *scaling);
        } else {
            scaling = isl::standardize(hist);
        }
    }
    ForecastConfig fc;
    fc.horizon = o.horizon;
    fc.trajectories = o.trajectories;
    fc.rho = parse_doubles(o.rho, "--rho");
    if (std::find(fc.rho.begin(), fc.rho.end(), 0.5) == fc.rho.end()) fc.rho.push_back(0.5);
    auto f = forecast(model, ckpt.theta.values, hist, fc, Stream(o.seed, "forecast"));
    if (scaling) {
        invert_scaling(f.trajectories, *scaling);
        for (auto& q : f.quantiles) invert_scaling(q, *scaling);
    }

    json fj = io::to_json(f);
    fj["series_id"] = raw.id;
    fj["start"] = o.start;
    fj["layout"] = ckpt.meta.at("layout");
    fj["scale"] = "raw";
    if (scaling) fj["scaling"] = scaling_json(*scaling);
    fj["manifest"] = "manifest.json";
    io::write_json(run.artifact("forecast", "forecast.json").string(), fj);
    io::write_trajectories_csv(run.artifact("trajectories", "trajectories.csv").string(), f);
    run.write_manifest(o.seed);
    run.out << "forecast " << f.n_trajectories << " trajectories x " << f.horizon << " steps for series " << raw.id
            << '\n';
    return exit_ok;
}

// ---- eval ------------------------------------------------------------------

struct EvalOptions {
    std::string checkpoint;
    std::string target;
    std::string noise;
    std::string forecast;
    std::string data;
    std::size_t n_mc = 100000;
    std::string policy = "best";
    std::uint64_t seed = 0;
};

void add_eval(CLI::App& app, EvalOptions& o) {
    auto* s = app.add_subcommand("eval", "Metrics for a 1D checkpoint or a stored forecast");
    s->add_option("--checkpoint", o.checkpoint, "1D generator checkpoint");
    s->add_option("--target", o.target, "Target distribution (default: the checkpoint's)");
    s->add_option("--noise", o.noise, "Latent noise (default: the checkpoint's)");
    s->add_option("--forecast", o.forecast, "forecast.json from the forecast command");
    s->add_option("--data", o.data, "CSV holding the actual values for --forecast");
    s->add_option("--n-mc", o.n_mc, "Monte Carlo draws");
    s->add_option("--policy", o.policy, "Transform policy: increasing | decreasing | best");
    s->add_option("--seed", o.seed, "Random seed");
}

int cmd_eval(Run& run, const EvalOptions& o) {
    if (o.checkpoint.empty() == o.forecast.empty()) {
        throw std::invalid_argument("eval needs exactly one of --checkpoint and --forecast");
    }
    json metrics;
    if (!o.checkpoint.empty()) {
        require_file(o.checkpoint, "checkpoint");
        const auto ckpt = io::load_checkpoint(o.checkpoint);
        const auto gen = io::mlp_from_checkpoint(ckpt);
        const auto target = Distribution::parse(o.target.empty() ? ckpt.meta.value("target", "") : o.target);
        const auto noise = NoiseSource::parse(o.noise.empty() ? ckpt.meta.value("noise", "normal") : o.noise);
        MetricConfig mcfg{o.n_mc, o.seed, parse_transform_policy(o.policy)};
        mcfg.validate();
        Stream rng(o.seed, "eval");
        const auto samples = evaluate_generator(ckpt.theta.values, gen, noise, o.n_mc, rng);
        const double k = ksd(samples, target);
        const auto mm = mae_mse_transform(ckpt.theta.values, gen, noise, target, mcfg);
        metrics = {{"target", target.to_string()},
                   {"ksd", k},
                   {"mae", mm.mae},
                   {"mse", mm.mse},
                   {"transform", mm.reflected ? "decreasing" : "increasing"},
                   {"n_monte_carlo", o.n_mc},
                   {"seed", o.seed}};
        run.out << markdown_header() << '\n' << markdown_row(target.to_string(), k, mm) << '\n';
    } else {
        require_file(o.forecast, "forecast");
        require_file(o.data, "data file");
        const auto fj = io::read_json(o.forecast);
        ForecastResult f;
        f.horizon = fj.at("horizon").get<std::size_t>();
        f.dim = fj.at("dim").get<std::size_t>();
        f.history_length = fj.at("history_length").get<std::size_t>();
        f.n_trajectories = fj.at("trajectories").get<std::size_t>();
        f.rho = fj.at("rho").get<std::vector<double>>();
        for (double r : f.rho) f.quantiles.push_back(fj.at("quantiles").at(io::format_double(r)).get<std::vector<double>>());
        auto layout = layout_from_json(fj.at("layout"));
        layout.standardize = false;
        const auto ingested = ingest_csv(o.data, layout);
        const Series& s = find_series(ingested.batch, fj.at("series_id").get<std::string>());
        const std::size_t first = fj.at("start").get<std::size_t>() + f.history_length;
        if (first + f.horizon > s.length) throw std::invalid_argument("data does not cover the forecast horizon");
        std::vector<double> actual(s.values.begin() + static_cast<std::ptrdiff_t>(first * s.dim),
                                   s.values.begin() + static_cast<std::ptrdiff_t>((first + f.horizon) * s.dim));
        std::vector<double> levels;
        for (double r : f.rho) {
            if (r != 0.5) levels.push_back(r);
        }
        const auto m = forecast_metrics(f, actual, levels);
        auto summary = [](const ForecastMetrics& fm) {
            json ql = json::object();
            for (std::size_t i = 0; i < fm.rho.size(); ++i) ql[io::format_double(fm.rho[i])] = fm.ql[i];
            return json{{"nd", fm.nd}, {"rmse", fm.rmse}, {"ql", ql}};
        };
        metrics = {{"series_id", s.id}};
        metrics.update(summary(m));
        metrics["ql_definition"] = "2 * sum(rho-risk) / sum|y|";
        metrics["scale"] = "raw";
        if (fj.contains("scaling")) {
            // The same comparison on the scale the model was trained on.
            const auto sc = scaling_from_json(fj.at("scaling"));
            Series a{s.id, f.horizon, f.dim, actual};
            apply_scaling(a, sc);
            for (auto& q : f.quantiles) {
                Series qs{s.id, f.horizon, f.dim, q};
                apply_scaling(qs, sc);
                q = qs.values;
            }
            metrics["standardized"] = summary(forecast_metrics(f, a.values, levels));
        }
        run.out << "nd " << io::format_double(m.nd) << " rmse " << io::format_double(m.rmse) << '\n';
    }
    metrics["manifest"] = "manifest.json";
    io::write_json(run.artifact("metrics", "metrics.json").string(), metrics);
    run.write_manifest(o.seed);
    return exit_ok;
}

// ---- verify ----------------------------------------------------------------

struct VerifyOptions {
    std::string suite = "all";
    int k = 0;
    std::size_t trials = 100000;
    std::size_t mc_draws = 1000000;
    double significance = 0.01;
    double tolerance = 0.002;
    std::uint64_t seed = 0;
};

void add_verify(CLI::App& app, VerifyOptions& o) {
    auto* s = app.add_subcommand("verify", "Run the rank-statistic property suite");
    s->add_option("--suite", o.suite, "theorem1 | oracle | theorem2 | all");
    s->add_option("--k", o.k, "K for theorem1 (0 = 2, 5 and 10)");
    s->add_option("--trials", o.trials, "Rank draws per theorem1 case");
    s->add_option("--mc-draws", o.mc_draws, "Monte Carlo draws per oracle case");
    s->add_option("--significance", o.significance, "Chi-square significance for theorem1");
    s->add_option("--tolerance", o.tolerance, "Per-bin tolerance for the oracle suite");
    s->add_option("--seed", o.seed, "Random seed");
}

int cmd_verify(Run& run, const VerifyOptions& o) {
    const bool all = o.suite == "all";
    if (!all && o.suite != "theorem1" && o.suite != "oracle" && o.suite != "theorem2") {
        throw std::invalid_argument("unknown suite '" + o.suite + "'");
    }
    if (o.k < 0) throw std::invalid_argument("--k must be >= 0");
    if (o.trials < 1 || o.mc_draws < 1) throw std::invalid_argument("--trials and --mc-draws must be >= 1");
    std::vector<CheckResult> checks;
    auto append = [&](std::vector<CheckResult> more) { checks.insert(checks.end(), more.begin(), more.end()); };
    if (all || o.suite == "theorem1") {
        append(verify_calibration(o.k == 0 ? std::vector<int>{2, 5, 10} : std::vector<int>{o.k}, o.trials,
                                  o.significance, o.seed));
    }
    if (all || o.suite == "oracle") append(verify_oracle(o.mc_draws, o.tolerance, o.seed));
    if (all || o.suite == "theorem2") append(verify_bound(1e-6));

    json report = json::array();
    bool ok = true;
    for (const auto& c : checks) {
        run.out << format_check(c) << '\n';
        ok = ok && c.pass;
        report.push_back({{"suite", c.suite},
                          {"name", c.name},
                          {"pass", c.pass},
                          {"value", c.value},
                          {"threshold", c.threshold},
                          {"detail", c.detail}});
    }
    io::write_json(run.artifact("report", "verify.json").string(),
                   {{"pass", ok}, {"checks", report}, {"manifest", "manifest.json"}});
    run.write_manifest(o.seed);
    if (!ok) throw PropertyFailure("property suite failed");
    return exit_ok;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Invariant statistical loss: training, forecasting and diagnostics", "isl"};
    app.option_defaults()->always_capture_default()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    app.require_subcommand(1);
    app.set_version_flag("--version", ISL_VERSION);

    std::string config;
    const char* env_out = std::getenv(output_dir_env);
    std::string out_dir = env_out && *env_out ? env_out : "isl-out";
    Train1dOptions t1;
    SynthArOptions ar;
    TrainTsOptions ts;
    ForecastOptions fo;
    EvalOptions ev;
    VerifyOptions ve;
    add_train1d(app, t1);
    add_synth_ar(app, ar);
    add_train_ts(app, ts);
    add_forecast(app, fo);
    add_eval(app, ev);
    add_verify(app, ve);
    for (auto* sub : app.get_subcommands({})) {
        sub->add_option("--config", config, "Config file: key = value lines or a JSON object");
        sub->add_option("--out", out_dir, std::string("Output directory (default $") + output_dir_env + ")");
    }

    // Config file values go in front of the command-line flags so that flags
    // win (last value is taken).
    std::vector<std::string> full = args;
    try {
        for (std::size_t i = 0; i + 1 < full.size(); ++i) {
            if (full[i] == "--config" || full[i].rfind("--config=", 0) == 0) {
                const std::string path = full[i] == "--config" ? full[i + 1] : full[i].substr(9);
                const auto extra = config_args(path);
                const auto sub_pos = std::find_if(full.begin(), full.end(), [&](const std::string& a) {
                    return app.get_subcommand_no_throw(a) != nullptr;
                });
                if (sub_pos != full.end()) full.insert(sub_pos + 1, extra.begin(), extra.end());
                break;
            }
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_usage;
    }

    try {
        std::vector<std::string> reversed(full.rbegin(), full.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_usage;
    }

    CLI::App* sub = app.get_subcommands().front();
    Run run{sub->get_name(), args, out_dir, out, err, sub, utc_now()};
    try {
        fs::create_directories(run.out_dir);
        if (sub->get_name() == "train1d") return cmd_train1d(run, t1);
        if (sub->get_name() == "synth-ar") return cmd_synth_ar(run, ar);
        if (sub->get_name() == "train-ts") return cmd_train_ts(run, ts);
        if (sub->get_name() == "forecast") return cmd_forecast(run, fo);
        if (sub->get_name() == "eval") return cmd_eval(run, ev);
        return cmd_verify(run, ve);
    } catch (const PropertyFailure& e) {
        err << "property failure: " << e.what() << '\n';
        return exit_property;
    } catch (const DivergenceError& e) {
        err << "diverged: " << e.what() << '\n';
        return exit_divergence;
    } catch (const NumericError& e) {
        err << "numeric failure in " << e.op() << ": " << e.what() << '\n';
        return exit_divergence;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_usage;
    }
}

}  // namespace isl::cli
