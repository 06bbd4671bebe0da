#include "isl/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace isl::io {

namespace {

constexpr const char* checkpoint_format = "isl-checkpoint";

[[noreturn]] void bad(const std::string& what) { throw std::runtime_error(what); }

}  // namespace

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

json to_json(const RankHistogram& h) { return {{"k", h.k()}, {"counts", h.counts}}; }

json to_json(const SoftHistogram& h) { return {{"k", h.k()}, {"q", h.q}}; }

RankHistogram rank_histogram_from_json(const json& j) {
    RankHistogram h;
    h.counts = j.at("counts").get<std::vector<std::size_t>>();
    if (static_cast<int>(h.counts.size()) != j.at("k").get<int>() + 1) bad("histogram has K+1 != len(counts)");
    for (auto c : h.counts) h.total += c;
    return h;
}

SoftHistogram soft_histogram_from_json(const json& j) {
    SoftHistogram h{j.at("q").get<std::vector<double>>()};
    if (static_cast<int>(h.q.size()) != j.at("k").get<int>() + 1) bad("soft histogram has K+1 != len(q)");
    return h;
}

json to_json(const MlpSpec& s) {
    json acts = json::array();
    for (auto a : s.activations) acts.push_back(to_string(a));
    return {{"widths", s.widths}, {"activations", acts}, {"dropout", s.dropout}};
}

MlpSpec mlp_spec_from_json(const json& j) {
    MlpSpec s;
    s.widths = j.at("widths").get<std::vector<std::size_t>>();
    for (const auto& a : j.at("activations")) s.activations.push_back(parse_activation(a.get<std::string>()));
    if (j.contains("dropout")) s.dropout = j.at("dropout").get<std::vector<double>>();
    s.validate();
    return s;
}

json to_json(const RnnSpec& s) {
    return {{"input_width", s.input_width},
            {"hidden_width", s.hidden_width},
            {"num_layers", s.num_layers},
            {"activation", to_string(s.activation)}};
}

RnnSpec rnn_spec_from_json(const json& j) {
    RnnSpec s;
    s.input_width = j.at("input_width").get<std::size_t>();
    s.hidden_width = j.at("hidden_width").get<std::size_t>();
    s.num_layers = j.at("num_layers").get<std::size_t>();
    s.activation = parse_activation(j.at("activation").get<std::string>());
    s.validate();
    return s;
}

json to_json(const ParamLayout& l) {
    json out = json::array();
    for (const auto& s : l.slots()) {
        out.push_back({{"name", s.name}, {"rows", s.rows}, {"cols", s.cols}, {"offset", s.offset}});
    }
    return out;
}

json to_json(const EpochRecord& r) {
    return {{"epoch", r.epoch},
            {"k", r.current_k},
            {"surrogate_loss", r.surrogate_loss},
            {"theoretical_loss", r.theoretical_loss},
            {"chi_square", r.chi_square_statistic},
            {"accepted", r.accepted},
            {"clipped", r.clipped}};
}

json to_json(const KTransition& t) {
    return {{"iteration", t.iteration}, {"epoch", t.epoch}, {"from_k", t.from_k}, {"to_k", t.to_k}};
}

Checkpoint make_checkpoint(const Mlp& model, const ParamVector& theta, json meta) {
    return {"mlp", to_json(model.spec()), theta, std::move(meta)};
}

Checkpoint make_checkpoint(const TemporalModel& model, const ParamVector& theta, json meta) {
    return {"temporal",
            {{"rnn", to_json(model.rnn().spec())}, {"generator", to_json(model.generator().spec())}},
            theta,
            std::move(meta)};
}

Mlp mlp_from_checkpoint(const Checkpoint& c) {
    if (c.kind != "mlp") bad("checkpoint holds a '" + c.kind + "' model, expected 'mlp'");
    return Mlp(mlp_spec_from_json(c.spec));
}

TemporalModel temporal_from_checkpoint(const Checkpoint& c) {
    if (c.kind != "temporal") bad("checkpoint holds a '" + c.kind + "' model, expected 'temporal'");
    return TemporalModel(rnn_spec_from_json(c.spec.at("rnn")), mlp_spec_from_json(c.spec.at("generator")));
}

void save_checkpoint(const std::string& path, const Checkpoint& c) {
    json j = {{"format", checkpoint_format},
              {"version", checkpoint_version},
              {"kind", c.kind},
              {"spec", c.spec},
              {"layout", to_json(c.theta.layout)},
              {"theta", c.theta.values},
              {"meta", c.meta}};
    write_json(path, j);
}

Checkpoint load_checkpoint(const std::string& path) {
    json j;
    try {
        j = read_json(path);
    } catch (const json::exception& e) {
        bad("checkpoint '" + path + "' is not valid JSON: " + e.what());
    }
    try {
        if (j.value("format", "") != checkpoint_format) bad("'" + path + "' is not a checkpoint");
        const int version = j.at("version").get<int>();
        if (version != checkpoint_version) {
            bad("checkpoint version " + std::to_string(version) + " is not supported");
        }
        Checkpoint c;
        c.kind = j.at("kind").get<std::string>();
        c.spec = j.at("spec");
        c.meta = j.value("meta", json::object());
        ParamLayout layout;
        if (c.kind == "mlp") {
            layout = mlp_from_checkpoint(c).layout();
        } else if (c.kind == "temporal") {
            layout = temporal_from_checkpoint(c).layout();
        } else {
            bad("unknown model kind '" + c.kind + "'");
        }
        if (j.at("layout") != to_json(layout)) bad("checkpoint layout does not match its spec");
        c.theta.layout = layout;
        for (const auto& v : j.at("theta")) {
            if (!v.is_number()) bad("checkpoint parameters must be numbers");
            c.theta.values.push_back(v.get<double>());
        }
        if (c.theta.values.size() != layout.size()) {
            bad("checkpoint has " + std::to_string(c.theta.values.size()) + " parameters, layout needs " +
                std::to_string(layout.size()));
        }
        if (!c.theta.all_finite()) bad("checkpoint parameters are not finite");
        return c;
    } catch (const json::exception& e) {
        bad("malformed checkpoint '" + path + "': " + e.what());
    } catch (const std::invalid_argument& e) {
        bad("malformed checkpoint '" + path + "': " + e.what());
    }
}

json to_json(const ForecastResult& f) {
    json q = json::object();
    for (std::size_t i = 0; i < f.rho.size(); ++i) q[format_double(f.rho[i])] = f.quantiles[i];
    return {{"horizon", f.horizon},
            {"dim", f.dim},
            {"history_length", f.history_length},
            {"trajectories", f.n_trajectories},
            {"rho", f.rho},
            {"quantiles", q}};
}

void write_json(const std::string& path, const json& j) {
    std::ofstream os(path);
    if (!os) bad("cannot write '" + path + "'");
    os << j.dump(2) << '\n';
    if (!os) bad("failed writing '" + path + "'");
}

json read_json(const std::string& path) {
    std::ifstream is(path);
    if (!is) bad("cannot open '" + path + "'");
    return json::parse(is);
}

void write_run_log(const std::string& path, const RunLog& log) {
    std::ofstream os(path);
    if (!os) bad("cannot write '" + path + "'");
    for (const auto& r : log.records) {
        json j = to_json(r);
        j["type"] = "epoch";
        os << j.dump() << '\n';
    }
    for (const auto& t : log.transitions) {
        json j = to_json(t);
        j["type"] = "k_transition";
        os << j.dump() << '\n';
    }
}

void write_trajectories_csv(const std::string& path, const ForecastResult& f) {
    std::ofstream os(path);
    if (!os) bad("cannot write '" + path + "'");
    os << "s,t,c,value\n";
    for (std::size_t s = 0; s < f.n_trajectories; ++s) {
        for (std::size_t t = 0; t < f.horizon; ++t) {
            for (std::size_t c = 0; c < f.dim; ++c) {
                os << s << ',' << t << ',' << c << ',' << format_double(f.trajectory(s, t, c)) << '\n';
            }
        }
    }
}

void write_columns_csv(const std::string& path, const std::vector<std::string>& names,
                       const std::vector<std::vector<double>>& columns) {
    if (names.size() != columns.size() || columns.empty()) throw ShapeError("one name per column");
    for (const auto& c : columns) {
        if (c.size() != columns.front().size()) throw ShapeError("columns differ in length");
    }
    std::ofstream os(path);
    if (!os) bad("cannot write '" + path + "'");
    for (std::size_t i = 0; i < names.size(); ++i) os << (i ? "," : "") << names[i];
    os << '\n';
    for (std::size_t r = 0; r < columns.front().size(); ++r) {
        for (std::size_t i = 0; i < columns.size(); ++i) os << (i ? "," : "") << format_double(columns[i][r]);
        os << '\n';
    }
}

}  // namespace isl::io
