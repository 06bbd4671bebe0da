#pragma once

#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "isl/distributions.hpp"
#include "isl/isl.hpp"
#include "isl/nn.hpp"
#include "isl/timeseries.hpp"
#include "isl/trainer.hpp"

namespace isl::io {

using json = nlohmann::ordered_json;

inline constexpr int checkpoint_version = 1;

json to_json(const RankHistogram& h);   // {"k": K, "counts": [...]}
json to_json(const SoftHistogram& h);   // {"k": K, "q": [...]}
RankHistogram rank_histogram_from_json(const json& j);
SoftHistogram soft_histogram_from_json(const json& j);

json to_json(const MlpSpec& s);
MlpSpec mlp_spec_from_json(const json& j);
json to_json(const RnnSpec& s);
RnnSpec rnn_spec_from_json(const json& j);
json to_json(const ParamLayout& l);

json to_json(const EpochRecord& r);
json to_json(const KTransition& t);

// Flat parameters plus the spec that rebuilds the model.
struct Checkpoint {
    std::string kind;  // "mlp" or "temporal"
    json spec;         // mlp: MlpSpec; temporal: {"rnn": ..., "generator": ...}
    ParamVector theta;
    json meta;         // free-form (noise source, scaling, config)
};

Checkpoint make_checkpoint(const Mlp& model, const ParamVector& theta, json meta = json::object());
Checkpoint make_checkpoint(const TemporalModel& model, const ParamVector& theta, json meta = json::object());

void save_checkpoint(const std::string& path, const Checkpoint& c);
// Validates format, version, layout against the spec, size and finiteness.
// Throws std::runtime_error with the reason.
Checkpoint load_checkpoint(const std::string& path);

Mlp mlp_from_checkpoint(const Checkpoint& c);
TemporalModel temporal_from_checkpoint(const Checkpoint& c);

json to_json(const ForecastResult& f);

void write_json(const std::string& path, const json& j);
json read_json(const std::string& path);
// One record per line.
void write_run_log(const std::string& path, const RunLog& log);
// "s,t,c,value" rows.
void write_trajectories_csv(const std::string& path, const ForecastResult& f);
// Equal-length numeric columns under a header row.
void write_columns_csv(const std::string& path, const std::vector<std::string>& names,
                       const std::vector<std::vector<double>>& columns);

// Shortest round-trip text form of a double.
std::string format_double(double v);

}  // namespace isl::io
