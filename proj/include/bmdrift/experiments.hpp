#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "bmdrift/config.hpp"
#include "bmdrift/rng.hpp"

namespace bmdrift {

using json = nlohmann::ordered_json;

enum class ParamType { integer, real, boolean, text, real_list };

struct ParamSpec {
    std::string name;
    ParamType type;
    std::string default_value;
    std::string help;
    std::optional<double> min;  // inclusive, numeric types and list entries
    std::optional<double> max;
    std::vector<std::string> choices;  // text only
};

using ParamValue = std::variant<long long, double, bool, std::string, std::vector<double>>;

// Typed, validated parameters of one experiment.
class ParamMap {
public:
    void set(const std::string& name, ParamValue v) { values_[name] = std::move(v); }
    long long integer(const std::string& name) const;
    double real(const std::string& name) const;
    bool boolean(const std::string& name) const;
    const std::string& text(const std::string& name) const;
    const std::vector<double>& real_list(const std::string& name) const;
    json to_json() const;
    const std::map<std::string, ParamValue>& values() const { return values_; }

private:
    const ParamValue& get(const std::string& name) const;
    std::map<std::string, ParamValue> values_;
};

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

struct ReplicaOutput {
    json value;
    Table table;
};

struct ExperimentInfo {
    std::string name;
    std::string anchor;   // the result the experiment targets
    std::string summary;
    std::vector<ParamSpec> params;
    std::map<std::string, std::string> example;  // overrides for a quick run
};

struct Experiment {
    ExperimentInfo info;
    std::function<ReplicaOutput(const ParamMap&, RngStream&)> run;
};

const std::vector<Experiment>& experiment_registry();
const Experiment& find_experiment(const std::string& name);  // ValidationError if unknown

// Parses and range-checks every parameter; unknown names are rejected.
ParamMap resolve_parameters(const ExperimentInfo& info, const std::map<std::string, std::string>& raw);

// Config with the experiment's defaults and example overrides filled in.
ExperimentConfig example_config(const ExperimentInfo& info);

// JSON schema of the config echo {experiment, seed, replicas, parameters}.
json experiment_schema(const ExperimentInfo& info);
json config_echo(const ExperimentConfig& cfg, const ParamMap& params);
ExperimentConfig config_from_echo(const json& echo);

// Small validator for the schema subset emitted above; returns error messages.
std::vector<std::string> validate_against_schema(const json& schema, const json& doc);

json catalog();

inline constexpr const char* kArtifactName = "bmdrift";
const char* artifact_version();

struct RunOutcome {
    json record;
    Table table;  // all replicas, first column = replica
};

// Replica i draws from RngStream(seed, i). Aggregation runs in replica order.
RunOutcome run_experiment(const ExperimentConfig& cfg);

void write_table_csv(const Table& table, const std::string& path);

}  // namespace bmdrift
