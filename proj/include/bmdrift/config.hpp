#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace bmdrift {

// Flat key = value file. Top-level keys precede any section; parameters live
// in a [section] named after the experiment. '#' starts a comment.
struct ExperimentConfig {
    std::string experiment;
    std::uint64_t seed = 0;
    long long replicas = 1;
    int threads = 1;
    std::string output;  // JSON record path; empty means default
    std::string csv;     // optional table path
    std::map<std::string, std::map<std::string, std::string>> sections;

    // parameters of the selected experiment
    const std::map<std::string, std::string>& parameters() const;
    std::map<std::string, std::string>& parameters();
};

ExperimentConfig parse_config_text(const std::string& text, const std::string& origin = "config");
ExperimentConfig load_config_file(const std::string& path);

// "key=value": top-level keys (experiment, seed, ...) or a parameter of the
// selected experiment.
void apply_override(ExperimentConfig& cfg, const std::string& assignment);

// Serializes the selected experiment's section only.
std::string to_config_text(const ExperimentConfig& cfg);

}  // namespace bmdrift
