#include "bmdrift/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "bmdrift/errors.hpp"

namespace bmdrift {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

bool valid_name(const std::string& k) {
    return !k.empty() && std::all_of(k.begin(), k.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' || c == '-';
    });
}

const std::map<std::string, std::string> kEmpty;

void set_top(ExperimentConfig& cfg, const std::string& key, const std::string& value, const std::string& where) {
    auto fail = [&](const std::string& what) { throw ValidationError("config: " + where + ": " + what); };
    if (key == "experiment") {
        if (!valid_name(value)) fail("experiment name '" + value + "' is malformed");
        cfg.experiment = value;
    } else if (key == "seed") {
        std::uint64_t v = 0;
        const auto r = std::from_chars(value.data(), value.data() + value.size(), v);
        if (r.ec != std::errc() || r.ptr != value.data() + value.size()) fail("seed must be an unsigned 64-bit integer");
        cfg.seed = v;
    } else if (key == "replicas") {
        long long v = 0;
        const auto r = std::from_chars(value.data(), value.data() + value.size(), v);
        if (r.ec != std::errc() || r.ptr != value.data() + value.size()) fail("replicas must be an integer");
        if (v < 1 || v > 1'000'000) fail("replicas must lie in [1, 1000000]");
        cfg.replicas = v;
    } else if (key == "threads") {
        int v = 0;
        const auto r = std::from_chars(value.data(), value.data() + value.size(), v);
        if (r.ec != std::errc() || r.ptr != value.data() + value.size() || v < 1 || v > 256)
            fail("threads must be an integer in [1, 256]");
        cfg.threads = v;
    } else if (key == "output") {
        cfg.output = value;
    } else if (key == "csv") {
        cfg.csv = value;
    } else {
        fail("unknown key '" + key + "'");
    }
}

}  // namespace

const std::map<std::string, std::string>& ExperimentConfig::parameters() const {
    const auto it = sections.find(experiment);
    return it == sections.end() ? kEmpty : it->second;
}

std::map<std::string, std::string>& ExperimentConfig::parameters() { return sections[experiment]; }

ExperimentConfig parse_config_text(const std::string& text, const std::string& origin) {
    ExperimentConfig cfg;
    std::istringstream in(text);
    std::string line, section;
    std::set<std::string> seen_top;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string where = origin + ":" + std::to_string(lineno);
        if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ValidationError("config: " + where + ": unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (!valid_name(section)) throw ValidationError("config: " + where + ": malformed section name");
            if (cfg.sections.count(section)) throw ValidationError("config: " + where + ": duplicate section [" + section + "]");
            cfg.sections[section];
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ValidationError("config: " + where + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (!valid_name(key)) throw ValidationError("config: " + where + ": malformed key '" + key + "'");
        if (section.empty()) {
            if (!seen_top.insert(key).second) throw ValidationError("config: " + where + ": duplicate key '" + key + "'");
            set_top(cfg, key, value, where);
        } else {
            auto& sec = cfg.sections[section];
            if (sec.count(key)) throw ValidationError("config: " + where + ": duplicate key '" + key + "'");
            sec[key] = value;
        }
    }
    return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("config: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), path);
}

void apply_override(ExperimentConfig& cfg, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw ValidationError("config: override '" + assignment + "' needs key=value");
    const std::string key = trim(assignment.substr(0, eq));
    const std::string value = trim(assignment.substr(eq + 1));
    if (!valid_name(key)) throw ValidationError("config: malformed override key '" + key + "'");
    static const std::set<std::string> top = {"experiment", "seed", "replicas", "threads", "output", "csv"};
    if (top.count(key)) {
        set_top(cfg, key, value, "override");
        return;
    }
    if (cfg.experiment.empty()) throw ValidationError("config: parameter override '" + key + "' before an experiment is chosen");
    cfg.parameters()[key] = value;
}

std::string to_config_text(const ExperimentConfig& cfg) {
    std::ostringstream out;
    out << "experiment = " << cfg.experiment << "\n";
    out << "seed = " << cfg.seed << "\n";
    out << "replicas = " << cfg.replicas << "\n";
    if (cfg.threads != 1) out << "threads = " << cfg.threads << "\n";
    if (!cfg.output.empty()) out << "output = " << cfg.output << "\n";
    if (!cfg.csv.empty()) out << "csv = " << cfg.csv << "\n";
    out << "\n[" << cfg.experiment << "]\n";
    for (const auto& [k, v] : cfg.parameters()) out << k << " = " << v << "\n";
    return out.str();
}

}  // namespace bmdrift
