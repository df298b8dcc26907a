// bmlab: run, list and validate experiments.
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "bmdrift/config.hpp"
#include "bmdrift/errors.hpp"
#include "bmdrift/experiments.hpp"

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;

struct Overrides {
    std::string config_path;
    std::string experiment;
    std::string seed;
    std::string replicas;
    std::string threads;
    std::string output;
    std::string csv;
    std::vector<std::string> sets;

    void attach(CLI::App* app) {
        app->add_option("config", config_path, "config file (key = value, [experiment] section)");
        app->add_option("-e,--experiment", experiment, "experiment name");
        app->add_option("--seed", seed, "64-bit seed");
        app->add_option("--replicas", replicas, "replica count");
        app->add_option("--threads", threads, "worker threads");
        app->add_option("-o,--output", output, "JSON record path");
        app->add_option("--csv", csv, "CSV table path");
        app->add_option("-s,--set", sets, "parameter override key=value")->take_all();
    }

    bmdrift::ExperimentConfig resolve() const {
        bmdrift::ExperimentConfig cfg =
            config_path.empty() ? bmdrift::ExperimentConfig{} : bmdrift::load_config_file(config_path);
        if (!experiment.empty()) bmdrift::apply_override(cfg, "experiment=" + experiment);
        if (!seed.empty()) bmdrift::apply_override(cfg, "seed=" + seed);
        if (!replicas.empty()) bmdrift::apply_override(cfg, "replicas=" + replicas);
        if (!threads.empty()) bmdrift::apply_override(cfg, "threads=" + threads);
        if (!output.empty()) bmdrift::apply_override(cfg, "output=" + output);
        if (!csv.empty()) bmdrift::apply_override(cfg, "csv=" + csv);
        for (const auto& s : sets) bmdrift::apply_override(cfg, s);
        if (cfg.experiment.empty()) throw bmdrift::ValidationError("bmlab: no experiment given");
        return cfg;
    }
};

std::string default_output(const bmdrift::ExperimentConfig& cfg) {
    if (!cfg.output.empty()) return cfg.output;
    if (const char* dir = std::getenv("BMLAB_OUTPUT_DIR"); dir && *dir) {
        std::filesystem::create_directories(dir);
        return (std::filesystem::path(dir) / (cfg.experiment + "-" + std::to_string(cfg.seed) + ".json")).string();
    }
    return "";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"bmlab: experiments on Brownian motion with variable drift"};
    app.require_subcommand(1);

    auto* list = app.add_subcommand("list", "list experiments with schemas and anchors");
    bool list_json = false;
    list->add_flag("--json", list_json, "full catalog as JSON");

    Overrides run_o, val_o;
    auto* run = app.add_subcommand("run", "run an experiment and write its JSON record");
    run_o.attach(run);
    auto* validate = app.add_subcommand("validate", "resolve and check a config without running");
    val_o.attach(validate);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitValidation;
    }

    try {
        if (list->parsed()) {
            if (list_json) {
                std::cout << bmdrift::catalog().dump(2) << "\n";
            } else {
                for (const auto& e : bmdrift::experiment_registry())
                    std::cout << e.info.name << "\n    " << e.info.summary << "\n    anchor: " << e.info.anchor << "\n";
            }
            return 0;
        }
        if (validate->parsed()) {
            const auto cfg = val_o.resolve();
            const auto& exp = bmdrift::find_experiment(cfg.experiment);
            const auto params = bmdrift::resolve_parameters(exp.info, cfg.parameters());
            const auto echo = bmdrift::config_echo(cfg, params);
            const auto errs = bmdrift::validate_against_schema(bmdrift::experiment_schema(exp.info), echo);
            for (const auto& e : errs) std::cerr << "bmlab: schema: " << e << "\n";
            if (!errs.empty()) return kExitValidation;
            std::cout << echo.dump(2) << "\n";
            return 0;
        }
        const auto cfg = run_o.resolve();
        const auto outcome = bmdrift::run_experiment(cfg);
        const std::string path = default_output(cfg);
        if (path.empty()) {
            std::cout << outcome.record.dump(2) << "\n";
        } else {
            std::ofstream out(path);
            if (!out) throw bmdrift::ValidationError("bmlab: cannot write " + path);
            out << outcome.record.dump(2) << "\n";
            std::cerr << "bmlab: wrote " << path << "\n";
        }
        if (!cfg.csv.empty()) {
            if (outcome.table.header.empty()) std::cerr << "bmlab: experiment has no table; csv not written\n";
            else bmdrift::write_table_csv(outcome.table, cfg.csv);
        }
        return 0;
    } catch (const bmdrift::ValidationError& e) {
        std::cerr << e.what() << "\n";
        return kExitValidation;
    } catch (const bmdrift::NumericalError& e) {
        std::cerr << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "bmlab: " << e.what() << "\n";
        return 1;
    }
}
