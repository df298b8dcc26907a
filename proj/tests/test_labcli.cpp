#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include "doctest.h"

#include "bmdrift/config.hpp"
#include "bmdrift/errors.hpp"
#include "bmdrift/experiments.hpp"

using namespace bmdrift;

namespace {

json load_json(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in);
    return json::parse(in);
}

ExperimentConfig graph_config(std::uint64_t seed) {
    ExperimentConfig cfg = parse_config_text("experiment = boxcount-brownian-graph\nseed = " + std::to_string(seed) +
                                             "\n[boxcount-brownian-graph]\nd = 1\nlevels = 16\n");
    return cfg;
}

}  // namespace

TEST_SUITE("labcli") {

TEST_CASE("config grammar") {
    ExperimentConfig c = parse_config_text(
        "# comment\nexperiment = green-free   # trailing\nseed = 12\nreplicas = 3\nthreads = 2\n\n"
        "[green-free]\nd = 4\n[recurrence]\nn = 8\n");
    CHECK(c.experiment == "green-free");
    CHECK(c.seed == 12);
    CHECK(c.replicas == 3);
    CHECK(c.threads == 2);
    CHECK(c.parameters().at("d") == "4");
    CHECK(c.sections.at("recurrence").at("n") == "8");
    CHECK_THROWS_AS(parse_config_text("seed = 1\nseed = 2\n"), ValidationError);
    CHECK_THROWS_AS(parse_config_text("colour = red\n"), ValidationError);
    CHECK_THROWS_AS(parse_config_text("replicas = 0\n"), ValidationError);
    CHECK_THROWS_AS(parse_config_text("threads = 1000\n"), ValidationError);
    CHECK_THROWS_AS(parse_config_text("seed = -3\n"), ValidationError);
    CHECK_THROWS_AS(parse_config_text("[x]\na = 1\na = 2\n"), ValidationError);
    CHECK_THROWS_AS(parse_config_text("just words\n"), ValidationError);
    CHECK_THROWS_AS(load_config_file("/nonexistent/cfg.ini"), ValidationError);
}

TEST_CASE("overrides and text round trip") {
    ExperimentConfig c = parse_config_text("experiment = recurrence\n[recurrence]\nn = 4\n");
    apply_override(c, "n=16");
    apply_override(c, "seed=5");
    apply_override(c, "trials=100");
    CHECK(c.parameters().at("n") == "16");
    CHECK(c.seed == 5);
    CHECK_THROWS_AS(apply_override(c, "novalue"), ValidationError);
    ExperimentConfig back = parse_config_text(to_config_text(c));
    CHECK(back.experiment == c.experiment);
    CHECK(back.seed == c.seed);
    CHECK(back.parameters() == c.parameters());
}

TEST_CASE("registry covers the results with anchors") {
    const auto& reg = experiment_registry();
    CHECK(reg.size() >= 12);
    std::set<std::string> names;
    for (const auto& e : reg) {
        CAPTURE(e.info.name);
        CHECK(names.insert(e.info.name).second);
        CHECK_FALSE(e.info.anchor.empty());
        CHECK_FALSE(e.info.summary.empty());
        CHECK(&find_experiment(e.info.name) == &e);
    }
    for (const char* n : {"green-sandwich", "hit-probability", "capacity-sandwich", "intersection-equivalence",
                          "recurrence", "injectivity", "boxcount-brownian-image", "cuzick", "doublepoint-scaling",
                          "two-path-intersection", "rprime", "dyadic-sets"})
        CHECK(names.count(n) == 1);
    CHECK_THROWS_AS(find_experiment("no-such-thing"), ValidationError);
    CHECK(catalog().size() == reg.size());
}

TEST_CASE("example configs validate against their schema") {
    for (const auto& e : experiment_registry()) {
        CAPTURE(e.info.name);
        ExperimentConfig cfg = example_config(e.info);
        ParamMap p = resolve_parameters(e.info, cfg.parameters());
        const json echo = config_echo(cfg, p);
        CHECK(validate_against_schema(experiment_schema(e.info), echo).empty());
    }
}

TEST_CASE("schema validator flags bad documents") {
    const ExperimentInfo& info = find_experiment("recurrence").info;
    ExperimentConfig cfg = example_config(info);
    json echo = config_echo(cfg, resolve_parameters(info, cfg.parameters()));
    json bad = echo;
    bad["parameters"]["n"] = "sixteen";
    CHECK_FALSE(validate_against_schema(experiment_schema(info), bad).empty());
    bad = echo;
    bad["parameters"]["extra"] = 1;
    CHECK_FALSE(validate_against_schema(experiment_schema(info), bad).empty());
    bad = echo;
    bad.erase("seed");
    CHECK_FALSE(validate_against_schema(experiment_schema(info), bad).empty());
}

TEST_CASE("parameter resolution errors name the field") {
    const ExperimentInfo& info = find_experiment("boxcount-brownian-graph").info;
    try {
        resolve_parameters(info, {{"levls", "12"}});
        FAIL("unknown parameter accepted");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("levls") != std::string::npos);
    }
    try {
        resolve_parameters(info, {{"levels", "twelve"}});
        FAIL("bad integer accepted");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("levels") != std::string::npos);
    }
    CHECK_THROWS_AS(resolve_parameters(find_experiment("rprime").info, {{"alpha", "0.5"}}), ValidationError);
}

TEST_CASE("graph dimension run") {
    ExperimentConfig cfg = parse_config_text(
        "experiment = boxcount-brownian-graph\nseed = 7\n[boxcount-brownian-graph]\nd = 1\nlevels = 20\n");
    RunOutcome out = run_experiment(cfg);
    const double v = out.record["replicas"][0]["output"]["value"].get<double>();
    CHECK(v >= 1.4);
    CHECK(v <= 1.6);
    CHECK(out.record["artifact"] == "bmdrift");
    CHECK(out.record["experiment"] == "boxcount-brownian-graph");
}

TEST_CASE("replica outputs are reproducible and thread independent") {
    ExperimentConfig a = graph_config(3);
    a.replicas = 4;
    ExperimentConfig b = a;
    b.threads = 3;
    const json ra = run_experiment(a).record;
    const json rb = run_experiment(b).record;
    const json rc = run_experiment(a).record;
    CHECK(ra["replicas"].dump() == rb["replicas"].dump());
    CHECK(ra["replicas"].dump() == rc["replicas"].dump());
    CHECK(ra["summary"].dump() == rb["summary"].dump());
    CHECK(ra["replicas"][0].dump() != ra["replicas"][1].dump());
}

TEST_CASE("config echo reruns to the same outputs") {
    ExperimentConfig a = graph_config(11);
    a.replicas = 2;
    const json rec = run_experiment(a).record;
    ExperimentConfig again = config_from_echo(rec["config"]);
    CHECK(run_experiment(again).record["replicas"].dump() == rec["replicas"].dump());
}

TEST_CASE("record matches the published result schema") {
    ExperimentConfig a = graph_config(2);
    a.replicas = 2;
    const json rec = run_experiment(a).record;
    const json schema = load_json(std::string(BMDRIFT_SOURCE_DIR) + "/docs/result_schema.json");
    const auto errs = validate_against_schema(schema, rec);
    for (const auto& e : errs) CAPTURE(e);
    CHECK(errs.empty());
}

TEST_CASE("run_experiment preconditions") {
    ExperimentConfig a = graph_config(1);
    a.replicas = 0;
    CHECK_THROWS_AS(run_experiment(a), ValidationError);
    ExperimentConfig b;
    CHECK_THROWS_AS(run_experiment(b), ValidationError);
}

TEST_CASE("table CSV output") {
    ExperimentConfig a = graph_config(5);
    a.replicas = 2;
    RunOutcome out = run_experiment(a);
    REQUIRE_FALSE(out.table.header.empty());
    CHECK(out.table.header.front() == "replica");
    const auto path = (std::filesystem::temp_directory_path() / "bmdrift_table.csv").string();
    write_table_csv(out.table, path);
    std::ifstream in(path);
    std::string first;
    std::getline(in, first);
    CHECK(first.rfind("replica,", 0) == 0);
    std::filesystem::remove(path);
}

}  // TEST_SUITE
