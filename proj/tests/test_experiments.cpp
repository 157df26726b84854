#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "coalim/experiments.hpp"

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace coalim;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("coalim_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json small_backward() {
    return json::parse(R"({"model": {"theta": 4.0, "pim": [0.5, 0.5]}, "y0": [0.4, 0.6], "n": [50, 100],
                           "t": 0.5, "paths": 300, "seed": 12})");
}

int run_cli(const std::string& args, const fs::path& dir) {
    const std::string cmd = std::string(COALIM_CLI_PATH) + " " + args + " > " + (dir / "stdout.txt").string() + " 2> " +
                            (dir / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("environment name mapping") {
    CHECK(env_name_for("model.theta") == "COALIM_MODEL__THETA");
    CHECK(env_name_for("tolerances.p_min") == "COALIM_TOLERANCES__P_MIN");
    CHECK(key_path_for("COALIM_MODEL__THETA").value() == "model.theta");
    CHECK(key_path_for("COALIM_TOLERANCES__P_MIN").value() == "tolerances.p_min");
    CHECK_FALSE(key_path_for("HOME").has_value());
    for (const std::string key : {"seed", "model.pim", "enumeration.max_steps"}) CHECK(key_path_for(env_name_for(key)).value() == key);
}

TEST_CASE("environment overrides") {
    json config = small_backward();
    apply_env_overrides(config, {{"COALIM_MODEL__THETA", "2.5"},
                                 {"COALIM_SEED", "99"},
                                 {"COALIM_DIRECTION", "forward"},
                                 {"COALIM_OUTPUTS__CSV", "x.csv"},
                                 {"UNRELATED", "1"}});
    CHECK(config["model"]["theta"] == 2.5);
    CHECK(config["seed"] == 99);
    CHECK(config["direction"] == "forward");
    CHECK(config["outputs"]["csv"] == "x.csv");
    CHECK_FALSE(config.contains("unrelated"));
    CHECK_THROWS_AS(apply_env_overrides(config, {{"COALIM_SEED__X", "1"}}), ConfigError);
}

TEST_CASE("canonical config round trip") {
    const json config = json::parse(R"({"seed": 1, "model": {"pim": [0.5, 0.5], "theta": 4}, "n": [10]})");
    const auto text = canonical_config(config);
    CHECK(canonical_config(json::parse(text)) == text);
    CHECK(text.find("\"model\"") < text.find("\"n\""));
}

TEST_CASE("csv escaping") {
    CHECK(csv_escape("plain") == "plain");
    CHECK(csv_escape("a,b") == "\"a,b\"");
    CHECK(csv_escape("say \"hi\"") == "\"say \"\"hi\"\"\"");
    CHECK(csv_escape("two\nlines") == "\"two\nlines\"");
}

TEST_CASE("config errors name the field") {
    const auto dir = scratch("errors");
    RunOptions opts;
    opts.out_dir = dir.string();
    auto expect_field = [&](const std::string& kind, json config, const std::string& field) {
        try {
            run_experiment(kind, config, opts);
            FAIL("expected a config error for " << field);
        } catch (const ConfigError& e) {
            CHECK(e.field() == field);
        }
    };
    auto c = small_backward();
    c["model"]["theta"] = -1.0;
    expect_field("simulate-backward", c, "model.theta");
    c = small_backward();
    c.erase("seed");
    expect_field("simulate-backward", c, "seed");
    c = small_backward();
    c["y0"] = json::array({0.4});
    expect_field("simulate-backward", c, "y0");
    c = small_backward();
    c["model"] = json::parse(R"({"theta": 4, "matrix": [[0.7, 0.3], [0.4, 0.6]]})");
    expect_field("simulate-backward", c, "model");
    c = small_backward();
    c["experiment"] = "gof";
    expect_field("simulate-backward", c, "experiment");
    expect_field("no-such-kind", small_backward(), "experiment");
    c = small_backward();
    c["r_mode"] = "bogus";
    c["proposal"] = json::array({0.5, 0.5});
    expect_field("gof", c, "r_mode");
    CHECK_THROWS_AS(run_experiment_text("gof", "{not json", opts), ConfigError);
}

TEST_CASE("summary contents") {
    const auto dir = scratch("summary");
    RunOptions opts;
    opts.out_dir = dir.string();
    const auto r = run_experiment("path-dev", small_backward(), opts);
    const auto& s = r.summary;
    for (const char* key : {"config", "seed", "version", "statistics", "tolerances", "checks", "passed"}) CHECK(s.contains(key));
    CHECK(s["seed"] == 12);
    CHECK(s["config"]["experiment"] == "path-dev");
    CHECK(fs::exists(dir / "path-dev.csv"));
    CHECK(json::parse(slurp(dir / "path-dev.json")) == s);
    CHECK(slurp(dir / "path-dev.csv").rfind("n,median,mean\n", 0) == 0);
}

TEST_CASE("asymptotic r-mode leaves a warning in the metadata") {
    const auto dir = scratch("warning");
    RunOptions opts;
    opts.out_dir = dir.string();
    auto c = json::parse(R"({"model": {"theta": 4, "matrix": [[0.7, 0.3], [0.4, 0.6]]}, "proposal": [0.5, 0.5],
                             "y0": [0.4, 0.6], "n": 100, "t": 0.5, "paths": 1000, "seed": 3})");
    const auto r = run_experiment("gof", c, opts);
    CHECK(r.summary["metadata"]["r_mode"] == "asymptotic");
    CHECK(r.summary["metadata"].contains("warning"));
}

TEST_CASE("outputs are identical across thread counts and reruns") {
    const std::vector<std::pair<std::string, json>> cases{
        {"simulate-backward", small_backward()},
        {"simulate-forward", json::parse(R"({"model": {"theta": 4, "matrix": [[0.7, 0.3], [0.4, 0.6]]},
            "y0": [0.4, 0.6], "n": [50], "t": 1.0, "paths": 200, "seed": 5})")},
        {"lr-check", json::parse(R"({"model": {"theta": 4, "pim": [0.3, 0.7]}, "proposal": [0.5, 0.5],
            "y0": [0.4, 0.6], "n": 50, "t": 0.5, "paths": 2000, "seed": 8, "analytic_trials": 5,
            "enumeration": {"initial": [[1, 1]], "max_steps": 2}})")},
        {"generator-gap", json::parse(R"({"model": {"theta": 4, "pim": [0.5, 0.5]},
            "test_function": {"delta": 0.15, "radius": 1.0, "m_cap": 2}, "n": [10, 20], "seed": 1})")}};
    for (const auto& [kind, config] : cases) {
        std::string first_csv, first_json;
        for (unsigned threads : {1u, 4u, 1u}) {
            const auto dir = scratch("repro_" + std::to_string(threads));
            RunOptions opts;
            opts.out_dir = dir.string();
            opts.threads = threads;
            run_experiment(kind, config, opts);
            const auto csv = slurp(dir / (kind + ".csv")), js = slurp(dir / (kind + ".json"));
            if (first_csv.empty()) {
                first_csv = csv;
                first_json = js;
            } else {
                CHECK(csv == first_csv);
                CHECK(js == first_json);
            }
        }
    }
}

TEST_CASE("cli exit codes and error output") {
    const auto dir = scratch("cli");
    {
        std::ofstream(dir / "bad.json") << R"({"model": {"theta": "four", "pim": [0.5, 0.5]}, "seed": 1})";
        CHECK(run_cli("asymptotics --config " + (dir / "bad.json").string() + " --out " + dir.string(), dir) == 2);
        const auto err = json::parse(slurp(dir / "stderr.txt"));
        CHECK(err["field"] == "model.theta");
        CHECK(err["error"] == "config_error");
    }
    {
        std::ofstream(dir / "ok.json")
            << R"({"model": {"theta": 4, "pim": [0.5, 0.5]}, "y0": [0.4, 0.6], "n": [100, 1000, 10000], "seed": 1})";
        CHECK(run_cli("asymptotics --config " + (dir / "ok.json").string() + " --out " + dir.string(), dir) == 0);
        CHECK(json::parse(slurp(dir / "stdout.txt"))["passed"] == true);
    }
    {
        std::ofstream(dir / "strict.json") << R"({"model": {"theta": 4, "pim": [0.5, 0.5]}, "y0": [0.4, 0.6],
            "n": [100, 1000], "seed": 1, "tolerances": {"gap_max": 1e-9}})";
        CHECK(run_cli("asymptotics --quiet --config " + (dir / "strict.json").string() + " --out " + dir.string(), dir) == 1);
    }
    {
        std::ofstream(dir / "budget.json") << R"({"model": {"theta": 4, "pim": [0.5, 0.5]}, "proposal": [0.3, 0.7],
            "seed": 1, "analytic_trials": 0, "enumeration": {"initial": [[30, 30]], "max_steps": 40}})";
        CHECK(run_cli("lr-check --config " + (dir / "budget.json").string() + " --out " + dir.string(), dir) == 3);
        CHECK(json::parse(slurp(dir / "stderr.txt"))["error"] == "budget_exceeded");
    }
    CHECK(run_cli("gof --out " + dir.string(), dir) == 2);
    CHECK(run_cli("nonsense --config x", dir) == 2);
}

TEST_CASE("cli seed flag and environment override") {
    const auto dir = scratch("seed");
    std::ofstream(dir / "c.json") << small_backward().dump();
    const auto cfg = (dir / "c.json").string();
    REQUIRE(run_cli("simulate-backward --quiet --config " + cfg + " --out " + (dir / "a").string() + " --seed 77", dir) == 0);
    CHECK(json::parse(slurp(dir / "a" / "simulate-backward.json"))["seed"] == 77);
    REQUIRE(run_cli("simulate-backward --quiet --config " + cfg + " --out " + (dir / "b").string(), dir) == 0);
    CHECK(slurp(dir / "a" / "simulate-backward.csv") != slurp(dir / "b" / "simulate-backward.csv"));
    REQUIRE(run_cli("simulate-backward --quiet --config " + cfg + " --out " + (dir / "c").string() + " --threads 3", dir) == 0);
    CHECK(slurp(dir / "b" / "simulate-backward.csv") == slurp(dir / "c" / "simulate-backward.csv"));
    const std::string env = "COALIM_SEED=77 ";
    const std::string cmd = env + COALIM_CLI_PATH + " simulate-backward --quiet --config " + cfg + " --out " + (dir / "d").string();
    REQUIRE(std::system(cmd.c_str()) == 0);
    CHECK(slurp(dir / "a" / "simulate-backward.csv") == slurp(dir / "d" / "simulate-backward.csv"));
}
