// Command-line front end. Talks to the library only through the C interface.
#include "coalim/coalim.h"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace {

enum Exit { kOk = 0, kCheckFailed = 1, kConfigError = 2, kRuntimeError = 3 };

int report_error(const std::string& kind, const std::string& field, const std::string& message) {
    nlohmann::json err = {{"error", kind}, {"field", field}, {"message", message}};
    std::cerr << err.dump() << "\n";
    return kind == "config_error" ? kConfigError : kRuntimeError;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Typed coalescent jump chains, their scaling limit and change of measure"};
    app.set_version_flag("--version", std::string(coalim_version()));
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed;
    unsigned threads = 1;
    bool quiet = false;

    for (std::size_t i = 0; i < coalim_experiment_count(); ++i) {
        auto* sub = app.add_subcommand(coalim_experiment_name(i), std::string("Run the ") + coalim_experiment_name(i) +
                                                                      " experiment");
        sub->add_option("--config", config_path, "JSON configuration file")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out_dir, "Output directory")->capture_default_str();
        sub->add_option("--seed", seed, "Override the configured seed");
        sub->add_option("--threads", threads, "Worker threads")->capture_default_str()->check(CLI::Range(1u, 1024u));
        sub->add_flag("--quiet", quiet, "Do not print the summary");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }

    const std::string kind = app.get_subcommands().front()->get_name();
    std::ifstream in(config_path, std::ios::binary);
    if (!in) return report_error("config_error", "", "cannot read " + config_path);
    std::stringstream text;
    text << in.rdbuf();

    char* summary = nullptr;
    int passed = 0;
    const std::uint64_t seed_value = seed.value_or(0);
    const coalim_status status = coalim_run_experiment(kind.c_str(), text.str().c_str(), out_dir.c_str(),
                                                       seed ? &seed_value : nullptr, threads, 1, &summary, &passed);
    if (status != COALIM_OK)
        return report_error(coalim_status_name(status), coalim_last_error_field(), coalim_last_error());

    if (!quiet) std::cout << summary << "\n";
    coalim_string_free(summary);
    return passed ? kOk : kCheckFailed;
}
