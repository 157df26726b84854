#pragma once

#include "coalim/model.hpp"

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace coalim {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kEnvPrefix = "COALIM_";

// A malformed or inconsistent experiment configuration; `field` names the
// offending key path (dot separated).
class ConfigError : public Error {
  public:
    ConfigError(std::string field, const std::string& message)
        : Error(field.empty() ? message : field + ": " + message), field_(std::move(field)) {}
    const std::string& field() const { return field_; }

  private:
    std::string field_;
};

const std::vector<std::string>& experiment_kinds();

// RFC-4180 field quoting: fields holding a comma, quote or line break are
// wrapped in quotes with inner quotes doubled.
std::string csv_escape(const std::string& field);

// Sorted keys, two-space indent. Parsing the output and dumping it again
// reproduces it byte for byte.
std::string canonical_config(const nlohmann::json& config);

// Config key path <-> environment variable: "model.theta" <-> COALIM_MODEL__THETA.
std::string env_name_for(const std::string& key_path);
std::optional<std::string> key_path_for(const std::string& env_name);

// Applies every COALIM_* entry of `env` to the config. Values are parsed as
// JSON when possible and taken as strings otherwise.
void apply_env_overrides(nlohmann::json& config, const std::map<std::string, std::string>& env);

// Collects the process environment entries that carry the prefix.
std::map<std::string, std::string> prefixed_environment();

struct RunOptions {
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed_override;
    unsigned threads = 1;
    std::map<std::string, std::string> env;
};

struct RunResult {
    bool passed = true;
    nlohmann::json summary;
    std::vector<std::string> written_files;
};

// Runs the experiment named by `kind` and writes its CSV and JSON summary
// under options.out_dir. Outputs depend only on the config and seed.
RunResult run_experiment(const std::string& kind, const nlohmann::json& config, const RunOptions& options);

// Same, from JSON text. Parse failures raise ConfigError.
RunResult run_experiment_text(const std::string& kind, const std::string& config_text, const RunOptions& options);

}  // namespace coalim
