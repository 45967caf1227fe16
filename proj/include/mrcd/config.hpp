#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "mrcd/external_sources.hpp"
#include "mrcd/llm_gateway.hpp"
#include "mrcd/orchestrator.hpp"
#include "mrcd/simharness.hpp"
#include "mrcd/slm.hpp"

namespace mrcd {

// Full application configuration as read from a JSON config file. Unknown
// keys are rejected; string values support ${VAR} environment interpolation,
// which is also the only way secrets enter a run (never literal keys).
struct AppConfig {
    std::filesystem::path dataset;
    std::optional<std::int64_t> split_cutoff;
    std::filesystem::path corpus;
    std::filesystem::path cache_dir = "cache";
    bool allow_live = false;
    std::filesystem::path run_dir = "run";

    SearchProviderConfig search;
    bool wiki_enabled = true;
    WikiConfig wiki;

    std::string llm_backend = "mock";  // mock | remote | oracle
    RemoteLlmConfig llm_remote;
    std::filesystem::path llm_script;
    bool llm_fallback = true;  // mock backend: deterministic fallback for unscripted prompts
    OracleConfig llm_oracle;

    std::string slm_backend = "linear";  // linear | remote | oracle
    RemoteSlmConfig slm_remote;
    OracleConfig slm_oracle;

    RunConfig run;

    static AppConfig from_file(const std::filesystem::path& path);
    static AppConfig from_json(const nlohmann::json& j);
};

// Replaces every ${VAR} with the value of the environment variable VAR;
// an unset variable is a ConfigError (secrets must come from the environment,
// so a missing one has to fail loudly).
std::string interpolate_env(const std::string& value);

// Recursive over objects and arrays, applied to every string value.
nlohmann::json interpolate_env(const nlohmann::json& j);

}  // namespace mrcd
