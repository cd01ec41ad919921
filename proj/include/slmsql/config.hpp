#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "slmsql/consensus.hpp"
#include "slmsql/reward_service.hpp"
#include "slmsql/sampler.hpp"

namespace slmsql {

/// Environment variables are the upper-cased keys with this prefix,
/// e.g. SLMSQL_N_GEN.
inline constexpr std::string_view kEnvPrefix = "SLMSQL_";

struct RunConfig {
    std::string endpoint_url = "http://127.0.0.1:8000/v1";
    std::string merge_endpoint_url;  // empty: same as endpoint_url
    std::string model = "slm-sql-generator";
    std::string merge_model;         // empty: same as model
    std::optional<std::string> api_key;
    std::size_t n_gen = 64;
    std::size_t n_merge = 8;
    double temperature = 0.8;
    double top_p = 0.95;
    std::size_t max_output_tokens = 4096;
    std::int64_t request_timeout_ms = 120000;
    std::size_t retry_limit = 3;
    std::size_t concurrency = 8;
    std::size_t task_concurrency = 4;
    std::int64_t timeout_ms = 30000;
    bool order_sensitive = false;
    std::size_t max_rows = 10;
    std::size_t max_chars = 1000;
    double dominance_threshold = 1.0;
    bool no_merge = false;
    std::uint64_t seed = 0;
    std::optional<std::uint64_t> sampling_seed;
    std::size_t token_limit = 7000;
    double format_weight = 0.1;
    std::string db_manifest;
    std::string out;
    std::string host = "127.0.0.1";
    int port = 8080;

    SamplingConfig generation_sampling() const;
    SamplingConfig merge_sampling() const;
    ModelEndpoint generation_endpoint() const;
    ModelEndpoint merge_endpoint() const;
    ExecutorOptions executor() const;
    CscConfig csc() const;
    RewardServiceOptions reward_service() const;
};

using Settings = std::map<std::string, std::string>;

/// Every key RunConfig accepts, in snake_case.
const std::vector<std::string>& config_keys();

/// Layers settings with precedence flags > env > config file > defaults and
/// validates the result. `env` holds raw environment variables; only those
/// with kEnvPrefix are read. Throws Error(InvalidConfig) naming the offending
/// key, or Error(MissingDatabaseManifest).
RunConfig resolve_config(const std::optional<std::filesystem::path>& file, const Settings& env,
                         const Settings& flags);

/// Snapshot of the process environment.
Settings process_environment();

}  // namespace slmsql
