#include "slmsql/config.hpp"

#include <cctype>
#include <charconv>
#include <functional>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "slmsql/error.hpp"
#include "slmsql/task.hpp"
#include "slmsql/text.hpp"

extern char** environ;

namespace slmsql {

namespace {

[[noreturn]] void invalid(const std::string& key, const std::string& why) {
    throw Error(ErrorCode::InvalidConfig, "config key '" + key + "': " + why);
}

template <class T>
T parse_number(const std::string& key, const std::string& value) {
    const auto v = text::trim(value);
    T out{};
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc{} || res.ptr != v.data() + v.size())
        invalid(key, "expected a number, got '" + value + "'");
    return out;
}

std::size_t parse_count(const std::string& key, const std::string& value) {
    if (text::trim(value).starts_with('-')) invalid(key, "must not be negative");
    return parse_number<std::size_t>(key, value);
}

double parse_real(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const std::string v(text::trim(value));
        const double d = std::stod(v, &used);
        if (used != v.size()) invalid(key, "expected a number, got '" + value + "'");
        return d;
    } catch (const std::logic_error&) {
        invalid(key, "expected a number, got '" + value + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& value) {
    const std::string v = text::to_lower(text::trim(value));
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off") return false;
    invalid(key, "expected a boolean, got '" + value + "'");
}

using Setter = std::function<void(RunConfig&, const std::string& key, const std::string& value)>;

const std::vector<std::pair<std::string, Setter>>& setters() {
    static const std::vector<std::pair<std::string, Setter>> table = {
        {"endpoint_url", [](RunConfig& c, auto&, auto& v) { c.endpoint_url = v; }},
        {"merge_endpoint_url", [](RunConfig& c, auto&, auto& v) { c.merge_endpoint_url = v; }},
        {"model", [](RunConfig& c, auto&, auto& v) { c.model = v; }},
        {"merge_model", [](RunConfig& c, auto&, auto& v) { c.merge_model = v; }},
        {"api_key", [](RunConfig& c, auto&, auto& v) { c.api_key = v; }},
        {"n_gen", [](RunConfig& c, auto& k, auto& v) { c.n_gen = parse_count(k, v); }},
        {"n_merge", [](RunConfig& c, auto& k, auto& v) { c.n_merge = parse_count(k, v); }},
        {"temperature", [](RunConfig& c, auto& k, auto& v) { c.temperature = parse_real(k, v); }},
        {"top_p", [](RunConfig& c, auto& k, auto& v) { c.top_p = parse_real(k, v); }},
        {"max_output_tokens", [](RunConfig& c, auto& k, auto& v) { c.max_output_tokens = parse_count(k, v); }},
        {"request_timeout_ms", [](RunConfig& c, auto& k, auto& v) { c.request_timeout_ms = parse_number<std::int64_t>(k, v); }},
        {"retry_limit", [](RunConfig& c, auto& k, auto& v) { c.retry_limit = parse_count(k, v); }},
        {"concurrency", [](RunConfig& c, auto& k, auto& v) { c.concurrency = parse_count(k, v); }},
        {"task_concurrency", [](RunConfig& c, auto& k, auto& v) { c.task_concurrency = parse_count(k, v); }},
        {"timeout_ms", [](RunConfig& c, auto& k, auto& v) { c.timeout_ms = parse_number<std::int64_t>(k, v); }},
        {"order_sensitive", [](RunConfig& c, auto& k, auto& v) { c.order_sensitive = parse_bool(k, v); }},
        {"max_rows", [](RunConfig& c, auto& k, auto& v) { c.max_rows = parse_count(k, v); }},
        {"max_chars", [](RunConfig& c, auto& k, auto& v) { c.max_chars = parse_count(k, v); }},
        {"dominance_threshold", [](RunConfig& c, auto& k, auto& v) { c.dominance_threshold = parse_real(k, v); }},
        {"no_merge", [](RunConfig& c, auto& k, auto& v) { c.no_merge = parse_bool(k, v); }},
        {"seed", [](RunConfig& c, auto& k, auto& v) { c.seed = parse_number<std::uint64_t>(k, v); }},
        {"sampling_seed", [](RunConfig& c, auto& k, auto& v) { c.sampling_seed = parse_number<std::uint64_t>(k, v); }},
        {"token_limit", [](RunConfig& c, auto& k, auto& v) { c.token_limit = parse_count(k, v); }},
        {"format_weight", [](RunConfig& c, auto& k, auto& v) { c.format_weight = parse_real(k, v); }},
        {"db_manifest", [](RunConfig& c, auto&, auto& v) { c.db_manifest = v; }},
        {"out", [](RunConfig& c, auto&, auto& v) { c.out = v; }},
        {"host", [](RunConfig& c, auto&, auto& v) { c.host = v; }},
        {"port", [](RunConfig& c, auto& k, auto& v) { c.port = parse_number<int>(k, v); }},
    };
    return table;
}

void apply(RunConfig& cfg, const std::string& key, const std::string& value) {
    for (const auto& [name, set] : setters()) {
        if (name == key) {
            set(cfg, key, value);
            return;
        }
    }
    invalid(key, "unknown setting");
}

std::string scalar_to_string(const std::string& key, const nlohmann::json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number()) return v.dump();
    invalid(key, "expected a scalar value");
}

void validate(const RunConfig& c) {
    if (c.n_gen < 1) invalid("n_gen", "must be >= 1");
    if (c.n_merge < 1) invalid("n_merge", "must be >= 1");
    if (!(c.temperature >= 0.0)) invalid("temperature", "must be >= 0");
    if (!(c.top_p > 0.0 && c.top_p <= 1.0)) invalid("top_p", "must be in (0, 1]");
    if (c.max_output_tokens < 1) invalid("max_output_tokens", "must be >= 1");
    if (c.request_timeout_ms <= 0) invalid("request_timeout_ms", "must be > 0");
    if (c.concurrency < 1) invalid("concurrency", "must be >= 1");
    if (c.task_concurrency < 1) invalid("task_concurrency", "must be >= 1");
    if (c.timeout_ms <= 0) invalid("timeout_ms", "must be > 0");
    if (c.max_rows < 1) invalid("max_rows", "must be >= 1");
    if (c.max_chars < 1) invalid("max_chars", "must be >= 1");
    if (!(c.dominance_threshold > 0.0 && c.dominance_threshold <= 1.0))
        invalid("dominance_threshold", "must be in (0, 1]");
    if (c.token_limit < 1) invalid("token_limit", "must be >= 1");
    if (!(c.format_weight >= 0.0)) invalid("format_weight", "must be >= 0");
    if (c.port < 0 || c.port > 65535) invalid("port", "must be in [0, 65535]");
    if (!c.db_manifest.empty() && !std::filesystem::exists(c.db_manifest))
        throw Error(ErrorCode::MissingDatabaseManifest,
                    "database manifest not found: " + c.db_manifest);
}

}  // namespace

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> k;
        for (const auto& [name, _] : setters()) k.push_back(name);
        return k;
    }();
    return keys;
}

RunConfig resolve_config(const std::optional<std::filesystem::path>& file, const Settings& env,
                         const Settings& flags) {
    RunConfig cfg;
    if (file) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(read_file(*file));
        } catch (const nlohmann::json::exception& ex) {
            throw Error(ErrorCode::InvalidConfig,
                        "config file " + file->string() + ": " + ex.what());
        } catch (const Error& ex) {
            throw Error(ErrorCode::InvalidConfig, ex.what());
        }
        if (!j.is_object())
            throw Error(ErrorCode::InvalidConfig, "config file must hold a JSON object");
        for (const auto& [key, value] : j.items()) apply(cfg, key, scalar_to_string(key, value));
    }
    for (const auto& [name, value] : env) {
        if (!name.starts_with(kEnvPrefix)) continue;
        apply(cfg, text::to_lower(name.substr(kEnvPrefix.size())), value);
    }
    for (const auto& [key, value] : flags) apply(cfg, key, value);
    validate(cfg);
    return cfg;
}

Settings process_environment() {
    Settings env;
    for (char** e = environ; e && *e; ++e) {
        std::string_view entry(*e);
        const auto eq = entry.find('=');
        if (eq == std::string_view::npos) continue;
        env.emplace(std::string(entry.substr(0, eq)), std::string(entry.substr(eq + 1)));
    }
    return env;
}

SamplingConfig RunConfig::generation_sampling() const {
    SamplingConfig s;
    s.n_samples = n_gen;
    s.temperature = temperature;
    s.top_p = top_p;
    s.max_output_tokens = max_output_tokens;
    s.concurrency_cap = concurrency;
    s.retry_limit = retry_limit;
    s.request_timeout = std::chrono::milliseconds(request_timeout_ms);
    s.seed = sampling_seed;
    return s;
}

SamplingConfig RunConfig::merge_sampling() const {
    SamplingConfig s = generation_sampling();
    s.n_samples = n_merge;
    return s;
}

ModelEndpoint RunConfig::generation_endpoint() const { return {endpoint_url, model, api_key}; }

ModelEndpoint RunConfig::merge_endpoint() const {
    return {merge_endpoint_url.empty() ? endpoint_url : merge_endpoint_url,
            merge_model.empty() ? model : merge_model, api_key};
}

ExecutorOptions RunConfig::executor() const {
    ExecutorOptions e;
    e.timeout = std::chrono::milliseconds(timeout_ms);
    e.order_sensitive = order_sensitive;
    return e;
}

CscConfig RunConfig::csc() const {
    CscConfig c;
    c.gen = generation_sampling();
    c.merge = merge_sampling();
    c.limits = {max_rows, max_chars};
    c.exec = executor();
    c.vote.dominance_threshold = dominance_threshold;
    c.merge_enabled = !no_merge;
    return c;
}

RewardServiceOptions RunConfig::reward_service() const {
    RewardServiceOptions o;
    o.exec = executor();
    o.format_weight = format_weight;
    return o;
}

}  // namespace slmsql
