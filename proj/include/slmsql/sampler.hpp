#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace slmsql {

struct SamplingConfig {
    std::size_t n_samples = 64;
    double temperature = 0.8;
    double top_p = 0.95;
    std::size_t max_output_tokens = 4096;
    std::size_t concurrency_cap = 8;
    std::size_t retry_limit = 3;
    std::chrono::milliseconds request_timeout{120000};
    std::chrono::milliseconds retry_backoff{200};
    /// When set, slot i sends `seed + i` so serving backends can reproduce it.
    std::optional<std::uint64_t> seed;

    /// Throws Error(InvalidConfig).
    void validate() const;
};

struct ModelEndpoint {
    std::string base_url;  // e.g. http://127.0.0.1:8000/v1
    std::string model_name;
    std::optional<std::string> auth_token;
};

/// A completion split into its think block and answer SQL.
struct ParsedCandidate {
    std::string raw;
    std::optional<std::string> think;
    std::optional<std::string> answer_sql;
    bool format_ok = false;
};

/// Extracts the first <think>...</think> and the first <answer>...</answer>
/// after it. format_ok requires nothing but whitespace around and between the
/// two blocks and an answer starting with SELECT. Without answer tags the
/// last SQL statement in the text is used as a fallback (format_ok = false).
ParsedCandidate parse_model_output(std::string_view raw);

/// Sends one chat-completions request per slot, at most
/// cfg.concurrency_cap in flight, and returns the texts in slot order.
/// Throws Error(EndpointUnavailable) once a slot exhausts its retries and
/// Error(AuthRejected) on 401/403.
std::vector<std::string> sample_candidates(const ModelEndpoint& endpoint, std::string_view prompt,
                                           const SamplingConfig& cfg);

/// Anything that can turn a prompt into n completions.
class CompletionSource {
public:
    virtual ~CompletionSource() = default;
    virtual std::vector<std::string> complete(std::string_view prompt, const SamplingConfig& cfg) = 0;
};

class HttpCompletionSource final : public CompletionSource {
public:
    explicit HttpCompletionSource(ModelEndpoint endpoint) : endpoint_(std::move(endpoint)) {}
    std::vector<std::string> complete(std::string_view prompt, const SamplingConfig& cfg) override {
        return sample_candidates(endpoint_, prompt, cfg);
    }

private:
    ModelEndpoint endpoint_;
};

}  // namespace slmsql
