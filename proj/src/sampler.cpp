#include "slmsql/sampler.hpp"

#include <atomic>
#include <mutex>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "slmsql/error.hpp"
#include "slmsql/text.hpp"

namespace slmsql {

void SamplingConfig::validate() const {
    if (n_samples < 1) throw Error(ErrorCode::InvalidConfig, "n_samples must be >= 1");
    if (concurrency_cap < 1) throw Error(ErrorCode::InvalidConfig, "concurrency_cap must be >= 1");
    if (!(temperature >= 0.0)) throw Error(ErrorCode::InvalidConfig, "temperature must be >= 0");
    if (!(top_p > 0.0 && top_p <= 1.0))
        throw Error(ErrorCode::InvalidConfig, "top_p must be in (0, 1]");
    if (max_output_tokens < 1) throw Error(ErrorCode::InvalidConfig, "max_output_tokens must be >= 1");
}

ParsedCandidate parse_model_output(std::string_view raw) {
    constexpr std::string_view kThinkOpen = "<think>";
    constexpr std::string_view kThinkClose = "</think>";
    constexpr std::string_view kAnswerOpen = "<answer>";
    constexpr std::string_view kAnswerClose = "</answer>";
    constexpr auto npos = std::string_view::npos;

    ParsedCandidate out;
    out.raw = std::string(raw);

    const std::size_t think_open = raw.find(kThinkOpen);
    std::size_t think_close = npos;
    if (think_open != npos) {
        think_close = raw.find(kThinkClose, think_open + kThinkOpen.size());
        if (think_close != npos) {
            const std::size_t b = think_open + kThinkOpen.size();
            out.think = std::string(text::trim(raw.substr(b, think_close - b)));
        }
    }

    const std::size_t search_from = think_close == npos ? 0 : think_close + kThinkClose.size();
    const std::size_t answer_open = raw.find(kAnswerOpen, search_from);
    std::size_t answer_close = npos;
    if (answer_open != npos) {
        answer_close = raw.find(kAnswerClose, answer_open + kAnswerOpen.size());
        if (answer_close != npos) {
            const std::size_t b = answer_open + kAnswerOpen.size();
            std::string sql = text::strip_markdown_fences(raw.substr(b, answer_close - b));
            if (!sql.empty()) out.answer_sql = std::move(sql);
        }
    }

    if (answer_close == npos) {
        if (auto span = text::locate_final_sql(raw)) out.answer_sql = span->sql;
        return out;
    }

    out.format_ok =
        out.think.has_value() && out.answer_sql.has_value() &&
        text::trim(raw.substr(0, think_open)).empty() &&
        text::trim(raw.substr(search_from, answer_open - search_from)).empty() &&
        text::trim(raw.substr(answer_close + kAnswerClose.size())).empty() &&
        text::starts_with_keyword(*out.answer_sql, "select");
    return out;
}

namespace {

struct ParsedUrl {
    std::string scheme_host_port;
    std::string path_prefix;
};

ParsedUrl parse_base_url(const std::string& url) {
    constexpr std::string_view kHttp = "http://";
    if (url.rfind(kHttp, 0) != 0)
        throw Error(ErrorCode::InvalidConfig,
                    "endpoint url must start with http:// (got '" + url + "')");
    const std::size_t slash = url.find('/', kHttp.size());
    ParsedUrl out;
    out.scheme_host_port = url.substr(0, slash);
    if (out.scheme_host_port.size() == kHttp.size())
        throw Error(ErrorCode::InvalidConfig, "endpoint url has no host: " + url);
    if (slash != std::string::npos) out.path_prefix = url.substr(slash);
    while (!out.path_prefix.empty() && out.path_prefix.back() == '/') out.path_prefix.pop_back();
    return out;
}

enum class Attempt { Ok, Retry, Auth, Fatal };

}  // namespace

std::vector<std::string> sample_candidates(const ModelEndpoint& endpoint, std::string_view prompt,
                                           const SamplingConfig& cfg) {
    cfg.validate();
    const ParsedUrl url = parse_base_url(endpoint.base_url);
    const std::string path = url.path_prefix + "/chat/completions";

    std::vector<std::string> results(cfg.n_samples);
    std::atomic<std::size_t> next{0};
    std::atomic<bool> abort{false};
    std::mutex failure_mu;
    std::optional<Error> failure;

    auto fail = [&](ErrorCode code, std::string msg) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure.emplace(code, std::move(msg));
        abort = true;
    };

    auto worker = [&] {
        httplib::Client client(url.scheme_host_port);
        const auto secs = std::chrono::duration_cast<std::chrono::seconds>(cfg.request_timeout);
        const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(
            cfg.request_timeout - secs);
        client.set_read_timeout(secs.count(), usecs.count());
        client.set_write_timeout(secs.count(), usecs.count());
        client.set_connection_timeout(std::min<std::int64_t>(secs.count(), 10), 0);
        if (endpoint.auth_token) client.set_bearer_token_auth(*endpoint.auth_token);

        for (std::size_t slot = next++; slot < cfg.n_samples && !abort; slot = next++) {
            nlohmann::json body = {
                {"model", endpoint.model_name},
                {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
                {"temperature", cfg.temperature},
                {"top_p", cfg.top_p},
                {"max_tokens", cfg.max_output_tokens},
            };
            if (cfg.seed) body["seed"] = *cfg.seed + slot;
            const std::string payload = body.dump();

            std::string last_error;
            bool done = false;
            for (std::size_t attempt = 0; attempt <= cfg.retry_limit && !done && !abort; ++attempt) {
                if (attempt > 0 && cfg.retry_backoff.count() > 0)
                    std::this_thread::sleep_for(cfg.retry_backoff * attempt);
                Attempt verdict = Attempt::Retry;
                auto res = client.Post(path, payload, "application/json");
                if (!res) {
                    last_error = "transport error: " + httplib::to_string(res.error());
                } else if (res->status == 401 || res->status == 403) {
                    verdict = Attempt::Auth;
                    last_error = "credentials rejected (HTTP " + std::to_string(res->status) + ")";
                } else if (res->status == 429 || res->status >= 500) {
                    last_error = "HTTP " + std::to_string(res->status);
                } else if (res->status != 200) {
                    verdict = Attempt::Fatal;
                    last_error = "HTTP " + std::to_string(res->status) + ": " + res->body;
                } else {
                    try {
                        const auto j = nlohmann::json::parse(res->body);
                        const auto& choice = j.at("choices").at(0);
                        if (choice.contains("message"))
                            results[slot] = choice.at("message").at("content").get<std::string>();
                        else
                            results[slot] = choice.at("text").get<std::string>();
                        verdict = Attempt::Ok;
                    } catch (const nlohmann::json::exception& ex) {
                        last_error = std::string("malformed completion: ") + ex.what();
                    }
                }
                switch (verdict) {
                    case Attempt::Ok: done = true; break;
                    case Attempt::Retry: break;
                    case Attempt::Auth: fail(ErrorCode::AuthRejected, last_error); return;
                    case Attempt::Fatal:
                        fail(ErrorCode::EndpointUnavailable, "slot " + std::to_string(slot) + ": " + last_error);
                        return;
                }
            }
            if (!done) {
                fail(ErrorCode::EndpointUnavailable,
                     "slot " + std::to_string(slot) + " failed after " +
                         std::to_string(cfg.retry_limit + 1) + " attempts: " + last_error);
                return;
            }
        }
    };

    {
        const std::size_t n_workers = std::min(cfg.concurrency_cap, cfg.n_samples);
        std::vector<std::jthread> workers;
        workers.reserve(n_workers);
        for (std::size_t i = 0; i < n_workers; ++i) workers.emplace_back(worker);
    }
    if (failure) throw *failure;
    return results;
}

}  // namespace slmsql
