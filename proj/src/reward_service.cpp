#include "slmsql/reward_service.hpp"

#include <atomic>
#include <thread>

#include <httplib.h>

#include "slmsql/error.hpp"

namespace slmsql {

namespace {

RewardService::Response error_response(int status, std::string_view code, std::string message) {
    return {status, {{"error", {{"code", code}, {"message", std::move(message)}}}}};
}

const nlohmann::json* string_field(const nlohmann::json& item, const char* key) {
    auto it = item.find(key);
    if (it == item.end() || !it->is_string()) return nullptr;
    return &*it;
}

}  // namespace

struct RewardService::Server {
    httplib::Server http;
};

RewardService::RewardService(DatabaseRegistry registry, RewardServiceOptions opts)
    : registry_(std::move(registry)), opts_(opts), server_(std::make_unique<Server>()) {
    auto reply = [](httplib::Response& res, const Response& r) {
        res.status = r.status;
        res.set_content(r.body.dump(), "application/json");
    };
    server_->http.Post("/score", [this, reply](const httplib::Request& req, httplib::Response& res) {
        reply(res, handle_score(req.body));
    });
    server_->http.Post("/score_batch",
                       [this, reply](const httplib::Request& req, httplib::Response& res) {
                           reply(res, handle_score_batch(req.body));
                       });
    server_->http.Get("/health", [this, reply](const httplib::Request&, httplib::Response& res) {
        reply(res, handle_health());
    });
}

RewardService::~RewardService() { stop(); }

RewardService::Response RewardService::score_item(const nlohmann::json& item) const {
    if (!item.is_object()) return error_response(400, "bad_request", "item must be a JSON object");
    const auto* raw = string_field(item, "raw_output");
    const auto* gold = string_field(item, "gold_sql");
    const auto* db_id = string_field(item, "db_id");
    if (!raw || !gold || !db_id)
        return error_response(400, "bad_request",
                              "raw_output, gold_sql and db_id are required strings");
    ExecutorOptions exec = opts_.exec;
    if (auto it = item.find("timeout_ms"); it != item.end() && !it->is_null()) {
        if (!it->is_number_integer() || it->get<long long>() <= 0)
            return error_response(400, "bad_request", "timeout_ms must be a positive integer");
        exec.timeout = std::chrono::milliseconds(it->get<long long>());
    }
    const auto* db = registry_.find(db_id->get_ref<const std::string&>());
    if (!db)
        return error_response(404, to_string(ErrorCode::UnknownDatabase),
                              "unknown db_id '" + db_id->get<std::string>() + "'");
    try {
        const auto score = total_reward(raw->get_ref<const std::string&>(),
                                        gold->get_ref<const std::string&>(), *db, exec,
                                        opts_.format_weight);
        return {200, to_json(score)};
    } catch (const Error& e) {
        if (e.code() == ErrorCode::GoldExecutionFailed)
            return error_response(422, to_string(e.code()), e.what());
        return error_response(500, to_string(e.code()), e.what());
    }
}

RewardService::Response RewardService::handle_score(std::string_view body) const {
    const auto j = nlohmann::json::parse(body, nullptr, false);
    if (j.is_discarded()) return error_response(400, "malformed_json", "request body is not JSON");
    return score_item(j);
}

RewardService::Response RewardService::handle_score_batch(std::string_view body) const {
    const auto j = nlohmann::json::parse(body, nullptr, false);
    if (j.is_discarded()) return error_response(400, "malformed_json", "request body is not JSON");
    if (!j.is_object() || !j.contains("items") || !j.at("items").is_array())
        return error_response(400, "bad_request", "body must be {\"items\": [...]}");
    const auto& items = j.at("items");
    std::vector<nlohmann::json> scores(items.size());

    std::size_t workers = opts_.batch_parallelism;
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    workers = std::min(workers, items.size());
    std::atomic<std::size_t> next{0};
    auto run = [&] {
        for (std::size_t i = next++; i < items.size(); i = next++)
            scores[i] = score_item(items[i]).body;
    };
    {
        std::vector<std::jthread> pool;
        for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(run);
        run();
    }
    return {200, {{"scores", std::move(scores)}}};
}

RewardService::Response RewardService::handle_health() const {
    return {200, {{"status", "ok"}, {"databases", registry_.size()}}};
}

int RewardService::bind(const std::string& host, int port) {
    if (port == 0) return server_->http.bind_to_any_port(host);
    return server_->http.bind_to_port(host, port) ? port : -1;
}

bool RewardService::serve() { return server_->http.listen_after_bind(); }

void RewardService::stop() {
    if (server_) server_->http.stop();
}

}  // namespace slmsql
