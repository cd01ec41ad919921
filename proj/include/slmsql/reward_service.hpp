#pragma once

#include <memory>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "slmsql/executor.hpp"
#include "slmsql/reward.hpp"

namespace slmsql {

struct RewardServiceOptions {
    ExecutorOptions exec;
    double format_weight = kFormatRewardWeight;
    std::size_t batch_parallelism = 0;
};

/// HTTP front end for total_reward.
///
///   POST /score        {raw_output, gold_sql, db_id, timeout_ms?} -> {r_ex, r_format, total}
///   POST /score_batch  {items: [...]}                            -> {scores: [...]}
///   GET  /health                                                  -> {status: "ok", databases: n}
///
/// Failures carry {"error": {"code", "message"}}: 400 bad_request or
/// malformed_json, 404 unknown_db_id, 422 gold_execution_failed. In a batch,
/// failing items are reported in place and the response stays 200.
class RewardService {
public:
    struct Response {
        int status = 200;
        nlohmann::json body;
    };

    RewardService(DatabaseRegistry registry, RewardServiceOptions opts = {});
    ~RewardService();
    RewardService(const RewardService&) = delete;
    RewardService& operator=(const RewardService&) = delete;

    Response handle_score(std::string_view body) const;
    Response handle_score_batch(std::string_view body) const;
    Response handle_health() const;

    /// Binds the listening socket; port 0 picks a free port. Returns the port
    /// or -1 on failure.
    int bind(const std::string& host, int port);
    /// Blocks until stop() is called.
    bool serve();
    void stop();

private:
    Response score_item(const nlohmann::json& item) const;

    DatabaseRegistry registry_;
    RewardServiceOptions opts_;
    struct Server;
    std::unique_ptr<Server> server_;
};

}  // namespace slmsql
