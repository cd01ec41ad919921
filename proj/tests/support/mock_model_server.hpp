#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

namespace slmsql::testing {

/// In-process OpenAI-compatible chat-completions server for tests.
class MockModelServer {
public:
    struct Request {
        std::string prompt;
        std::string model;
        std::optional<std::uint64_t> seed;
        std::size_t sequence = 0;  // 0-based arrival order
        nlohmann::json body;
    };
    struct Reply {
        int status = 200;
        std::string content;
        std::chrono::milliseconds delay{0};
    };
    using Handler = std::function<Reply(const Request&)>;

    explicit MockModelServer(Handler handler, std::optional<std::string> required_token = {});
    ~MockModelServer();
    MockModelServer(const MockModelServer&) = delete;
    MockModelServer& operator=(const MockModelServer&) = delete;

    /// http://127.0.0.1:<port>/v1
    std::string base_url() const;
    std::size_t requests() const { return requests_; }
    std::size_t max_in_flight() const { return max_in_flight_; }
    std::vector<Request> log() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    Handler handler_;
    std::optional<std::string> required_token_;
    int port_ = -1;
    std::atomic<std::size_t> requests_{0};
    std::atomic<std::size_t> in_flight_{0};
    std::atomic<std::size_t> max_in_flight_{0};
    mutable std::mutex log_mu_;
    std::vector<Request> log_;
    std::thread thread_;
};

}  // namespace slmsql::testing
