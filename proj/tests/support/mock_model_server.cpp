#include "support/mock_model_server.hpp"

#include <httplib.h>

namespace slmsql::testing {

struct MockModelServer::Impl {
    httplib::Server http;
};

MockModelServer::MockModelServer(Handler handler, std::optional<std::string> required_token)
    : impl_(std::make_unique<Impl>()),
      handler_(std::move(handler)),
      required_token_(std::move(required_token)) {
    impl_->http.new_task_queue = [] { return new httplib::ThreadPool(64); };
    impl_->http.Post("/v1/chat/completions", [this](const httplib::Request& req,
                                                    httplib::Response& res) {
        const std::size_t now = ++in_flight_;
        std::size_t seen = max_in_flight_;
        while (now > seen && !max_in_flight_.compare_exchange_weak(seen, now)) {
        }
        struct Leave {
            std::atomic<std::size_t>& n;
            ~Leave() { --n; }
        } leave{in_flight_};

        if (required_token_ &&
            req.get_header_value("Authorization") != "Bearer " + *required_token_) {
            res.status = 401;
            return;
        }
        Request r;
        r.sequence = requests_++;
        r.body = nlohmann::json::parse(req.body, nullptr, false);
        if (r.body.is_discarded()) {
            res.status = 400;
            return;
        }
        r.prompt = r.body.at("messages").at(0).at("content").get<std::string>();
        r.model = r.body.value("model", std::string{});
        if (r.body.contains("seed")) r.seed = r.body.at("seed").get<std::uint64_t>();
        {
            std::lock_guard lock(log_mu_);
            log_.push_back(r);
        }
        const Reply reply = handler_(r);
        if (reply.delay.count() > 0) std::this_thread::sleep_for(reply.delay);
        res.status = reply.status;
        if (reply.status == 200) {
            const nlohmann::json body = {
                {"id", "mock-" + std::to_string(r.sequence)},
                {"object", "chat.completion"},
                {"choices", {{{"index", 0},
                              {"message", {{"role", "assistant"}, {"content", reply.content}}},
                              {"finish_reason", "stop"}}}},
            };
            res.set_content(body.dump(), "application/json");
        }
    });
    port_ = impl_->http.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { impl_->http.listen_after_bind(); });
    impl_->http.wait_until_ready();
}

MockModelServer::~MockModelServer() {
    impl_->http.stop();
    if (thread_.joinable()) thread_.join();
}

std::string MockModelServer::base_url() const {
    return "http://127.0.0.1:" + std::to_string(port_) + "/v1";
}

std::vector<MockModelServer::Request> MockModelServer::log() const {
    std::lock_guard lock(log_mu_);
    return log_;
}

}  // namespace slmsql::testing
