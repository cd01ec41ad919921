#include <gtest/gtest.h>

#include <algorithm>
#include <thread>

#include <httplib.h>
#include <sqlite3.h>

#include "slmsql/error.hpp"
#include "slmsql/reward.hpp"
#include "slmsql/reward_service.hpp"
#include "support/fixture_db.hpp"

namespace slmsql {
namespace {

// Independent result comparison: every cell as sqlite text, rows sorted.
std::optional<std::vector<std::vector<std::string>>> raw_rows(const std::filesystem::path& file,
                                                              const std::string& sql) {
    sqlite3* db = nullptr;
    sqlite3_open_v2(file.c_str(), &db, SQLITE_OPEN_READONLY, nullptr);
    sqlite3_stmt* st = nullptr;
    if (sqlite3_prepare_v2(db, sql.c_str(), -1, &st, nullptr) != SQLITE_OK) {
        sqlite3_close(db);
        return std::nullopt;
    }
    std::vector<std::vector<std::string>> rows;
    int rc;
    while ((rc = sqlite3_step(st)) == SQLITE_ROW) {
        std::vector<std::string> row;
        for (int i = 0; i < sqlite3_column_count(st); ++i) {
            const auto* t = sqlite3_column_text(st, i);
            row.push_back(t ? reinterpret_cast<const char*>(t) : "<null>");
        }
        rows.push_back(row);
    }
    sqlite3_finalize(st);
    sqlite3_close(db);
    if (rc != SQLITE_DONE) return std::nullopt;
    std::sort(rows.begin(), rows.end());
    return rows;
}

class RewardTest : public ::testing::Test {
protected:
    void SetUp() override {
        file_ = dir_.path() / "school.sqlite";
        testing::create_school_db(file_);
        db_ = DatabaseRef{"school", file_};
    }
    testing::TempDir dir_;
    std::filesystem::path file_;
    DatabaseRef db_;
};

constexpr const char* kGold = "SELECT name FROM schools WHERE city = 'Oakland'";

TEST(FormatReward, Examples) {
    EXPECT_EQ(format_reward("<think>x</think>\n<answer>SELECT 1</answer>"), 1);
    EXPECT_EQ(format_reward("SELECT 1"), 0);
    EXPECT_EQ(format_reward("<think>x</think><answer>UPDATE t SET a=1</answer>"), 0);
    EXPECT_EQ(format_reward("<answer>SELECT 1</answer>"), 0);
    EXPECT_EQ(format_reward("<think>x</think>\n<answer>SELECT 1</answer> extra"), 0);
}

TEST_F(RewardTest, ExecutionRewardMatchesIndependentComparison) {
    const std::vector<std::string> preds = {
        kGold,
        "SELECT name FROM schools WHERE city = 'Oakland' ORDER BY name DESC",
        "SELECT name, city FROM schools WHERE city = 'Oakland'",
        "SELECT name FROM schools",
        "SELECT name FROM schools WHERE id IN (2, 5)",
        "SELECT nam FROM schools",
        "",
    };
    const auto gold_rows = raw_rows(file_, kGold);
    for (const auto& p : preds) {
        const auto pr = raw_rows(file_, p);
        const int expected = (pr && !p.empty() && *pr == *gold_rows) ? 1 : 0;
        EXPECT_EQ(execution_reward(p, kGold, db_), expected) << p;
    }
    EXPECT_EQ(execution_reward("SELECT name, city FROM schools WHERE city = 'Oakland'", kGold, db_), 0);
}

TEST_F(RewardTest, GoldFailure) {
    try {
        execution_reward(kGold, "SELECT broken FROM", db_);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::GoldExecutionFailed);
    }
}

TEST_F(RewardTest, TotalGrid) {
    const std::string good = kGold;
    const std::string bad = "SELECT name FROM schools";
    struct Case {
        std::string raw;
        double total;
    };
    const std::vector<Case> grid = {
        {"```sql\n" + bad + "\n```", 0.0},
        {"<think>t</think>\n<answer>" + bad + "</answer>", 0.1},
        {"Here: " + good, 1.0},
        {"<think>t</think>\n<answer>" + good + "</answer>", 1.1},
    };
    for (const auto& c : grid) {
        const auto s = total_reward(c.raw, kGold, db_);
        EXPECT_EQ(s.total, c.total) << c.raw;
        EXPECT_EQ(s.total, s.r_ex + 0.1 * s.r_format);
    }
}

class RewardServiceTest : public RewardTest {
protected:
    void SetUp() override {
        RewardTest::SetUp();
        DatabaseRegistry reg;
        reg.add("school", file_);
        service_ = std::make_unique<RewardService>(reg);
        port_ = service_->bind("127.0.0.1", 0);
        ASSERT_GT(port_, 0);
        thread_ = std::thread([this] { service_->serve(); });
    }
    void TearDown() override {
        service_->stop();
        if (thread_.joinable()) thread_.join();
    }

    nlohmann::json post(const std::string& path, const nlohmann::json& body, int expect_status) {
        httplib::Client cli("127.0.0.1", port_);
        auto res = cli.Post(path, body.dump(), "application/json");
        EXPECT_TRUE(res);
        if (!res) return {};
        EXPECT_EQ(res->status, expect_status) << res->body;
        return nlohmann::json::parse(res->body);
    }

    std::unique_ptr<RewardService> service_;
    int port_ = 0;
    std::thread thread_;
};

TEST_F(RewardServiceTest, ScoreParity) {
    const std::string raw = std::string("<think>t</think>\n<answer>") + kGold + "</answer>";
    const auto j = post("/score", {{"raw_output", raw}, {"gold_sql", kGold}, {"db_id", "school"}}, 200);
    const auto local = total_reward(raw, kGold, db_);
    EXPECT_EQ(j.at("r_ex"), local.r_ex);
    EXPECT_EQ(j.at("r_format"), local.r_format);
    EXPECT_EQ(j.at("total").get<double>(), local.total);
}

TEST_F(RewardServiceTest, ErrorCodes) {
    auto j = post("/score", {{"raw_output", "x"}, {"gold_sql", kGold}, {"db_id", "nope"}}, 404);
    EXPECT_EQ(j.at("error").at("code"), "unknown_db_id");
    j = post("/score", {{"raw_output", "x"}, {"gold_sql", "SELECT broken FROM"}, {"db_id", "school"}}, 422);
    EXPECT_EQ(j.at("error").at("code"), "gold_execution_failed");
    j = post("/score", {{"gold_sql", kGold}}, 400);
    EXPECT_EQ(j.at("error").at("code"), "bad_request");

    httplib::Client cli("127.0.0.1", port_);
    auto res = cli.Post("/score", "{not json", "application/json");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 400);
    EXPECT_EQ(nlohmann::json::parse(res->body).at("error").at("code"), "malformed_json");
}

TEST_F(RewardServiceTest, BatchKeepsOrderAndInlineErrors) {
    nlohmann::json items = nlohmann::json::array();
    items.push_back({{"raw_output", std::string("<think>t</think><answer>") + kGold + "</answer>"},
                     {"gold_sql", kGold}, {"db_id", "school"}});
    items.push_back({{"raw_output", "x"}, {"gold_sql", kGold}, {"db_id", "nope"}});
    items.push_back({{"raw_output", kGold}, {"gold_sql", kGold}, {"db_id", "school"}});
    const auto j = post("/score_batch", {{"items", items}}, 200);
    const auto& scores = j.at("scores");
    ASSERT_EQ(scores.size(), 3u);
    EXPECT_EQ(scores[0].at("total").get<double>(), 1.1);
    EXPECT_EQ(scores[1].at("error").at("code"), "unknown_db_id");
    EXPECT_EQ(scores[2].at("total").get<double>(), 1.0);
}

TEST_F(RewardServiceTest, Health) {
    httplib::Client cli("127.0.0.1", port_);
    auto res = cli.Get("/health");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 200);
    const auto j = nlohmann::json::parse(res->body);
    EXPECT_EQ(j.at("status"), "ok");
    EXPECT_EQ(j.at("databases"), 1);
}

}  // namespace
}  // namespace slmsql
