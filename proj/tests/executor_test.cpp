#include <gtest/gtest.h>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <random>

#include "slmsql/error.hpp"
#include "slmsql/executor.hpp"
#include "support/fixture_db.hpp"

namespace slmsql {
namespace {

using namespace std::chrono_literals;

class ExecutorTest : public ::testing::Test {
protected:
    void SetUp() override {
        db_.db_id = "school";
        db_.path = dir_.path() / "school.sqlite";
        testing::create_school_db(db_.path);
    }

    testing::TempDir dir_;
    DatabaseRef db_;
};

TEST_F(ExecutorTest, ConstantQuery) {
    const auto out = execute_sql(db_, "SELECT 1");
    ASSERT_TRUE(out.ok());
    ASSERT_EQ(out.fingerprint->rows.size(), 1u);
    EXPECT_EQ(out.fingerprint->column_count, 1u);
    EXPECT_EQ(out.fingerprint->rows[0][0], Cell{std::int64_t{1}});
}

TEST_F(ExecutorTest, SyntaxError) {
    const auto out = execute_sql(db_, "SELEC 1");
    EXPECT_EQ(out.status, ExecStatus::Error);
    EXPECT_EQ(out.error_kind, ExecErrorKind::Syntax);
}

TEST_F(ExecutorTest, MissingObject) {
    const auto out = execute_sql(db_, "SELECT nope FROM schools");
    EXPECT_EQ(out.error_kind, ExecErrorKind::MissingObject);
    EXPECT_EQ(execute_sql(db_, "SELECT * FROM nowhere").error_kind, ExecErrorKind::MissingObject);
}

TEST_F(ExecutorTest, EmptyStatementIsAnError) {
    EXPECT_EQ(execute_sql(db_, "   ").status, ExecStatus::Error);
}

TEST_F(ExecutorTest, DropIsRejectedAndTableSurvives) {
    const auto before = testing::file_checksum(db_.path);
    const auto out = execute_sql(db_, "DROP TABLE schools");
    EXPECT_EQ(out.error_kind, ExecErrorKind::ReadOnlyViolation);
    EXPECT_TRUE(execute_sql(db_, "SELECT count(*) FROM schools").ok());
    EXPECT_EQ(testing::file_checksum(db_.path), before);
}

TEST_F(ExecutorTest, MutationsHiddenInsideCteAreRejected) {
    const auto out = execute_sql(db_, "WITH x AS (SELECT 1) DELETE FROM students");
    EXPECT_EQ(out.error_kind, ExecErrorKind::ReadOnlyViolation);
    const auto second = execute_sql(db_, "SELECT 1; DELETE FROM students");
    EXPECT_EQ(second.status, ExecStatus::Error);
    EXPECT_EQ(execute_sql(db_, "SELECT count(*) FROM students").fingerprint->rows[0][0],
              Cell{std::int64_t{8}});
}

TEST_F(ExecutorTest, TrailingSemicolonIsFine) {
    EXPECT_TRUE(execute_sql(db_, "SELECT name FROM schools;  ").ok());
}

TEST_F(ExecutorTest, UnboundedRecursionTimesOut) {
    ExecutorOptions opts;
    opts.timeout = 2s;
    const auto start = std::chrono::steady_clock::now();
    const auto out = execute_sql(
        db_, "WITH RECURSIVE c(x) AS (SELECT 1 UNION ALL SELECT x + 1 FROM c) SELECT count(*) FROM c",
        opts);
    const auto wall = std::chrono::steady_clock::now() - start;
    EXPECT_EQ(out.status, ExecStatus::Timeout);
    EXPECT_GE(wall, 1500ms);
    EXPECT_LE(wall, 2500ms);
}

TEST_F(ExecutorTest, RowOrderIgnoredColumnOrderKept) {
    const auto asc = execute_sql(db_, "SELECT name, city FROM schools ORDER BY name ASC");
    const auto desc = execute_sql(db_, "SELECT name, city FROM schools ORDER BY name DESC");
    const auto swapped = execute_sql(db_, "SELECT city, name FROM schools");
    EXPECT_TRUE(results_equivalent(asc, desc));
    EXPECT_FALSE(results_equivalent(asc, swapped));
}

TEST_F(ExecutorTest, OrderSensitiveFlag) {
    ExecutorOptions opts;
    opts.order_sensitive = true;
    const auto asc = execute_sql(db_, "SELECT name FROM schools ORDER BY name ASC", opts);
    const auto desc = execute_sql(db_, "SELECT name FROM schools ORDER BY name DESC", opts);
    EXPECT_FALSE(results_equivalent(asc, desc));
}

TEST_F(ExecutorTest, ErrorsNeverEquivalent) {
    const auto a = execute_sql(db_, "SELEC 1");
    const auto b = execute_sql(db_, "SELEC 1");
    const auto ok = execute_sql(db_, "SELECT 1");
    EXPECT_FALSE(results_equivalent(a, b));
    EXPECT_FALSE(results_equivalent(ok, a));
    EXPECT_TRUE(results_equivalent(ok, ok));
}

TEST_F(ExecutorTest, RealAffinityCollapses) {
    const auto a = execute_sql(db_, "SELECT enrollment FROM schools");
    const auto b = execute_sql(db_, "SELECT CAST(enrollment AS REAL) FROM schools");
    EXPECT_TRUE(results_equivalent(a, b));
}

TEST_F(ExecutorTest, Deterministic) {
    const auto a = execute_sql(db_, "SELECT s.name, avg(t.gpa) FROM schools s JOIN students t ON t.school_id = s.id GROUP BY s.id");
    const auto b = execute_sql(db_, "SELECT s.name, avg(t.gpa) FROM schools s JOIN students t ON t.school_id = s.id GROUP BY s.id");
    ASSERT_TRUE(a.ok());
    EXPECT_EQ(a.fingerprint->digest, b.fingerprint->digest);
}

TEST_F(ExecutorTest, BatchKeepsOrder) {
    const std::vector<std::string> sqls = {"SELECT 1", "SELEC", "SELECT 2", ""};
    const auto out = execute_batch(db_, sqls, {}, 3);
    ASSERT_EQ(out.size(), 4u);
    EXPECT_EQ(out[0].fingerprint->rows[0][0], Cell{std::int64_t{1}});
    EXPECT_FALSE(out[1].ok());
    EXPECT_EQ(out[2].fingerprint->rows[0][0], Cell{std::int64_t{2}});
    EXPECT_FALSE(out[3].ok());
}

TEST(NormalizeRows, IntegralRealsCollapse) {
    const auto a = normalize_rows({{Cell{1.0}}, {Cell{std::int64_t{2}}}});
    const auto b = normalize_rows({{Cell{std::int64_t{1}}}, {Cell{std::int64_t{2}}}});
    EXPECT_EQ(a, b);
    EXPECT_EQ(a.rows[0][0], Cell{std::int64_t{1}});
}

TEST(NormalizeRows, MultisetSemantics) {
    const auto a = normalize_rows({{Cell{std::string("b")}}, {Cell{std::string("a")}}});
    const auto b = normalize_rows({{Cell{std::string("a")}}, {Cell{std::string("b")}}});
    EXPECT_EQ(a.digest, b.digest);
    EXPECT_EQ(a, b);
    const auto dup = normalize_rows({{Cell{std::string("a")}}, {Cell{std::string("a")}}, {Cell{std::string("b")}}});
    EXPECT_FALSE(dup == a);
}

TEST(NormalizeRows, NullEqualsNull) {
    EXPECT_EQ(normalize_rows({{Cell{}}}), normalize_rows({{Cell{}}}));
}

TEST(NormalizeRows, RealsRoundToSixDecimals) {
    EXPECT_EQ(normalize_rows({{Cell{0.1 + 0.2}}}), normalize_rows({{Cell{0.3}}}));
    EXPECT_FALSE(normalize_rows({{Cell{0.300001}}}) == normalize_rows({{Cell{0.3}}}));
}

TEST(NormalizeRows, RaggedRowsThrow) {
    try {
        normalize_rows({{Cell{}}, {Cell{}, Cell{}}});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::RaggedRows);
    }
}

TEST(NormalizeRows, ColumnCountDistinguishesEmptyResults) {
    EXPECT_FALSE(normalize_rows({}, 1) == normalize_rows({}, 2));
}

// Digest equality must agree with a brute-force multiset comparison.
TEST(NormalizeRows, FingerprintMatchesBruteForceMultiset) {
    std::mt19937 rng(7);
    auto random_cell = [&]() -> Cell {
        switch (rng() % 4) {
            case 0: return std::monostate{};
            case 1: return static_cast<std::int64_t>(rng() % 3);
            case 2: return static_cast<double>(rng() % 3) + ((rng() % 2) ? 0.5 : 0.0);
            default: return std::string(1, static_cast<char>('a' + rng() % 2));
        }
    };
    auto random_rows = [&] {
        std::vector<Row> rows(rng() % 4);
        for (auto& r : rows) r = {random_cell(), random_cell()};
        return rows;
    };
    auto brute_equal = [](std::vector<Row> a, std::vector<Row> b) {
        if (a.size() != b.size()) return false;
        for (auto* rows : {&a, &b})
            for (auto& r : *rows)
                for (auto& c : r) c = normalize_cell(c);
        std::vector<bool> used(b.size(), false);
        for (const auto& ra : a) {
            bool found = false;
            for (std::size_t j = 0; j < b.size() && !found; ++j) {
                if (!used[j] && ra == b[j]) {
                    used[j] = true;
                    found = true;
                }
            }
            if (!found) return false;
        }
        return true;
    };
    for (int trial = 0; trial < 3000; ++trial) {
        const auto a = random_rows();
        const auto b = random_rows();
        const auto fa = normalize_rows(a, 2);
        const auto fb = normalize_rows(b, 2);
        ASSERT_EQ(fa == fb, brute_equal(a, b)) << "trial " << trial;
        ASSERT_EQ(fa.digest == fb.digest, fa == fb) << "trial " << trial;
    }
}

TEST(Registry, ManifestFormats) {
    testing::TempDir dir;
    testing::create_school_db(dir.path() / "a.sqlite");

    {
        std::ofstream(dir.path() / "dbs.txt") << "# comment\nschool a.sqlite\n\n";
        const auto reg = DatabaseRegistry::from_manifest(dir.path() / "dbs.txt");
        EXPECT_EQ(reg.size(), 1u);
        EXPECT_EQ(reg.at("school").path, dir.path() / "a.sqlite");
    }
    {
        std::ofstream(dir.path() / "dbs.json") << R"({"school": "a.sqlite"})";
        const auto reg = DatabaseRegistry::from_manifest(dir.path() / "dbs.json");
        EXPECT_NE(reg.find("school"), nullptr);
        EXPECT_EQ(reg.find("other"), nullptr);
    }
}

TEST(Registry, MissingManifestAndUnknownDb) {
    try {
        DatabaseRegistry::from_manifest("/nonexistent/manifest.json");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::MissingDatabaseManifest);
    }
    DatabaseRegistry reg;
    try {
        reg.at("x");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::UnknownDatabase);
    }
}

}  // namespace
}  // namespace slmsql
