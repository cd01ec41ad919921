#include <gtest/gtest.h>

#include <random>

#include "slmsql/corpus.hpp"
#include "slmsql/error.hpp"
#include "support/oracles.hpp"

namespace slmsql {
namespace {

TaskRecord small_task() {
    TaskRecord t;
    t.task_id = "c1";
    t.db_id = "db";
    t.question = "How many rows?";
    t.schema_ddl = "CREATE TABLE t(x INTEGER);";
    t.gold_sql = "SELECT count(*) FROM t";
    return t;
}

std::optional<RejectRule> verdict(const std::string& cot, std::size_t limit = kDefaultPromptTokenLimit) {
    const auto v = filter_training_sample({small_task(), cot}, limit);
    if (std::holds_alternative<Accept>(v)) return std::nullopt;
    return std::get<Reject>(v).rule;
}

TEST(Filter, AcceptsCleanSample) {
    EXPECT_EQ(verdict("We count rows.\n```sql\nSELECT count(*) FROM t\n```"), std::nullopt);
    EXPECT_EQ(verdict("<think>count</think>\n<answer>SELECT count(*) FROM t</answer>"), std::nullopt);
}

TEST(Filter, Rules) {
    EXPECT_EQ(verdict("Insert it.\n```sql\nINSERT INTO t VALUES (1)\n```"), RejectRule::NoSelect);
    EXPECT_EQ(verdict("no query at all"), RejectRule::NoSelect);
    EXPECT_EQ(verdict("Try SELECT x FROM t first.\n\nSo the answer is SELECT   x\nFROM t"),
              RejectRule::DuplicateSqlInCot);
    EXPECT_EQ(verdict("```sql\nSELECT x FROM t -- note\n```"), RejectRule::CommentMarker);
}

TEST(Filter, RuleOrderDuplicateBeforeComment) {
    EXPECT_EQ(verdict("```sql\nSELECT x -- a\n```\n```sql\nSELECT x -- a\n```"),
              RejectRule::DuplicateSqlInCot);
}

TEST(Filter, PromptLengthBoundary) {
    EXPECT_EQ(estimate_prompt_tokens(""), 0u);
    EXPECT_EQ(estimate_prompt_tokens("SELECT"), 2u);
    EXPECT_EQ(estimate_prompt_tokens("\xC3\xA9\xC3\xA9\xC3\xA9\xC3\xA9"), 1u);  // 4 code points

    auto task = small_task();
    task.question.clear();
    const std::size_t base = render_generation_prompt(prompt_input(task)).size();
    const std::string cot = "```sql\nSELECT 1\n```";

    task.question = std::string(28000 - base, 'q');
    EXPECT_EQ(render_generation_prompt(prompt_input(task)).size(), 28000u);
    EXPECT_TRUE(std::holds_alternative<Accept>(filter_training_sample({task, cot})));

    task.question.push_back('q');
    const auto v = filter_training_sample({task, cot});
    ASSERT_TRUE(std::holds_alternative<Reject>(v));
    EXPECT_EQ(std::get<Reject>(v).rule, RejectRule::PromptTooLong);
}

TEST(Filter, RuleNames) {
    EXPECT_EQ(to_string(RejectRule::NoSelect), "no_select");
    EXPECT_EQ(to_string(RejectRule::DuplicateSqlInCot), "duplicate_sql_in_cot");
    EXPECT_EQ(to_string(RejectRule::CommentMarker), "comment_marker");
    EXPECT_EQ(to_string(RejectRule::PromptTooLong), "prompt_too_long");
}

TEST(Normalize, DropsTrailingProse) {
    const auto s = normalize_cot(
        {small_task(), "First join t1 with t2.\n```sql\nSELECT x FROM t\n```\nThis query returns x."});
    EXPECT_EQ(s.think, "First join t1 with t2.");
    EXPECT_EQ(s.answer_sql, "SELECT x FROM t");
    EXPECT_EQ(s.rendered, "<think>First join t1 with t2.</think>\n<answer>SELECT x FROM t</answer>");
}

TEST(Normalize, Idempotent) {
    const auto once = normalize_cot({small_task(), "Reason.\n```sql\nSELECT x FROM t\n```"});
    const auto twice = normalize_cot({small_task(), once.rendered});
    EXPECT_EQ(twice.rendered, once.rendered);
}

TEST(Normalize, RenderedParsesBack) {
    const auto s = normalize_cot({small_task(), "Plan it out.\nSELECT a, b FROM t WHERE a > 1"});
    const auto p = parse_model_output(s.rendered);
    EXPECT_TRUE(p.format_ok);
    EXPECT_EQ(p.answer_sql, s.answer_sql);
    EXPECT_EQ(p.think, s.think);
}

TEST(Normalize, NoSql) {
    try {
        normalize_cot({small_task(), "nothing"});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NoSqlFound);
    }
}

ExecutionOutcome value_outcome(int v) {
    return ExecutionOutcome::success(normalize_rows({Row{Cell{std::int64_t{v}}}}));
}

TEST(MergeSample, TopTwoWithGoldLabel) {
    // A, A, A, A, B, B, C, error; gold = A.
    std::vector<ParsedCandidate> c;
    std::vector<ExecutionOutcome> o;
    testing::make_labeled({1, 1, 1, 1, 2, 2, 3, std::nullopt}, c, o);
    const auto s = build_merge_training_sample(small_task(), c, o, value_outcome(1));
    ASSERT_TRUE(s);
    EXPECT_EQ(s->draft_a, *c[0].answer_sql);
    EXPECT_EQ(s->draft_b, *c[4].answer_sql);
    EXPECT_EQ(s->label_sql, *c[0].answer_sql);
    EXPECT_EQ(s->exec_a, "[(1,)]");
    EXPECT_EQ(s->exec_b, "[(2,)]");

    const auto j = to_json(*s);
    EXPECT_NE(j.at("prompt").get<std::string>().find(s->draft_b), std::string::npos);

    // Gold = B picks draft B as the label.
    const auto sb = build_merge_training_sample(small_task(), c, o, value_outcome(2));
    ASSERT_TRUE(sb);
    EXPECT_EQ(sb->label_sql, *c[4].answer_sql);
}

TEST(MergeSample, SkippedCases) {
    std::vector<ParsedCandidate> c;
    std::vector<ExecutionOutcome> o;
    testing::make_labeled({1, 1, std::nullopt}, c, o);
    EXPECT_FALSE(build_merge_training_sample(small_task(), c, o, value_outcome(1)));

    testing::make_labeled({1, 1, 2, 3}, c, o);
    EXPECT_FALSE(build_merge_training_sample(small_task(), c, o, value_outcome(3)));
    EXPECT_FALSE(build_merge_training_sample(small_task(), c, o,
                                             ExecutionOutcome::error(ExecErrorKind::Runtime, "x")));

    o.pop_back();
    EXPECT_THROW(build_merge_training_sample(small_task(), c, o, value_outcome(1)), Error);
}

TEST(MergeSample, RandomAgainstOracle) {
    std::mt19937 rng(3);
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<std::optional<int>> labels;
        const std::size_t n = rng() % 12;
        for (std::size_t i = 0; i < n; ++i) {
            const int r = static_cast<int>(rng() % 5);
            labels.push_back(r == 4 ? std::nullopt : std::optional<int>(r));
        }
        const int gold = static_cast<int>(rng() % 4);

        // Oracle: first two labels by (votes desc, first occurrence asc).
        std::vector<std::pair<int, std::size_t>> order;  // label, first index
        for (std::size_t i = 0; i < n; ++i) {
            if (!labels[i]) continue;
            bool seen = false;
            for (const auto& [l, f] : order) seen |= (l == *labels[i]);
            if (!seen) order.push_back({*labels[i], i});
        }
        std::stable_sort(order.begin(), order.end(), [&](const auto& x, const auto& y) {
            return testing::count_label(labels, x.first) > testing::count_label(labels, y.first);
        });

        std::vector<ParsedCandidate> c;
        std::vector<ExecutionOutcome> o;
        testing::make_labeled(labels, c, o);
        const auto s = build_merge_training_sample(small_task(), c, o, value_outcome(gold));
        const bool expect = order.size() >= 2 && (order[0].first == gold || order[1].first == gold);
        ASSERT_EQ(s.has_value(), expect);
        if (!s) continue;
        ASSERT_EQ(s->draft_a, *c[order[0].second].answer_sql);
        ASSERT_EQ(s->draft_b, *c[order[1].second].answer_sql);
        const std::size_t label_idx = order[0].first == gold ? order[0].second : order[1].second;
        ASSERT_EQ(s->label_sql, *c[label_idx].answer_sql);
    }
}

}  // namespace
}  // namespace slmsql
