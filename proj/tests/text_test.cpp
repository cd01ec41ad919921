#include <gtest/gtest.h>

#include "slmsql/text.hpp"

namespace slmsql::text {
namespace {

TEST(Text, CollapseWhitespace) {
    EXPECT_EQ(collapse_whitespace("  SELECT\n  a\t FROM t  "), "SELECT a FROM t");
    EXPECT_EQ(collapse_whitespace(""), "");
}

TEST(Text, StartsWithKeywordNeedsWordBoundary) {
    EXPECT_TRUE(starts_with_keyword("  select a", "SELECT"));
    EXPECT_TRUE(starts_with_keyword("SELECT", "select"));
    EXPECT_FALSE(starts_with_keyword("SELECTION", "select"));
    EXPECT_FALSE(starts_with_keyword("WITH x AS (SELECT 1) SELECT * FROM x", "select"));
}

TEST(Text, CountOccurrencesIsNonOverlapping) {
    EXPECT_EQ(count_occurrences("aaaa", "aa"), 2u);
    EXPECT_EQ(count_occurrences("abc", ""), 0u);
}

TEST(Text, StripFences) {
    EXPECT_EQ(strip_markdown_fences("```sql\nSELECT 1\n```"), "SELECT 1");
    EXPECT_EQ(strip_markdown_fences("```SELECT 1```"), "SELECT 1");
    EXPECT_EQ(strip_markdown_fences("SELECT `col name` FROM t"), "SELECT `col name` FROM t");
}

TEST(Text, LocateFinalSqlPrefersLastFence) {
    const std::string cot = "Draft:\n```sql\nSELECT 1\n```\nBetter:\n```sql\nSELECT 2\n```\nDone.";
    const auto span = locate_final_sql(cot);
    ASSERT_TRUE(span);
    EXPECT_TRUE(span->fenced);
    EXPECT_EQ(span->sql, "SELECT 2");
    EXPECT_EQ(cot.substr(span->begin, 3), "```");
    EXPECT_EQ(cot.substr(span->end), "\nDone.");
}

TEST(Text, LocateFinalSqlUnfencedSkipsSubqueries) {
    const std::string s = "So the answer is SELECT a FROM t WHERE b IN (SELECT c FROM u);\nThat's it.";
    const auto span = locate_final_sql(s);
    ASSERT_TRUE(span);
    EXPECT_FALSE(span->fenced);
    EXPECT_EQ(span->sql, "SELECT a FROM t WHERE b IN (SELECT c FROM u)");
}

TEST(Text, LocateFinalSqlStopsAtBlankLineAndTags) {
    auto span = locate_final_sql("x\nSELECT a\nFROM t\n\nThis explains it");
    ASSERT_TRUE(span);
    EXPECT_EQ(span->sql, "SELECT a\nFROM t");
    span = locate_final_sql("<answer>SELECT 1</answer>");
    ASSERT_TRUE(span);
    EXPECT_EQ(span->sql, "SELECT 1");
    EXPECT_FALSE(locate_final_sql("no query here, just selections"));
}

TEST(Text, Utf8PrefixNeverSplitsCodePoints) {
    const std::string s = "a\xC3\xA9";  // "aé"
    EXPECT_EQ(utf8_prefix(s, 2), "a");
    EXPECT_EQ(utf8_prefix(s, 3), s);
}

}  // namespace
}  // namespace slmsql::text
