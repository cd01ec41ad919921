#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

// Small string helpers shared by the corpus, sampler and executor modules.
namespace slmsql::text {

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);

/// Collapses every run of whitespace to a single space and trims the ends.
std::string collapse_whitespace(std::string_view s);

/// True when `s`, after leading whitespace, starts with `keyword` as a whole
/// word (case-insensitive).
bool starts_with_keyword(std::string_view s, std::string_view keyword);

/// Number of non-overlapping occurrences of `needle` in `haystack`.
std::size_t count_occurrences(std::string_view haystack, std::string_view needle);

/// Removes ``` fences (with optional language tag) wrapping a SQL snippet.
std::string strip_markdown_fences(std::string_view s);

/// Location of the final SQL statement inside free-form model text.
struct SqlSpan {
    std::size_t begin = 0;  // start of the region that holds the SQL (fence opener if fenced)
    std::size_t end = 0;    // one past the region (after the closing fence if fenced)
    std::string sql;        // statement text, trimmed, fences removed
    bool fenced = false;
};

/// Finds the final SQL statement in `s`: the last non-empty fenced code block
/// when one exists, otherwise the last top-level statement that starts with
/// SELECT. Returns nullopt when neither exists.
std::optional<SqlSpan> locate_final_sql(std::string_view s);

/// Cuts `s` to at most `max_bytes` bytes without splitting a UTF-8 sequence.
std::string_view utf8_prefix(std::string_view s, std::size_t max_bytes);

}  // namespace slmsql::text
