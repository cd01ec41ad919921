#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace slmsql {

enum class Difficulty { Simple, Moderate, Challenge, Unknown };

std::string_view to_string(Difficulty d) noexcept;

/// Accepts BIRD's labels ("simple", "moderate", "challenging"/"challenge");
/// anything else maps to Unknown.
Difficulty parse_difficulty(std::string_view label);

/// One Text-to-SQL problem.
struct TaskRecord {
    std::string task_id;
    std::string db_id;
    std::string question;
    std::optional<std::string> evidence;
    std::string schema_ddl;
    std::string gold_sql;
    Difficulty difficulty = Difficulty::Unknown;
};

/// A corpus line: the task plus an optional synthetic chain-of-thought.
struct CorpusEntry {
    TaskRecord task;
    std::optional<std::string> cot;
};

nlohmann::json to_json(const TaskRecord& task);
TaskRecord task_from_json(const nlohmann::json& j);

/// Reads a JSONL corpus. Blank lines are skipped. Throws Error(ParseError)
/// naming the line on malformed records, empty gold_sql, or duplicate task_id.
std::vector<CorpusEntry> load_corpus(const std::filesystem::path& path);
std::vector<CorpusEntry> parse_corpus(std::string_view jsonl);

/// Line-oriented JSONL helpers.
std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);
void write_jsonl(const std::filesystem::path& path, const std::vector<nlohmann::json>& rows);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace slmsql
