#include "slmsql/task.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

#include "slmsql/error.hpp"
#include "slmsql/text.hpp"

namespace slmsql {

const char* to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidConfig: return "invalid_config";
        case ErrorCode::MissingDatabaseManifest: return "missing_database_manifest";
        case ErrorCode::UnknownDatabase: return "unknown_db_id";
        case ErrorCode::UnknownTask: return "unknown_task";
        case ErrorCode::LengthMismatch: return "length_mismatch";
        case ErrorCode::RaggedRows: return "ragged_rows";
        case ErrorCode::NoSqlFound: return "no_sql_found";
        case ErrorCode::KExceedsN: return "k_exceeds_n";
        case ErrorCode::EndpointUnavailable: return "endpoint_unavailable";
        case ErrorCode::AuthRejected: return "auth_rejected";
        case ErrorCode::GoldExecutionFailed: return "gold_execution_failed";
        case ErrorCode::ParseError: return "parse_error";
        case ErrorCode::Io: return "io_error";
    }
    return "unknown";
}

std::string_view to_string(Difficulty d) noexcept {
    switch (d) {
        case Difficulty::Simple: return "simple";
        case Difficulty::Moderate: return "moderate";
        case Difficulty::Challenge: return "challenge";
        case Difficulty::Unknown: return "unknown";
    }
    return "unknown";
}

Difficulty parse_difficulty(std::string_view label) {
    const std::string l = text::to_lower(text::trim(label));
    if (l == "simple") return Difficulty::Simple;
    if (l == "moderate") return Difficulty::Moderate;
    if (l == "challenge" || l == "challenging") return Difficulty::Challenge;
    return Difficulty::Unknown;
}

nlohmann::json to_json(const TaskRecord& task) {
    nlohmann::json j = {
        {"task_id", task.task_id},
        {"db_id", task.db_id},
        {"question", task.question},
        {"schema_ddl", task.schema_ddl},
        {"gold_sql", task.gold_sql},
        {"difficulty", std::string(to_string(task.difficulty))},
    };
    if (task.evidence) j["evidence"] = *task.evidence;
    return j;
}

namespace {

std::string required_string(const nlohmann::json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string())
        throw Error(ErrorCode::ParseError, std::string("missing string field '") + key + "'");
    return it->get<std::string>();
}

std::optional<std::string> optional_string(const nlohmann::json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    if (!it->is_string())
        throw Error(ErrorCode::ParseError, std::string("field '") + key + "' must be a string");
    return it->get<std::string>();
}

}  // namespace

TaskRecord task_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw Error(ErrorCode::ParseError, "record is not a JSON object");
    TaskRecord t;
    // BIRD dumps use integer question ids.
    if (auto it = j.find("task_id"); it != j.end() && it->is_number_integer())
        t.task_id = std::to_string(it->get<long long>());
    else
        t.task_id = required_string(j, "task_id");
    t.db_id = required_string(j, "db_id");
    t.question = required_string(j, "question");
    t.evidence = optional_string(j, "evidence");
    t.schema_ddl = optional_string(j, "schema_ddl").value_or("");
    t.gold_sql = required_string(j, "gold_sql");
    if (text::trim(t.gold_sql).empty())
        throw Error(ErrorCode::ParseError, "gold_sql is empty for task " + t.task_id);
    if (auto d = optional_string(j, "difficulty")) t.difficulty = parse_difficulty(*d);
    return t;
}

std::vector<CorpusEntry> parse_corpus(std::string_view jsonl) {
    std::vector<CorpusEntry> out;
    std::unordered_set<std::string> seen;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= jsonl.size()) {
        std::size_t nl = jsonl.find('\n', pos);
        if (nl == std::string_view::npos) nl = jsonl.size();
        const auto line = text::trim(jsonl.substr(pos, nl - pos));
        ++line_no;
        pos = nl + 1;
        if (line.empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            CorpusEntry e{task_from_json(j), optional_string(j, "cot")};
            if (!seen.insert(e.task.task_id).second)
                throw Error(ErrorCode::ParseError, "duplicate task_id " + e.task.task_id);
            out.push_back(std::move(e));
        } catch (const nlohmann::json::exception& ex) {
            throw Error(ErrorCode::ParseError,
                        "corpus line " + std::to_string(line_no) + ": " + ex.what());
        } catch (const Error& ex) {
            throw Error(ErrorCode::ParseError,
                        "corpus line " + std::to_string(line_no) + ": " + ex.what());
        }
    }
    return out;
}

std::vector<CorpusEntry> load_corpus(const std::filesystem::path& path) {
    return parse_corpus(read_file(path));
}

std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path) {
    const std::string content = read_file(path);
    std::vector<nlohmann::json> rows;
    std::istringstream in(content);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        try {
            rows.push_back(nlohmann::json::parse(line));
        } catch (const nlohmann::json::exception& ex) {
            throw Error(ErrorCode::ParseError, path.string() + ":" + std::to_string(line_no) +
                                                   ": " + ex.what());
        }
    }
    return rows;
}

void write_jsonl(const std::filesystem::path& path, const std::vector<nlohmann::json>& rows) {
    std::string out;
    for (const auto& r : rows) {
        out += r.dump();
        out += '\n';
    }
    write_file(path, out);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error(ErrorCode::Io, "write failed: " + path.string());
}

}  // namespace slmsql
