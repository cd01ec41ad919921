#include "slmsql/executor.hpp"

#include <sqlite3.h>

#include <atomic>
#include <cctype>
#include <fstream>
#include <memory>
#include <thread>

#include <nlohmann/json.hpp>

#include "slmsql/error.hpp"
#include "slmsql/task.hpp"
#include "slmsql/text.hpp"

namespace slmsql {

namespace {

using Clock = std::chrono::steady_clock;

std::chrono::milliseconds since(Clock::time_point start) {
    return std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start);
}

struct ConnectionCloser {
    void operator()(sqlite3* db) const { sqlite3_close_v2(db); }
};
struct StatementFinalizer {
    void operator()(sqlite3_stmt* s) const { sqlite3_finalize(s); }
};
using Connection = std::unique_ptr<sqlite3, ConnectionCloser>;
using Statement = std::unique_ptr<sqlite3_stmt, StatementFinalizer>;

int progress_callback(void* arg) {
    const auto* deadline = static_cast<const Clock::time_point*>(arg);
    return Clock::now() >= *deadline ? 1 : 0;
}

// Only reads are authorized; everything else fails at prepare time.
int authorizer(void*, int action, const char*, const char*, const char*, const char*) {
    switch (action) {
        case SQLITE_SELECT:
        case SQLITE_READ:
        case SQLITE_FUNCTION:
        case SQLITE_RECURSIVE:
            return SQLITE_OK;
        default:
            return SQLITE_DENY;
    }
}

ExecErrorKind classify(int code, std::string_view message) {
    const int primary = code & 0xff;
    if (primary == SQLITE_AUTH || primary == SQLITE_READONLY)
        return ExecErrorKind::ReadOnlyViolation;
    const std::string msg = text::to_lower(message);
    if (msg.find("syntax error") != std::string::npos ||
        msg.find("incomplete input") != std::string::npos ||
        msg.find("unrecognized token") != std::string::npos)
        return ExecErrorKind::Syntax;
    if (msg.find("no such") != std::string::npos) return ExecErrorKind::MissingObject;
    return ExecErrorKind::Runtime;
}

// First keyword after whitespace, comments and opening parentheses.
std::string leading_keyword(std::string_view sql) {
    std::size_t i = 0;
    while (i < sql.size()) {
        const char c = sql[i];
        if (std::isspace(static_cast<unsigned char>(c)) || c == '(') {
            ++i;
        } else if (sql.compare(i, 2, "--") == 0) {
            const auto nl = sql.find('\n', i);
            i = nl == std::string_view::npos ? sql.size() : nl + 1;
        } else if (sql.compare(i, 2, "/*") == 0) {
            const auto end = sql.find("*/", i + 2);
            i = end == std::string_view::npos ? sql.size() : end + 2;
        } else {
            break;
        }
    }
    std::size_t j = i;
    while (j < sql.size() && (std::isalpha(static_cast<unsigned char>(sql[j])) || sql[j] == '_'))
        ++j;
    return text::to_lower(sql.substr(i, j - i));
}

bool only_terminators(std::string_view tail) {
    for (char c : tail) {
        if (c != ';' && !std::isspace(static_cast<unsigned char>(c))) return false;
    }
    return true;
}

Cell read_cell(sqlite3_stmt* stmt, int col) {
    switch (sqlite3_column_type(stmt, col)) {
        case SQLITE_INTEGER:
            return static_cast<std::int64_t>(sqlite3_column_int64(stmt, col));
        case SQLITE_FLOAT:
            return sqlite3_column_double(stmt, col);
        case SQLITE_TEXT: {
            const auto* p = reinterpret_cast<const char*>(sqlite3_column_text(stmt, col));
            return std::string(p, static_cast<std::size_t>(sqlite3_column_bytes(stmt, col)));
        }
        case SQLITE_BLOB: {
            const auto* p = static_cast<const std::uint8_t*>(sqlite3_column_blob(stmt, col));
            return Blob(p, p + sqlite3_column_bytes(stmt, col));
        }
        default:
            return std::monostate{};
    }
}

}  // namespace

std::string_view to_string(ExecStatus s) noexcept {
    switch (s) {
        case ExecStatus::Success: return "success";
        case ExecStatus::Error: return "error";
        case ExecStatus::Timeout: return "timeout";
    }
    return "error";
}

std::string_view to_string(ExecErrorKind k) noexcept {
    switch (k) {
        case ExecErrorKind::Syntax: return "syntax";
        case ExecErrorKind::MissingObject: return "missing_object";
        case ExecErrorKind::ReadOnlyViolation: return "read_only_violation";
        case ExecErrorKind::Runtime: return "runtime";
    }
    return "runtime";
}

ExecutionOutcome ExecutionOutcome::success(ResultFingerprint fp, std::chrono::milliseconds elapsed) {
    ExecutionOutcome o;
    o.status = ExecStatus::Success;
    o.fingerprint = std::move(fp);
    o.elapsed = elapsed;
    return o;
}

ExecutionOutcome ExecutionOutcome::error(ExecErrorKind kind, std::string message,
                                         std::chrono::milliseconds elapsed) {
    ExecutionOutcome o;
    o.status = ExecStatus::Error;
    o.error_kind = kind;
    o.message = std::move(message);
    o.elapsed = elapsed;
    return o;
}

ExecutionOutcome ExecutionOutcome::timeout(std::chrono::milliseconds elapsed) {
    ExecutionOutcome o;
    o.status = ExecStatus::Timeout;
    o.message = "statement exceeded its time limit";
    o.elapsed = elapsed;
    return o;
}

bool results_equivalent(const ExecutionOutcome& a, const ExecutionOutcome& b) {
    return a.ok() && b.ok() && a.fingerprint && b.fingerprint && *a.fingerprint == *b.fingerprint;
}

void DatabaseRegistry::add(std::string db_id, std::filesystem::path path) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw Error(ErrorCode::Io, "database file for '" + db_id + "' is not readable: " +
                                               path.string());
    DatabaseRef ref{db_id, std::move(path)};
    dbs_.insert_or_assign(std::move(db_id), std::move(ref));
}

const DatabaseRef* DatabaseRegistry::find(std::string_view db_id) const {
    auto it = dbs_.find(db_id);
    return it == dbs_.end() ? nullptr : &it->second;
}

const DatabaseRef& DatabaseRegistry::at(std::string_view db_id) const {
    if (const auto* ref = find(db_id)) return *ref;
    throw Error(ErrorCode::UnknownDatabase, "unknown db_id '" + std::string(db_id) + "'");
}

DatabaseRegistry DatabaseRegistry::from_manifest(const std::filesystem::path& manifest) {
    if (!std::filesystem::exists(manifest))
        throw Error(ErrorCode::MissingDatabaseManifest,
                    "database manifest not found: " + manifest.string());
    const std::string content = read_file(manifest);
    const auto base = manifest.parent_path();
    auto resolve = [&](const std::string& p) {
        std::filesystem::path path(p);
        return path.is_absolute() ? path : base / path;
    };

    DatabaseRegistry reg;
    const auto body = text::trim(content);
    if (!body.empty() && body.front() == '{') {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(body);
        } catch (const nlohmann::json::exception& ex) {
            throw Error(ErrorCode::ParseError, "manifest " + manifest.string() + ": " + ex.what());
        }
        for (const auto& [id, path] : j.items()) {
            if (!path.is_string())
                throw Error(ErrorCode::ParseError, "manifest entry '" + id + "' is not a path");
            reg.add(id, resolve(path.get<std::string>()));
        }
        return reg;
    }

    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos < content.size()) {
        std::size_t nl = content.find('\n', pos);
        if (nl == std::string::npos) nl = content.size();
        std::string_view line = text::trim(std::string_view(content).substr(pos, nl - pos));
        pos = nl + 1;
        ++line_no;
        if (line.empty() || line.front() == '#') continue;
        const auto sep = line.find_first_of(" \t");
        if (sep == std::string_view::npos)
            throw Error(ErrorCode::ParseError,
                        "manifest line " + std::to_string(line_no) + ": expected '<db_id> <path>'");
        reg.add(std::string(line.substr(0, sep)),
                resolve(std::string(text::trim(line.substr(sep)))));
    }
    return reg;
}

ExecutionOutcome execute_sql(const DatabaseRef& db, std::string_view sql,
                             const ExecutorOptions& opts) {
    const auto start = Clock::now();
    if (text::trim(sql).empty())
        return ExecutionOutcome::error(ExecErrorKind::Syntax, "empty statement");

    sqlite3* raw = nullptr;
    const int open_rc = sqlite3_open_v2(db.path.c_str(), &raw,
                                        SQLITE_OPEN_READONLY | SQLITE_OPEN_NOMUTEX, nullptr);
    Connection conn(raw);
    if (open_rc != SQLITE_OK) {
        std::string msg = raw ? sqlite3_errmsg(raw) : "cannot open database";
        return ExecutionOutcome::error(ExecErrorKind::Runtime, "open failed: " + msg, since(start));
    }
    sqlite3_extended_result_codes(conn.get(), 1);
    sqlite3_set_authorizer(conn.get(), authorizer, nullptr);

    const auto deadline = start + opts.timeout;
    sqlite3_progress_handler(conn.get(), 1000, progress_callback,
                             const_cast<Clock::time_point*>(&deadline));

    sqlite3_stmt* stmt_raw = nullptr;
    const char* tail = nullptr;
    const int prep_rc = sqlite3_prepare_v2(conn.get(), sql.data(), static_cast<int>(sql.size()),
                                           &stmt_raw, &tail);
    Statement stmt(stmt_raw);
    if (prep_rc != SQLITE_OK) {
        if ((prep_rc & 0xff) == SQLITE_INTERRUPT) return ExecutionOutcome::timeout(since(start));
        const std::string msg = sqlite3_errmsg(conn.get());
        return ExecutionOutcome::error(classify(prep_rc, msg), msg, since(start));
    }
    if (!stmt) return ExecutionOutcome::error(ExecErrorKind::Syntax, "empty statement", since(start));

    const std::string keyword = leading_keyword(sql);
    if ((keyword != "select" && keyword != "with") || !sqlite3_stmt_readonly(stmt.get())) {
        return ExecutionOutcome::error(ExecErrorKind::ReadOnlyViolation,
                                       "only SELECT/WITH queries may be executed", since(start));
    }
    const std::string_view rest(tail, static_cast<std::size_t>(sql.data() + sql.size() - tail));
    if (!only_terminators(rest)) {
        return ExecutionOutcome::error(ExecErrorKind::Runtime,
                                       "multiple statements are not supported", since(start));
    }

    const int columns = sqlite3_column_count(stmt.get());
    std::vector<Row> rows;
    for (;;) {
        const int rc = sqlite3_step(stmt.get());
        if (rc == SQLITE_DONE) break;
        if (rc == SQLITE_ROW) {
            if (rows.size() >= opts.max_result_rows) {
                return ExecutionOutcome::error(
                    ExecErrorKind::Runtime,
                    "result exceeds " + std::to_string(opts.max_result_rows) + " rows", since(start));
            }
            Row row;
            row.reserve(static_cast<std::size_t>(columns));
            for (int c = 0; c < columns; ++c) row.push_back(read_cell(stmt.get(), c));
            rows.push_back(std::move(row));
            if (Clock::now() >= deadline) return ExecutionOutcome::timeout(since(start));
            continue;
        }
        if ((rc & 0xff) == SQLITE_INTERRUPT) return ExecutionOutcome::timeout(since(start));
        const std::string msg = sqlite3_errmsg(conn.get());
        return ExecutionOutcome::error(classify(rc, msg), msg, since(start));
    }
    auto fp = normalize_rows(std::move(rows), static_cast<std::size_t>(columns),
                             opts.order_sensitive);
    return ExecutionOutcome::success(std::move(fp), since(start));
}

std::vector<ExecutionOutcome> execute_batch(const DatabaseRef& db,
                                            const std::vector<std::string>& sqls,
                                            const ExecutorOptions& opts, std::size_t parallelism) {
    std::vector<ExecutionOutcome> out(sqls.size());
    if (parallelism == 0) parallelism = std::max(1u, std::thread::hardware_concurrency());
    parallelism = std::min(parallelism, sqls.size());
    if (parallelism <= 1) {
        for (std::size_t i = 0; i < sqls.size(); ++i) out[i] = execute_sql(db, sqls[i], opts);
        return out;
    }
    std::atomic<std::size_t> next{0};
    {
        std::vector<std::jthread> workers;
        workers.reserve(parallelism);
        for (std::size_t w = 0; w < parallelism; ++w) {
            workers.emplace_back([&] {
                for (std::size_t i = next++; i < sqls.size(); i = next++)
                    out[i] = execute_sql(db, sqls[i], opts);
            });
        }
    }
    return out;
}

}  // namespace slmsql
