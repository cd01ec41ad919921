#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace slmsql {

using Blob = std::vector<std::uint8_t>;

/// One result cell. monostate is SQL NULL.
using Cell = std::variant<std::monostate, std::int64_t, double, std::string, Blob>;
using Row = std::vector<Cell>;

/// Reals rounded to 6 decimal places; integral-valued reals collapse to integers.
Cell normalize_cell(const Cell& cell);

/// Canonical total order: NULL < numbers < text < blob; numbers by value,
/// text and blobs bytewise. Returns <0, 0, >0.
int compare_cells(const Cell& a, const Cell& b);
int compare_rows(const Row& a, const Row& b);

/// Order-insensitive (by default) canonical form of a result set.
struct ResultFingerprint {
    std::size_t column_count = 0;
    std::vector<Row> rows;  // normalized; sorted unless `ordered`
    bool ordered = false;
    std::string canonical;  // injective byte encoding of (column_count, ordered, rows)
    std::uint64_t digest = 0;  // FNV-1a 64 over `canonical`

    std::string digest_hex() const;

    friend bool operator==(const ResultFingerprint& a, const ResultFingerprint& b) {
        return a.column_count == b.column_count && a.ordered == b.ordered &&
               a.canonical == b.canonical;
    }
};

/// Normalizes cells and sorts rows into the canonical multiset order. With
/// `order_sensitive` the original row order is kept. Throws Error(RaggedRows)
/// if rows differ in arity. `column_count` is taken from the rows when
/// non-empty, else from `declared_columns`.
ResultFingerprint normalize_rows(std::vector<Row> rows, std::size_t declared_columns = 0,
                                 bool order_sensitive = false);

enum class ExecStatus { Success, Error, Timeout };
enum class ExecErrorKind { Syntax, MissingObject, ReadOnlyViolation, Runtime };

std::string_view to_string(ExecStatus s) noexcept;
std::string_view to_string(ExecErrorKind k) noexcept;

struct ExecutionOutcome {
    ExecStatus status = ExecStatus::Error;
    std::optional<ResultFingerprint> fingerprint;
    std::optional<ExecErrorKind> error_kind;
    std::string message;
    std::chrono::milliseconds elapsed{0};

    bool ok() const noexcept { return status == ExecStatus::Success; }

    static ExecutionOutcome success(ResultFingerprint fp, std::chrono::milliseconds elapsed = {});
    static ExecutionOutcome error(ExecErrorKind kind, std::string message,
                                  std::chrono::milliseconds elapsed = {});
    static ExecutionOutcome timeout(std::chrono::milliseconds elapsed);
};

/// True iff both executions succeeded with equal fingerprints. Errors and
/// timeouts never match anything, themselves included.
bool results_equivalent(const ExecutionOutcome& a, const ExecutionOutcome& b);

struct DatabaseRef {
    std::string db_id;
    std::filesystem::path path;
};

/// db_id -> SQLite file. Files are checked for readability on registration.
class DatabaseRegistry {
public:
    void add(std::string db_id, std::filesystem::path path);
    const DatabaseRef* find(std::string_view db_id) const;
    /// Throws Error(UnknownDatabase).
    const DatabaseRef& at(std::string_view db_id) const;
    std::size_t size() const noexcept { return dbs_.size(); }
    const std::map<std::string, DatabaseRef, std::less<>>& entries() const noexcept { return dbs_; }

    /// Manifest is either a JSON object {"db_id": "path", ...} or lines of
    /// "db_id path" ('#' starts a comment). Relative paths resolve against
    /// the manifest's directory. Throws Error(MissingDatabaseManifest) when
    /// the manifest itself does not exist.
    static DatabaseRegistry from_manifest(const std::filesystem::path& manifest);

private:
    std::map<std::string, DatabaseRef, std::less<>> dbs_;
};

struct ExecutorOptions {
    std::chrono::milliseconds timeout{30000};
    bool order_sensitive = false;
    std::size_t max_result_rows = 1'000'000;
};

/// Runs one statement read-only under a wall-clock deadline. Never throws for
/// SQL-level problems; those come back as error or timeout outcomes.
ExecutionOutcome execute_sql(const DatabaseRef& db, std::string_view sql,
                             const ExecutorOptions& opts = {});

/// Executes each statement on its own connection, up to `parallelism` at once.
/// Empty statements yield error(syntax) without touching the database.
std::vector<ExecutionOutcome> execute_batch(const DatabaseRef& db,
                                            const std::vector<std::string>& sqls,
                                            const ExecutorOptions& opts = {},
                                            std::size_t parallelism = 0);

}  // namespace slmsql
