#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "slmsql/consensus.hpp"
#include "slmsql/executor.hpp"
#include "slmsql/task.hpp"

namespace slmsql {

// ---- execution accuracy -------------------------------------------------

struct TaskResult {
    std::string task_id;
    Difficulty difficulty = Difficulty::Unknown;
    Stage stage = Stage::Fallback;
    bool correct = false;
    bool gold_failed = false;
    std::string gold_error;
};

struct DifficultyStats {
    std::size_t n = 0;
    std::size_t correct = 0;
    double ex() const { return n == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(n); }
};

struct EvalReport {
    std::size_t n_tasks = 0;
    std::size_t n_correct = 0;
    double ex_overall = 0.0;
    std::map<Difficulty, DifficultyStats> ex_by_difficulty;
    std::map<Stage, std::size_t> stage_histogram;
    std::size_t n_gold_failed = 0;
    std::int64_t gen_time_ms = 0;
    std::int64_t merge_time_ms = 0;
    std::int64_t wall_time_total_ms = 0;
    std::vector<TaskResult> tasks;  // in prediction order
};

struct EvalOptions {
    ExecutorOptions exec;
    /// Drop tasks whose gold SQL fails from the denominator instead of
    /// counting them as incorrect.
    bool exclude_gold_failures = false;
    std::size_t parallelism = 0;
};

/// A prediction is correct iff execution_reward(pred, gold, db) == 1.
/// Throws Error(UnknownTask) for predictions not in `corpus`.
EvalReport execution_accuracy(const std::vector<Prediction>& predictions,
                              const std::vector<TaskRecord>& corpus,
                              const DatabaseRegistry& registry, const EvalOptions& opts = {});

nlohmann::json to_json(const EvalReport& r);
/// Aligned table with Simple / Moderate / Challenge / All columns.
std::string render_report_table(const EvalReport& r);

// ---- test-time compute curves -------------------------------------------

/// 1 - C(n-c, k) / C(n, k). Throws Error(KExceedsN).
double pass_at_k(std::size_t n, std::size_t c, std::size_t k);

struct SampleCounts {
    std::size_t n = 0;
    std::size_t c = 0;
};
/// Mean of the unbiased estimator over tasks.
double pass_at_k(const std::vector<SampleCounts>& tasks, std::size_t k);

/// Execution fingerprints of one task's samples (nullopt = failed execution)
/// and of its gold query.
struct SampleVotes {
    std::vector<std::optional<std::string>> fingerprints;
    std::optional<std::string> gold;
};

struct ConsistencyOptions {
    std::size_t trials = 10000;
    std::uint64_t seed = 0;
    /// Enumerate every k-subset when C(n, k) is at most this.
    std::size_t exact_limit = 10000;
};

/// Winner of a vote over `indices` (ascending): most votes, ties to the
/// earliest index. nullopt when every sample failed.
std::optional<std::string> majority_fingerprint(const SampleVotes& task,
                                                const std::vector<std::size_t>& indices);

/// Fraction of tasks whose k-sample majority vote matches gold, averaged over
/// without-replacement subsets. Throws Error(KExceedsN).
double consistency_at_k(const std::vector<SampleVotes>& tasks, std::size_t k,
                        const ConsistencyOptions& opts = {});

struct CurvePoint {
    std::size_t k = 0;
    double pass_at_k = 0.0;
    double consistency_at_k = 0.0;
    std::optional<double> csc_at_k;
};

/// 1, 2, 4, ... up to n, always including n.
std::vector<std::size_t> default_ks(std::size_t n);

std::vector<CurvePoint> compute_curves(const std::vector<SampleVotes>& tasks,
                                       const std::vector<std::size_t>& ks,
                                       const ConsistencyOptions& opts = {});

nlohmann::json to_json(const std::vector<CurvePoint>& curve);
std::string render_curve_table(const std::vector<CurvePoint>& curve);

}  // namespace slmsql
