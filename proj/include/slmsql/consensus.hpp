#pragma once

#include <atomic>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "slmsql/executor.hpp"
#include "slmsql/prompts.hpp"
#include "slmsql/sampler.hpp"
#include "slmsql/task.hpp"

namespace slmsql {

/// Candidates that produced the same execution result.
struct CandidateGroup {
    ResultFingerprint fingerprint;
    std::vector<std::size_t> member_indices;  // strictly increasing
    std::size_t votes = 0;
    std::string representative_sql;  // SQL of the first member

    std::size_t first_index() const { return member_indices.front(); }
};

enum class VoteKind { Consistent, Contested, Abstain };

struct VoteOutcome {
    VoteKind kind = VoteKind::Abstain;
    std::optional<CandidateGroup> winner;
    std::optional<std::pair<CandidateGroup, CandidateGroup>> top_two;
};

/// `dominance_threshold` = 1.0 means only a unanimous vote short-circuits the
/// merge stage. Lower values accept a top group holding at least that share
/// of the successful votes.
struct VotePolicy {
    double dominance_threshold = 1.0;
};

/// One group per distinct successful fingerprint, sorted by (votes desc,
/// first member asc). Failed executions are left out. Throws
/// Error(LengthMismatch) if the lists are not aligned.
std::vector<CandidateGroup> group_candidates(const std::vector<ParsedCandidate>& candidates,
                                             const std::vector<ExecutionOutcome>& outcomes);

VoteOutcome decide_vote(const std::vector<CandidateGroup>& groups, const VotePolicy& policy = {});

/// Chooses among voted merge revisions: most votes; ties prefer the result of
/// the higher-vote draft, then of the other draft, then the earliest sample.
/// Returns an index into `merge_groups`, or nullopt when it is empty.
std::optional<std::size_t> pick_merge_winner(const std::vector<CandidateGroup>& merge_groups,
                                             const std::pair<CandidateGroup, CandidateGroup>& drafts);

enum class Stage { Sc, CscMerge, Fallback };
std::string_view to_string(Stage s) noexcept;
Stage parse_stage(std::string_view s);

struct Prediction {
    std::string task_id;
    std::string final_sql;
    Stage stage = Stage::Fallback;
    std::vector<std::size_t> gen_indices;    // generation candidates backing final_sql
    std::vector<std::size_t> merge_indices;  // merge samples backing final_sql
    std::size_t n_gen = 0;
    std::size_t n_merge = 0;
    std::vector<std::size_t> vote_histogram;        // generation group sizes, sorted desc
    std::vector<std::size_t> merge_vote_histogram;  // merge group sizes, sorted desc
    std::size_t n_exec_failed = 0;
    std::int64_t gen_time_ms = 0;
    std::int64_t merge_time_ms = 0;
    std::int64_t wall_time_ms = 0;
};

nlohmann::json to_json(const Prediction& p);
Prediction prediction_from_json(const nlohmann::json& j);

struct CscConfig {
    SamplingConfig gen;
    SamplingConfig merge;
    TruncationLimits limits;
    ExecutorOptions exec;
    VotePolicy vote;
    bool merge_enabled = true;
    std::size_t exec_parallelism = 0;

    CscConfig() { merge.n_samples = 8; }
};

/// Counters shared by concurrently running tasks.
struct CscMetrics {
    std::atomic<std::uint64_t> tasks{0};
    std::atomic<std::uint64_t> sc{0};
    std::atomic<std::uint64_t> csc_merge{0};
    std::atomic<std::uint64_t> fallback{0};
    std::atomic<std::uint64_t> gen_completions{0};
    std::atomic<std::uint64_t> merge_completions{0};
};

/// Generation-stage candidates, kept for dataset building and curves.
struct CscTrace {
    std::vector<ParsedCandidate> candidates;
    std::vector<ExecutionOutcome> outcomes;
};

/// Executes every candidate's extracted SQL; candidates without SQL become
/// error outcomes.
std::vector<ExecutionOutcome> execute_candidates(const DatabaseRef& db,
                                                 const std::vector<ParsedCandidate>& candidates,
                                                 const ExecutorOptions& opts,
                                                 std::size_t parallelism);

/// Two-stage corrective self-consistency for one task. Propagates endpoint
/// errors; SQL-level failures never throw.
Prediction run_csc(const TaskRecord& task, const DatabaseRegistry& registry,
                   CompletionSource& gen_source, CompletionSource& merge_source,
                   const CscConfig& cfg, CscMetrics* metrics = nullptr, CscTrace* trace = nullptr);

}  // namespace slmsql
