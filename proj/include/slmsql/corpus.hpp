#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "slmsql/executor.hpp"
#include "slmsql/prompts.hpp"
#include "slmsql/sampler.hpp"
#include "slmsql/task.hpp"

namespace slmsql {

inline constexpr std::size_t kDefaultPromptTokenLimit = 7000;

struct RawTrainingSample {
    TaskRecord task;
    std::string cot;
};

struct NormalizedSample {
    TaskRecord task;
    std::string think;
    std::string answer_sql;
    std::string rendered;  // <think>...</think>\n<answer>...</answer>
};

/// Rejection rules, in the order they are checked.
enum class RejectRule { NoSelect, DuplicateSqlInCot, CommentMarker, PromptTooLong };
std::string_view to_string(RejectRule r) noexcept;

struct Accept {};
struct Reject {
    RejectRule rule;
};
using FilterVerdict = std::variant<Accept, Reject>;

/// ceil(chars / 4), counting UTF-8 code points.
std::size_t estimate_prompt_tokens(std::string_view text);

/// The final SQL of a chain-of-thought, or nullopt when none can be located.
std::optional<std::string> final_sql_of(std::string_view cot);

/// First matching rule wins. Total: never throws.
FilterVerdict filter_training_sample(const RawTrainingSample& sample,
                                     std::size_t token_limit = kDefaultPromptTokenLimit);

/// Keeps the text before the final SQL as the think block and the SQL (fences
/// stripped) as the answer; anything after the SQL is dropped. Throws
/// Error(NoSqlFound).
NormalizedSample normalize_cot(const RawTrainingSample& sample);

std::string render_think_answer(std::string_view think, std::string_view answer_sql);

struct MergeTrainingSample {
    TaskRecord task;
    std::string draft_a;
    std::string exec_a;
    std::string draft_b;
    std::string exec_b;
    std::string label_sql;
};

/// Builds a merge-revision sample from the two highest-vote result groups.
/// Returns nullopt when fewer than two groups exist or neither draft matches
/// the gold result. Throws Error(LengthMismatch).
std::optional<MergeTrainingSample> build_merge_training_sample(
    const TaskRecord& task, const std::vector<ParsedCandidate>& candidates,
    const std::vector<ExecutionOutcome>& outcomes, const ExecutionOutcome& gold,
    const TruncationLimits& limits = {});

nlohmann::json to_json(const NormalizedSample& s);
/// Includes the rendered merge prompt under "prompt".
nlohmann::json to_json(const MergeTrainingSample& s);

}  // namespace slmsql
