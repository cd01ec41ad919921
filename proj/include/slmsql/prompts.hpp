#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include "slmsql/executor.hpp"
#include "slmsql/task.hpp"

namespace slmsql {

struct GenerationPromptInput {
    std::string schema_ddl;
    std::optional<std::string> evidence;
    std::string question;
};

struct MergePromptInput {
    GenerationPromptInput base;
    std::string draft_a;
    std::string exec_a_rendered;
    std::string draft_b;
    std::string exec_b_rendered;
};

struct TruncationLimits {
    std::size_t max_rows = 10;
    std::size_t max_chars = 1000;
};

inline constexpr std::string_view kTruncationMarker = " … (truncated)";

/// Raw template assets (assets/prompts/*.txt), embedded at build time.
std::string_view generation_template();
std::string_view merge_template();

/// Empty or whitespace-only evidence counts as absent.
GenerationPromptInput prompt_input(const TaskRecord& task);

std::string render_generation_prompt(const GenerationPromptInput& input);
std::string render_merge_prompt(const MergePromptInput& input);

/// Python-style rendering of a result: [('a', 1), ('b', None)].
std::string render_rows(const ResultFingerprint& fp, std::size_t max_rows);

/// Execution result text for merge prompts, cut to `limits` and suffixed with
/// kTruncationMarker when anything was dropped.
std::string truncate_exec_result(const ExecutionOutcome& outcome, const TruncationLimits& limits = {});

}  // namespace slmsql
