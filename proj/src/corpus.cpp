#include "slmsql/corpus.hpp"

#include "slmsql/consensus.hpp"
#include "slmsql/error.hpp"
#include "slmsql/text.hpp"

namespace slmsql {

std::string_view to_string(RejectRule r) noexcept {
    switch (r) {
        case RejectRule::NoSelect: return "no_select";
        case RejectRule::DuplicateSqlInCot: return "duplicate_sql_in_cot";
        case RejectRule::CommentMarker: return "comment_marker";
        case RejectRule::PromptTooLong: return "prompt_too_long";
    }
    return "no_select";
}

std::size_t estimate_prompt_tokens(std::string_view text) {
    std::size_t chars = 0;
    for (unsigned char c : text) {
        if ((c & 0xC0) != 0x80) ++chars;
    }
    return (chars + 3) / 4;
}

std::optional<std::string> final_sql_of(std::string_view cot) {
    // Already in <think>/<answer> form.
    const auto parsed = parse_model_output(cot);
    if (parsed.format_ok) return parsed.answer_sql;
    if (auto span = text::locate_final_sql(cot)) return span->sql;
    return std::nullopt;
}

FilterVerdict filter_training_sample(const RawTrainingSample& sample, std::size_t token_limit) {
    const auto sql = final_sql_of(sample.cot);
    if (!sql || !text::starts_with_keyword(*sql, "select")) return Reject{RejectRule::NoSelect};

    const std::string needle = text::collapse_whitespace(*sql);
    if (text::count_occurrences(text::collapse_whitespace(sample.cot), needle) >= 2)
        return Reject{RejectRule::DuplicateSqlInCot};

    if (sql->find("--") != std::string::npos) return Reject{RejectRule::CommentMarker};

    const auto prompt = render_generation_prompt(prompt_input(sample.task));
    if (estimate_prompt_tokens(prompt) > token_limit) return Reject{RejectRule::PromptTooLong};
    return Accept{};
}

std::string render_think_answer(std::string_view think, std::string_view answer_sql) {
    std::string out;
    out.reserve(think.size() + answer_sql.size() + 40);
    out += "<think>";
    out += think;
    out += "</think>\n<answer>";
    out += answer_sql;
    out += "</answer>";
    return out;
}

NormalizedSample normalize_cot(const RawTrainingSample& sample) {
    NormalizedSample out;
    out.task = sample.task;
    const auto parsed = parse_model_output(sample.cot);
    if (parsed.format_ok) {
        out.think = *parsed.think;
        out.answer_sql = *parsed.answer_sql;
    } else {
        const auto span = text::locate_final_sql(sample.cot);
        if (!span)
            throw Error(ErrorCode::NoSqlFound, "no SQL statement in CoT of task " + sample.task.task_id);
        out.think = std::string(text::trim(std::string_view(sample.cot).substr(0, span->begin)));
        out.answer_sql = span->sql;
    }
    out.rendered = render_think_answer(out.think, out.answer_sql);
    return out;
}

std::optional<MergeTrainingSample> build_merge_training_sample(
    const TaskRecord& task, const std::vector<ParsedCandidate>& candidates,
    const std::vector<ExecutionOutcome>& outcomes, const ExecutionOutcome& gold,
    const TruncationLimits& limits) {
    const auto groups = group_candidates(candidates, outcomes);
    if (groups.size() < 2) return std::nullopt;
    const auto& a = groups[0];
    const auto& b = groups[1];

    MergeTrainingSample s;
    if (gold.ok() && a.fingerprint == *gold.fingerprint)
        s.label_sql = a.representative_sql;
    else if (gold.ok() && b.fingerprint == *gold.fingerprint)
        s.label_sql = b.representative_sql;
    else
        return std::nullopt;

    s.task = task;
    s.draft_a = a.representative_sql;
    s.exec_a = truncate_exec_result(outcomes[a.first_index()], limits);
    s.draft_b = b.representative_sql;
    s.exec_b = truncate_exec_result(outcomes[b.first_index()], limits);
    return s;
}

nlohmann::json to_json(const NormalizedSample& s) {
    auto j = to_json(s.task);
    j["think"] = s.think;
    j["answer_sql"] = s.answer_sql;
    j["prompt"] = render_generation_prompt(prompt_input(s.task));
    j["rendered"] = s.rendered;
    return j;
}

nlohmann::json to_json(const MergeTrainingSample& s) {
    auto j = to_json(s.task);
    j["draft_a"] = s.draft_a;
    j["exec_a"] = s.exec_a;
    j["draft_b"] = s.draft_b;
    j["exec_b"] = s.exec_b;
    j["label_sql"] = s.label_sql;
    j["prompt"] = render_merge_prompt({prompt_input(s.task), s.draft_a, s.exec_a, s.draft_b, s.exec_b});
    return j;
}

}  // namespace slmsql
