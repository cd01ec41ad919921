#include "slmsql/prompts.hpp"

#include <array>
#include <charconv>
#include <cstdio>
#include <utility>

#include "slmsql/text.hpp"

namespace slmsql {

namespace detail {
// Defined in the generated prompt_assets.cpp.
extern const char* const kGenerationTemplate;
extern const char* const kMergeTemplate;
}  // namespace detail

namespace {

std::string_view without_final_newline(std::string_view s) {
    if (!s.empty() && s.back() == '\n') s.remove_suffix(1);
    return s;
}

using Binding = std::pair<std::string_view, std::string_view>;

// Single pass: substituted values are never rescanned for placeholders.
template <std::size_t N>
std::string substitute(std::string_view tpl, const std::array<Binding, N>& bindings) {
    std::string out;
    out.reserve(tpl.size() + 256);
    std::size_t i = 0;
    while (i < tpl.size()) {
        if (tpl[i] == '{') {
            bool matched = false;
            for (const auto& [name, value] : bindings) {
                if (tpl.compare(i + 1, name.size(), name) == 0 &&
                    i + 1 + name.size() < tpl.size() && tpl[i + 1 + name.size()] == '}') {
                    out.append(value);
                    i += name.size() + 2;
                    matched = true;
                    break;
                }
            }
            if (matched) continue;
        }
        out.push_back(tpl[i++]);
    }
    return out;
}

std::string drop_evidence_line(std::string_view tpl) {
    std::string s(tpl);
    const std::string line = "{EVIDENCE}\n";
    if (auto pos = s.find(line); pos != std::string::npos) s.erase(pos, line.size());
    return s;
}

std::string python_str(std::string_view s) {
    const bool has_single = s.find('\'') != std::string_view::npos;
    const bool has_double = s.find('"') != std::string_view::npos;
    const char q = (has_single && !has_double) ? '"' : '\'';
    std::string out(1, q);
    for (unsigned char c : s) {
        switch (c) {
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            case '\t': out += "\\t"; break;
            default:
                if (c == static_cast<unsigned char>(q)) {
                    out += '\\';
                    out += static_cast<char>(c);
                } else if (c < 0x20 || c == 0x7f) {
                    char buf[8];
                    std::snprintf(buf, sizeof buf, "\\x%02x", c);
                    out += buf;
                } else {
                    out += static_cast<char>(c);
                }
        }
    }
    out += q;
    return out;
}

std::string python_value(const Cell& cell) {
    switch (cell.index()) {
        case 0: return "None";
        case 1: return std::to_string(std::get<std::int64_t>(cell));
        case 2: {
            char buf[64];
            const auto res = std::to_chars(buf, buf + sizeof buf, std::get<double>(cell));
            std::string s(buf, res.ptr);
            if (s.find_first_of(".eni") == std::string::npos) s += ".0";
            return s;
        }
        case 3: return python_str(std::get<std::string>(cell));
        default: {
            std::string out = "b'";
            for (auto b : std::get<Blob>(cell)) {
                char buf[8];
                std::snprintf(buf, sizeof buf, "\\x%02x", b);
                out += buf;
            }
            out += '\'';
            return out;
        }
    }
}

}  // namespace

std::string_view generation_template() { return detail::kGenerationTemplate; }
std::string_view merge_template() { return detail::kMergeTemplate; }

GenerationPromptInput prompt_input(const TaskRecord& task) {
    GenerationPromptInput in{task.schema_ddl, std::nullopt, task.question};
    if (task.evidence && !text::trim(*task.evidence).empty()) in.evidence = task.evidence;
    return in;
}

std::string render_generation_prompt(const GenerationPromptInput& input) {
    std::string tpl(without_final_newline(generation_template()));
    if (!input.evidence) tpl = drop_evidence_line(tpl);
    const std::array<Binding, 3> bindings{{
        {"DATABASE SCHEMA", input.schema_ddl},
        {"EVIDENCE", input.evidence ? std::string_view(*input.evidence) : std::string_view{}},
        {"QUESTION", input.question},
    }};
    return substitute(tpl, bindings);
}

std::string render_merge_prompt(const MergePromptInput& input) {
    std::string tpl(without_final_newline(merge_template()));
    if (!input.base.evidence) tpl = drop_evidence_line(tpl);
    const auto& base = input.base;
    const std::array<Binding, 7> bindings{{
        {"DATABASE SCHEMA", base.schema_ddl},
        {"EVIDENCE", base.evidence ? std::string_view(*base.evidence) : std::string_view{}},
        {"QUESTION", base.question},
        {"PREDICT_SQL1", input.draft_a},
        {"EXECUTE_RESULT1", input.exec_a_rendered},
        {"PREDICT_SQL2", input.draft_b},
        {"EXECUTE_RESULT2", input.exec_b_rendered},
    }};
    return substitute(tpl, bindings);
}

std::string render_rows(const ResultFingerprint& fp, std::size_t max_rows) {
    std::string out = "[";
    const std::size_t n = std::min(max_rows, fp.rows.size());
    for (std::size_t r = 0; r < n; ++r) {
        if (r > 0) out += ", ";
        out += '(';
        const auto& row = fp.rows[r];
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c > 0) out += ", ";
            out += python_value(row[c]);
        }
        if (row.size() == 1) out += ',';
        out += ')';
    }
    out += ']';
    return out;
}

std::string truncate_exec_result(const ExecutionOutcome& outcome, const TruncationLimits& limits) {
    std::string body;
    bool cut = false;
    switch (outcome.status) {
        case ExecStatus::Timeout:
            return "TIMEOUT";
        case ExecStatus::Error:
            body = "ERROR: " +
                   std::string(to_string(outcome.error_kind.value_or(ExecErrorKind::Runtime))) +
                   ": " + outcome.message;
            break;
        case ExecStatus::Success:
            body = render_rows(*outcome.fingerprint, limits.max_rows);
            cut = outcome.fingerprint->rows.size() > limits.max_rows;
            break;
    }
    if (body.size() > limits.max_chars) {
        body = std::string(text::utf8_prefix(body, limits.max_chars));
        cut = true;
    }
    if (cut) body += kTruncationMarker;
    return body;
}

}  // namespace slmsql
