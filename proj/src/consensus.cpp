#include "slmsql/consensus.hpp"

#include <algorithm>
#include <chrono>
#include <unordered_map>

#include "slmsql/error.hpp"

namespace slmsql {

namespace {

using Clock = std::chrono::steady_clock;

std::int64_t ms_since(Clock::time_point t) {
    return std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - t).count();
}

std::vector<std::size_t> histogram(const std::vector<CandidateGroup>& groups) {
    std::vector<std::size_t> out;
    out.reserve(groups.size());
    for (const auto& g : groups) out.push_back(g.votes);
    return out;
}

std::vector<std::size_t> to_index_vector(const nlohmann::json& j, const char* key) {
    if (!j.contains(key)) return {};
    return j.at(key).get<std::vector<std::size_t>>();
}

}  // namespace

std::vector<CandidateGroup> group_candidates(const std::vector<ParsedCandidate>& candidates,
                                             const std::vector<ExecutionOutcome>& outcomes) {
    if (candidates.size() != outcomes.size())
        throw Error(ErrorCode::LengthMismatch,
                    "candidates (" + std::to_string(candidates.size()) + ") and outcomes (" +
                        std::to_string(outcomes.size()) + ") differ in length");
    std::vector<CandidateGroup> groups;
    std::unordered_map<std::string, std::size_t> by_key;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        if (!outcomes[i].ok()) continue;
        const auto& fp = *outcomes[i].fingerprint;
        auto [it, inserted] = by_key.try_emplace(fp.canonical, groups.size());
        if (inserted) {
            CandidateGroup g;
            g.fingerprint = fp;
            g.representative_sql = candidates[i].answer_sql.value_or("");
            groups.push_back(std::move(g));
        }
        auto& g = groups[it->second];
        g.member_indices.push_back(i);
        ++g.votes;
    }
    std::sort(groups.begin(), groups.end(), [](const CandidateGroup& a, const CandidateGroup& b) {
        if (a.votes != b.votes) return a.votes > b.votes;
        return a.first_index() < b.first_index();
    });
    return groups;
}

VoteOutcome decide_vote(const std::vector<CandidateGroup>& groups, const VotePolicy& policy) {
    VoteOutcome out;
    if (groups.empty()) return out;
    std::size_t total = 0;
    for (const auto& g : groups) total += g.votes;
    const bool dominant = groups.size() == 1 ||
                          (policy.dominance_threshold < 1.0 &&
                           static_cast<double>(groups.front().votes) >=
                               policy.dominance_threshold * static_cast<double>(total));
    if (dominant) {
        out.kind = VoteKind::Consistent;
        out.winner = groups.front();
    } else {
        out.kind = VoteKind::Contested;
        out.top_two = std::make_pair(groups[0], groups[1]);
    }
    return out;
}

std::optional<std::size_t> pick_merge_winner(const std::vector<CandidateGroup>& merge_groups,
                                             const std::pair<CandidateGroup, CandidateGroup>& drafts) {
    if (merge_groups.empty()) return std::nullopt;
    auto preference = [&](const CandidateGroup& g) {
        if (g.fingerprint == drafts.first.fingerprint) return 0;
        if (g.fingerprint == drafts.second.fingerprint) return 1;
        return 2;
    };
    std::size_t best = 0;
    for (std::size_t i = 1; i < merge_groups.size(); ++i) {
        const auto& a = merge_groups[i];
        const auto& b = merge_groups[best];
        if (a.votes != b.votes) {
            if (a.votes > b.votes) best = i;
            continue;
        }
        const int pa = preference(a);
        const int pb = preference(b);
        if (pa < pb || (pa == pb && a.first_index() < b.first_index())) best = i;
    }
    return best;
}

std::string_view to_string(Stage s) noexcept {
    switch (s) {
        case Stage::Sc: return "sc";
        case Stage::CscMerge: return "csc_merge";
        case Stage::Fallback: return "fallback";
    }
    return "fallback";
}

Stage parse_stage(std::string_view s) {
    if (s == "sc") return Stage::Sc;
    if (s == "csc_merge") return Stage::CscMerge;
    if (s == "fallback") return Stage::Fallback;
    throw Error(ErrorCode::ParseError, "unknown stage '" + std::string(s) + "'");
}

nlohmann::json to_json(const Prediction& p) {
    return {
        {"task_id", p.task_id},
        {"final_sql", p.final_sql},
        {"stage", std::string(to_string(p.stage))},
        {"n_gen", p.n_gen},
        {"n_merge", p.n_merge},
        {"vote_histogram", p.vote_histogram},
        {"merge_vote_histogram", p.merge_vote_histogram},
        {"n_exec_failed", p.n_exec_failed},
        {"gen_indices", p.gen_indices},
        {"merge_indices", p.merge_indices},
        {"gen_time_ms", p.gen_time_ms},
        {"merge_time_ms", p.merge_time_ms},
        {"wall_time_ms", p.wall_time_ms},
    };
}

Prediction prediction_from_json(const nlohmann::json& j) {
    try {
        Prediction p;
        if (j.at("task_id").is_number_integer())
            p.task_id = std::to_string(j.at("task_id").get<long long>());
        else
            p.task_id = j.at("task_id").get<std::string>();
        p.final_sql = j.value("final_sql", std::string{});
        p.stage = parse_stage(j.value("stage", std::string("fallback")));
        p.n_gen = j.value("n_gen", std::size_t{0});
        p.n_merge = j.value("n_merge", std::size_t{0});
        p.vote_histogram = to_index_vector(j, "vote_histogram");
        p.merge_vote_histogram = to_index_vector(j, "merge_vote_histogram");
        p.n_exec_failed = j.value("n_exec_failed", std::size_t{0});
        p.gen_indices = to_index_vector(j, "gen_indices");
        p.merge_indices = to_index_vector(j, "merge_indices");
        p.gen_time_ms = j.value("gen_time_ms", std::int64_t{0});
        p.merge_time_ms = j.value("merge_time_ms", std::int64_t{0});
        p.wall_time_ms = j.value("wall_time_ms", std::int64_t{0});
        return p;
    } catch (const nlohmann::json::exception& ex) {
        throw Error(ErrorCode::ParseError, std::string("malformed prediction: ") + ex.what());
    }
}

std::vector<ExecutionOutcome> execute_candidates(const DatabaseRef& db,
                                                 const std::vector<ParsedCandidate>& candidates,
                                                 const ExecutorOptions& opts,
                                                 std::size_t parallelism) {
    std::vector<std::string> sqls;
    sqls.reserve(candidates.size());
    for (const auto& c : candidates) sqls.push_back(c.answer_sql.value_or(""));
    return execute_batch(db, sqls, opts, parallelism);
}

Prediction run_csc(const TaskRecord& task, const DatabaseRegistry& registry,
                   CompletionSource& gen_source, CompletionSource& merge_source,
                   const CscConfig& cfg, CscMetrics* metrics, CscTrace* trace) {
    const auto start = Clock::now();
    const DatabaseRef& db = registry.at(task.db_id);
    const GenerationPromptInput base = prompt_input(task);

    Prediction pred;
    pred.task_id = task.task_id;

    const auto raws = gen_source.complete(render_generation_prompt(base), cfg.gen);
    std::vector<ParsedCandidate> candidates;
    candidates.reserve(raws.size());
    for (const auto& r : raws) candidates.push_back(parse_model_output(r));
    auto outcomes = execute_candidates(db, candidates, cfg.exec, cfg.exec_parallelism);
    pred.n_gen = candidates.size();
    pred.n_exec_failed = static_cast<std::size_t>(
        std::count_if(outcomes.begin(), outcomes.end(), [](const auto& o) { return !o.ok(); }));
    if (metrics) metrics->gen_completions += candidates.size();

    const auto groups = group_candidates(candidates, outcomes);
    pred.vote_histogram = histogram(groups);
    const VoteOutcome vote = decide_vote(groups, cfg.vote);
    pred.gen_time_ms = ms_since(start);

    switch (vote.kind) {
        case VoteKind::Consistent:
            pred.final_sql = vote.winner->representative_sql;
            pred.gen_indices = vote.winner->member_indices;
            pred.stage = Stage::Sc;
            break;
        case VoteKind::Contested: {
            const auto& [draft_a, draft_b] = *vote.top_two;
            if (!cfg.merge_enabled) {
                pred.final_sql = draft_a.representative_sql;
                pred.gen_indices = draft_a.member_indices;
                pred.stage = Stage::Sc;
                break;
            }
            const auto merge_start = Clock::now();
            const auto& rep_a = outcomes[draft_a.first_index()];
            const auto& rep_b = outcomes[draft_b.first_index()];
            const MergePromptInput merge_in{base, draft_a.representative_sql,
                                            truncate_exec_result(rep_a, cfg.limits),
                                            draft_b.representative_sql,
                                            truncate_exec_result(rep_b, cfg.limits)};
            const auto merge_raws = merge_source.complete(render_merge_prompt(merge_in), cfg.merge);
            std::vector<ParsedCandidate> revisions;
            revisions.reserve(merge_raws.size());
            for (const auto& r : merge_raws) revisions.push_back(parse_model_output(r));
            const auto merge_outcomes =
                execute_candidates(db, revisions, cfg.exec, cfg.exec_parallelism);
            if (metrics) metrics->merge_completions += revisions.size();
            const auto merge_groups = group_candidates(revisions, merge_outcomes);
            pred.n_merge = revisions.size();
            pred.merge_vote_histogram = histogram(merge_groups);
            pred.stage = Stage::CscMerge;
            if (auto best = pick_merge_winner(merge_groups, *vote.top_two)) {
                pred.final_sql = merge_groups[*best].representative_sql;
                pred.merge_indices = merge_groups[*best].member_indices;
            } else {
                // No revision executed; keep the higher-vote draft.
                pred.final_sql = draft_a.representative_sql;
                pred.gen_indices = draft_a.member_indices;
            }
            pred.merge_time_ms = ms_since(merge_start);
            break;
        }
        case VoteKind::Abstain:
            pred.stage = Stage::Fallback;
            for (std::size_t i = 0; i < candidates.size(); ++i) {
                if (candidates[i].answer_sql) {
                    pred.final_sql = *candidates[i].answer_sql;
                    pred.gen_indices = {i};
                    break;
                }
            }
            break;
    }

    if (metrics) {
        ++metrics->tasks;
        switch (pred.stage) {
            case Stage::Sc: ++metrics->sc; break;
            case Stage::CscMerge: ++metrics->csc_merge; break;
            case Stage::Fallback: ++metrics->fallback; break;
        }
    }
    if (trace) {
        trace->candidates = std::move(candidates);
        trace->outcomes = std::move(outcomes);
    }
    pred.wall_time_ms = ms_since(start);
    return pred;
}

}  // namespace slmsql
